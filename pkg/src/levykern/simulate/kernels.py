"""Path kernels: compiled per-path loop and vectorized numpy fallback.

Both kernels consume each path's SplitMix64 stream in the same order:
  subordinated modes   Kanter uniforms or Poisson/jump uniforms, then
                       ceil(d/2) Box-Muller pairs for the Brownian step;
  perturbed mode       Poisson uniforms, per jump one radial uniform and
                       the direction uniforms, then the Gaussian pairs.
Path i is seeded with base_seed XOR splitmix(i), so runs are reproducible
and paths with the same index are coupled across domains and start points.

Modes: 0 stable subordinator, 1 sum of two stable subordinators,
2 compound-Poisson subordinator with drift, 3 direct jumps plus Gaussian,
4 the index-1/2 stable subordinator via S_h = h^2 / (2 N^2), which makes
the step h G/|N| with G, N independent normals (d + 1 normals per step);
in d = 1 that ratio is a Cauchy variable, drawn as tan(pi (U - 1/2)).
Domain kinds: 0 ball, 1 annulus, 2 union of intervals.

fpar layout: beta1, beta2, scale1, scale2, drift_h, chunk_mean,
n_chunks, sigma_axis, slope.
"""
from __future__ import annotations

import math

import numpy as np

from .._accel import njit, prange

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
S30, S27, S31, S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
INV53 = 2.0 ** -53
POISSON_CAP = 100000
TWO_PI = 2.0 * math.pi


# -- scalar building blocks (compiled) --------------------------------------

@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


@njit(cache=True)
def _uniform(st):
    st[0] += GOLDEN
    z = _mix(st[0])
    return (np.float64(z >> S11) + 0.5) * INV53


@njit(cache=True)
def _kanter(beta, u, v):
    th = math.pi * u
    e = -math.log(v)
    ls = (math.log(math.sin(beta * th)) - math.log(math.sin(th)) / beta
          + (1.0 - beta) / beta * (math.log(math.sin((1.0 - beta) * th)) - math.log(e)))
    return math.exp(ls)


@njit(cache=True)
def _poisson(st, chunk_mean, n_chunks):
    emm = math.exp(-chunk_mean)
    total = 0
    for _ in range(n_chunks):
        u = _uniform(st)
        k = 0
        p = emm
        F = p
        while u > F and k < POISSON_CAP:
            k += 1
            p *= chunk_mean / k
            F += p
        total += k
    return total


@njit(cache=True)
def _invert(nls, lx, slope, u):
    y = -math.log(u)
    n = nls.shape[0]
    j = np.searchsorted(nls, y)
    if j <= 0:
        return math.exp(lx[0])
    if j >= n:
        return math.exp(lx[n - 1] + (y - nls[n - 1]) / slope)
    w = (y - nls[j - 1]) / (nls[j] - nls[j - 1])
    return math.exp(lx[j - 1] + w * (lx[j] - lx[j - 1]))


@njit(cache=True)
def _gauss(st, g, d):
    for j in range(0, d, 2):
        u1 = _uniform(st)
        u2 = _uniform(st)
        r = math.sqrt(-2.0 * math.log(u1))
        a = TWO_PI * u2
        g[j] = r * math.cos(a)
        if j + 1 < d:
            g[j + 1] = r * math.sin(a)


@njit(cache=True)
def _direction(st, g, d):
    if d == 1:
        g[0] = -1.0 if _uniform(st) < 0.5 else 1.0
    elif d == 2:
        a = TWO_PI * _uniform(st)
        g[0] = math.cos(a)
        g[1] = math.sin(a)
    elif d == 3:
        z = 2.0 * _uniform(st) - 1.0
        a = TWO_PI * _uniform(st)
        s = math.sqrt(max(0.0, 1.0 - z * z))
        g[0] = s * math.cos(a)
        g[1] = s * math.sin(a)
        g[2] = z
    else:
        _gauss(st, g, d)
        nrm = 0.0
        for k in range(d):
            nrm += g[k] * g[k]
        nrm = math.sqrt(nrm)
        for k in range(d):
            g[k] /= nrm


@njit(cache=True)
def _inside(y, kind, dpar, ints):
    d = y.shape[0]
    if kind == 2:
        v = y[0]
        for k in range(ints.shape[0]):
            if ints[k, 0] < v < ints[k, 1]:
                return True
        return False
    r2 = 0.0
    for k in range(d):
        dz = y[k] - dpar[k]
        r2 += dz * dz
    if kind == 0:
        return r2 < dpar[d] * dpar[d]
    return dpar[d] * dpar[d] < r2 < dpar[d + 1] * dpar[d + 1]


@njit(cache=True)
def _one_path(i, seed, start, mode, fpar, nls, lx, kind, dpar, ints, n_steps, h,
              rec, targets, trad2, exit_step, pos, occ):
    d = start.shape[0]
    st = np.empty(1, dtype=np.uint64)
    st[0] = seed ^ _mix(np.uint64(i) + GOLDEN)
    y = start.copy()
    g = np.empty(d)
    dirn = np.empty(d)
    n_rec = rec.shape[0]
    nt = targets.shape[0]
    rp = 0
    while rp < n_rec and rec[rp] == 0:
        for k in range(d):
            pos[i, rp, k] = y[k]
        rp += 1
    b1, b2, sc1, sc2 = fpar[0], fpar[1], fpar[2], fpar[3]
    drift, cmean, nch, sig, slope = fpar[4], fpar[5], int(fpar[6]), fpar[7], fpar[8]
    gg = np.empty(d + 1)
    for step in range(1, n_steps + 1):
        if mode == 4 and d == 1:
            y[0] += sc1 * math.tan(math.pi * (_uniform(st) - 0.5))
        elif mode == 4:
            _gauss(st, gg, d + 1)
            w = sc1 / abs(gg[0])
            for k in range(d):
                y[k] += w * gg[k + 1]
        elif mode == 3:
            nj = _poisson(st, cmean, nch)
            for _ in range(nj):
                rho = _invert(nls, lx, slope, _uniform(st))
                _direction(st, dirn, d)
                for k in range(d):
                    y[k] += rho * dirn[k]
            _gauss(st, g, d)
            for k in range(d):
                y[k] += sig * g[k]
        else:
            if mode == 0:
                u = _uniform(st)
                v = _uniform(st)
                ds = sc1 * _kanter(b1, u, v)
            elif mode == 1:
                u = _uniform(st)
                v = _uniform(st)
                ds = sc1 * _kanter(b1, u, v)
                u = _uniform(st)
                v = _uniform(st)
                ds += sc2 * _kanter(b2, u, v)
            else:
                nj = _poisson(st, cmean, nch)
                ds = drift
                for _ in range(nj):
                    ds += _invert(nls, lx, slope, _uniform(st))
            _gauss(st, g, d)
            w = math.sqrt(2.0 * ds)
            for k in range(d):
                y[k] += w * g[k]
        if not _inside(y, kind, dpar, ints):
            exit_step[i] = step
            return
        if rp < n_rec and rec[rp] == step:
            for k in range(d):
                pos[i, rp, k] = y[k]
            rp += 1
        for m in range(nt):
            r2 = 0.0
            for k in range(d):
                dz = y[k] - targets[m, k]
                r2 += dz * dz
            if r2 < trad2[m]:
                occ[i, m] += h
    exit_step[i] = n_steps + 1


@njit(cache=True, parallel=True)
def run_compiled(n, seed, start, mode, fpar, nls, lx, kind, dpar, ints, n_steps, h,
                 rec, targets, trad2, exit_step, pos, occ):
    # paths write disjoint rows, so the parallel loop is deterministic
    for i in prange(n):
        _one_path(i, seed, start, mode, fpar, nls, lx, kind, dpar, ints, n_steps, h,
                  rec, targets, trad2, exit_step, pos, occ)


# -- vectorized numpy fallback ------------------------------------------------

def _mix_v(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


class _Streams:
    """Per-path SplitMix64 states, advanced only for the selected paths."""

    def __init__(self, seed, n):
        with np.errstate(over="ignore"):
            self.s = np.uint64(seed) ^ _mix_v(np.arange(n, dtype=np.uint64) + GOLDEN)

    def uniform(self, idx):
        with np.errstate(over="ignore"):
            st = self.s[idx] + GOLDEN
            self.s[idx] = st
            z = _mix_v(st)
        return ((z >> S11).astype(np.float64) + 0.5) * INV53


def _kanter_v(beta, u, v):
    th = math.pi * u
    e = -np.log(v)
    ls = (np.log(np.sin(beta * th)) - np.log(np.sin(th)) / beta
          + (1.0 - beta) / beta * (np.log(np.sin((1.0 - beta) * th)) - np.log(e)))
    return np.exp(ls)


def _poisson_v(rs, idx, chunk_mean, n_chunks):
    emm = math.exp(-chunk_mean)
    total = np.zeros(idx.shape[0], dtype=np.int64)
    for _ in range(n_chunks):
        u = rs.uniform(idx)
        k = np.zeros(idx.shape[0], dtype=np.int64)
        p = np.full(idx.shape[0], emm)
        F = p.copy()
        need = u > F
        while need.any():
            k[need] += 1
            p[need] *= chunk_mean / k[need]
            F[need] += p[need]
            need = (u > F) & (k < POISSON_CAP)
        total += k
    return total


def _invert_v(nls, lx, slope, u):
    n = nls.shape[0]
    y = -np.log(u)
    j = np.searchsorted(nls, y)
    jc = np.clip(j, 1, n - 1)
    w = (y - nls[jc - 1]) / (nls[jc] - nls[jc - 1])
    out = lx[jc - 1] + w * (lx[jc] - lx[jc - 1])
    out = np.where(j >= n, lx[n - 1] + (y - nls[n - 1]) / slope, out)
    return np.exp(np.where(j <= 0, lx[0], out))


def _gauss_v(rs, idx, d):
    g = np.empty((idx.shape[0], d))
    for j in range(0, d, 2):
        u1 = rs.uniform(idx)
        u2 = rs.uniform(idx)
        r = np.sqrt(-2.0 * np.log(u1))
        a = TWO_PI * u2
        g[:, j] = r * np.cos(a)
        if j + 1 < d:
            g[:, j + 1] = r * np.sin(a)
    return g


def _direction_v(rs, idx, d):
    if d == 1:
        return np.where(rs.uniform(idx) < 0.5, -1.0, 1.0)[:, None]
    if d == 2:
        a = TWO_PI * rs.uniform(idx)
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if d == 3:
        z = 2.0 * rs.uniform(idx) - 1.0
        a = TWO_PI * rs.uniform(idx)
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([s * np.cos(a), s * np.sin(a), z], axis=1)
    g = _gauss_v(rs, idx, d)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _inside_v(y, kind, dpar, ints):
    d = y.shape[1]
    if kind == 2:
        v = y[:, 0]
        ok = np.zeros(v.shape[0], dtype=bool)
        for lo, hi in ints:
            ok |= (lo < v) & (v < hi)
        return ok
    r2 = np.zeros(y.shape[0])
    for k in range(d):
        dz = y[:, k] - dpar[k]
        r2 += dz * dz
    if kind == 0:
        return r2 < dpar[d] * dpar[d]
    return (dpar[d] * dpar[d] < r2) & (r2 < dpar[d + 1] * dpar[d + 1])


def run_numpy(n, seed, start, mode, fpar, nls, lx, kind, dpar, ints, n_steps, h,
              rec, targets, trad2, exit_step, pos, occ):
    d = start.shape[0]
    rs = _Streams(seed, n)
    y = np.tile(start, (n, 1))
    alive = np.arange(n)
    b1, b2, sc1, sc2 = fpar[0], fpar[1], fpar[2], fpar[3]
    drift, cmean, nch, sig, slope = fpar[4], fpar[5], int(fpar[6]), fpar[7], fpar[8]
    rec_index = {int(s): r for r, s in enumerate(rec)}
    if 0 in rec_index:
        pos[:, rec_index[0], :] = start
    for step in range(1, n_steps + 1):
        if alive.shape[0] == 0:
            break
        idx = alive
        ya = y[idx]
        if mode == 4 and d == 1:
            ya[:, 0] += sc1 * np.tan(math.pi * (rs.uniform(idx) - 0.5))
        elif mode == 4:
            gg = _gauss_v(rs, idx, d + 1)
            ya += (sc1 / np.abs(gg[:, 0]))[:, None] * gg[:, 1:]
        elif mode == 3:
            nj = _poisson_v(rs, idx, cmean, nch)
            for j in range(int(nj.max(initial=0))):
                sel = nj > j
                sub = idx[sel]
                rho = _invert_v(nls, lx, slope, rs.uniform(sub))
                ya[sel] += rho[:, None] * _direction_v(rs, sub, d)
            ya += sig * _gauss_v(rs, idx, d)
        else:
            if mode == 0:
                u = rs.uniform(idx)
                v = rs.uniform(idx)
                ds = sc1 * _kanter_v(b1, u, v)
            elif mode == 1:
                u = rs.uniform(idx)
                v = rs.uniform(idx)
                ds = sc1 * _kanter_v(b1, u, v)
                u = rs.uniform(idx)
                v = rs.uniform(idx)
                ds = ds + sc2 * _kanter_v(b2, u, v)
            else:
                nj = _poisson_v(rs, idx, cmean, nch)
                ds = np.full(idx.shape[0], drift)
                for j in range(int(nj.max(initial=0))):
                    sel = nj > j
                    ds[sel] += _invert_v(nls, lx, slope, rs.uniform(idx[sel]))
            g = _gauss_v(rs, idx, d)
            ya += np.sqrt(2.0 * ds)[:, None] * g
        y[idx] = ya
        ok = _inside_v(ya, kind, dpar, ints)
        exit_step[idx[~ok]] = step
        alive = idx[ok]
        ya = ya[ok]
        r = rec_index.get(step)
        if r is not None:
            pos[alive, r, :] = ya
        for m in range(targets.shape[0]):
            r2 = np.sum((ya - targets[m]) ** 2, axis=1)
            occ[alive[r2 < trad2[m]], m] += h
    exit_step[alive] = n_steps + 1
