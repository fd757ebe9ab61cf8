"""Inverse-CDF tables for jump sizes above a cutoff.

A table stores the normalized tail S(x) = N(x)/N(eps) on a log-spaced grid
starting at the cutoff, as (-log S, log x) pairs; sampling interpolates
linearly in log-log and extends the last panel as a Pareto tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import interpolate, integrate

from .. import bernstein as bf
from ..errors import QuadratureError
from ..levy_kernel import ProcessSpec, bump_profile, jump_density_j, sphere_area

TABLE_SIZE = 4096
_FLOOR = 1e-16


@dataclass(frozen=True)
class TailTable:
    """Normalized jump-size tail with its total rate.

    Attributes
    ----------
    rate : float
        Total intensity of jumps at or above ``x[0]``.
    neg_log_s : ndarray
        -log S on the grid, strictly increasing from 0.
    log_x : ndarray
        log of the grid points.
    slope : float
        d(-log S)/d(log x) on the last panel, used beyond the table.
    """

    rate: float
    neg_log_s: np.ndarray
    log_x: np.ndarray
    slope: float

    def sample(self, u):
        """Jump sizes for uniforms ``u`` in (0, 1], by inversion."""
        return np.exp(invert_log(self.neg_log_s, self.log_x, self.slope, np.log(u)))


def invert_log(neg_log_s, log_x, slope, log_u):
    """log x with S(x) = u, vectorized; mirrors the compiled kernel."""
    y = -np.asarray(log_u, dtype=float)
    j = np.searchsorted(neg_log_s, y, side="left")
    n = neg_log_s.shape[0]
    jc = np.clip(j, 1, n - 1)
    w = (y - neg_log_s[jc - 1]) / (neg_log_s[jc] - neg_log_s[jc - 1])
    inner = log_x[jc - 1] + w * (log_x[jc] - log_x[jc - 1])
    outer = log_x[n - 1] + (y - neg_log_s[n - 1]) / slope
    out = np.where(j >= n, outer, inner)
    return np.where(j <= 0, log_x[0], out)


def _from_tail(x, tail):
    """Normalize a tail sampled on an increasing grid into a TailTable."""
    x = np.asarray(x, dtype=float)
    tail = np.asarray(tail, dtype=float)
    rate = float(tail[0])
    if not (math.isfinite(rate) and rate > 0):
        raise QuadratureError(f"jump tail mass is not positive and finite ({rate})")
    s = tail / rate
    keep = np.isfinite(s) & (s > _FLOOR)
    x, s = x[keep], s[keep]
    nls = -np.log(s)
    nls[0] = 0.0
    # drop numerically flat stretches so the inversion stays well posed
    mono = np.concatenate([[True], np.diff(nls) > 1e-14])
    x, nls = x[mono], nls[mono]
    if len(x) < 2:
        raise QuadratureError("jump tail table collapsed to fewer than two points")
    lx = np.log(x)
    slope = (nls[-1] - nls[-2]) / (lx[-1] - lx[-2])
    return TailTable(rate, nls, lx, float(slope))


def _decades(beta):
    # enough decades for a t^-beta tail to fall below the table floor
    return min(80.0, 16.0 / beta + 2.0)


def _smooth_on_grid(fn, x_fine, n_coarse=257):
    """Evaluate fn on a coarse log grid and spline log fn onto x_fine.

    Points where fn fails or underflows end the coarse grid; the fine grid
    gets zero beyond it.
    """
    lx = np.log(x_fine)
    coarse = np.linspace(lx[0], lx[-1], n_coarse)
    vals = []
    for u in coarse:
        try:
            v = float(fn(math.exp(u)))
        except (QuadratureError, ArithmeticError, ValueError):
            break
        if not (math.isfinite(v) and v > 1e-300):
            break
        vals.append(math.log(v))
    m = len(vals)
    if m < 4:
        raise QuadratureError("too few valid points to tabulate the jump tail")
    spline = interpolate.CubicSpline(coarse[:m], np.array(vals))
    out = np.zeros_like(x_fine)
    inside = lx <= coarse[m - 1]
    out[inside] = np.exp(spline(lx[inside]))
    return out


@lru_cache(maxsize=64)
def subordinator_table(f: bf.BernsteinFunction, eps: float) -> TailTable:
    """Tail table of subordinator jumps larger than ``eps``."""
    x = eps * np.logspace(0.0, _decades(f.index), TABLE_SIZE)
    if f.family == "logstable":
        tail = _smooth_on_grid(lambda t: bf.tail_mass(f, t), x)
        tail[0] = bf.tail_mass(f, eps)
    else:
        with np.errstate(under="ignore"):
            tail = np.asarray(bf.tail_mass(f, x))
    return _from_tail(x, tail)


@lru_cache(maxsize=64)
def drift_below(f: bf.BernsteinFunction, eps: float) -> float:
    """m(eps): mean subordinator displacement from jumps below eps per unit time."""
    return float(bf.small_jump_mean(f, eps))


def _jx_on_grid(p: ProcessSpec, rho):
    if p.f.family in ("stable", "mixed"):
        j = np.asarray(jump_density_j(p, rho))
    else:
        j = _smooth_on_grid(lambda r: jump_density_j(p, r), rho)
    if not p.is_sbm:
        j = j * (1.0 - 0.5 * bump_profile(rho, p.bump_eps))
    return j


@lru_cache(maxsize=64)
def radial_table(p: ProcessSpec, eps: float) -> TailTable:
    """Tail table of |jump| for the d-dimensional jumps of size >= eps.

    The radial law has density area * rho^{d-1} j_X(rho); panels are
    integrated exactly for a density that is a power law within each panel,
    so pure stable tails carry no discretization error.
    """
    beta = min(p.f.alpha, p.f.beta) if p.f.family == "mixed" else p.f.alpha
    rho = eps * np.logspace(0.0, _decades(beta / 2.0) / 2.0 + 1.0, TABLE_SIZE)
    e = p.bump_eps
    if not p.is_sbm and eps < 1.0 + e:
        extra = np.linspace(max(eps, 1.0 - e), 1.0 + e, 257)
        rho = np.unique(np.concatenate([rho, extra]))
    g = sphere_area(p.d) * rho ** p.d * _jx_on_grid(p, rho)
    u = np.log(rho)
    du = np.diff(u)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lg = np.log(g)
        s = np.diff(lg) / du
        sd = s * du
        factor = np.where(np.abs(sd) < 1e-8, 1.0 + 0.5 * sd, np.expm1(sd) / sd)
        panel = np.where((g[:-1] > 0) & (g[1:] > 0), g[:-1] * du * factor,
                         0.5 * (g[:-1] + g[1:]) * du)
    s_last = s[-1] if np.isfinite(s[-1]) else -math.inf
    far = g[-1] / (-s_last) if s_last < 0 else 0.0
    tail = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]]) + far
    return _from_tail(rho, tail)


@lru_cache(maxsize=64)
def small_jump_variance(p: ProcessSpec, eps: float) -> float:
    """sigma^2(eps) = int_{|z|<eps} |z|^2 J_X(z) dz (the whole vector, not per axis)."""
    area = sphere_area(p.d)
    f = p.f
    if f.family in ("stable", "mixed") and (p.is_sbm or eps <= 1.0 - p.bump_eps):
        from ..levy_kernel import stable_jump_constant
        out = area * stable_jump_constant(p.d, f.alpha) * eps ** (2 - f.alpha) / (2 - f.alpha)
        if f.family == "mixed":
            out += area * stable_jump_constant(p.d, f.beta) * eps ** (2 - f.beta) / (2 - f.beta)
        return float(out)
    # integrate rho^{d+2} j_X(rho) in log rho down to eps e^-12; below that
    # the integrand is a power law in rho and its remainder is added exactly
    uu = np.linspace(math.log(eps) - 12.0, math.log(eps), 1025)
    rr = np.exp(uu)
    vals = _jx_on_grid(p, rr) * rr ** (p.d + 2)
    s0 = math.log(vals[1] / vals[0]) / (uu[1] - uu[0])
    rest = vals[0] / s0 if s0 > 0 else 0.0
    return float(area * (integrate.simpson(vals, x=uu) + rest))
