"""Monte Carlo estimators built on batch path runs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError, InsufficientSignalError
from ..geometry import Domain
from ..levy_kernel import ProcessSpec
from .engine import MCEstimate, PathConfig, run_paths


def ball_volume(d: int, r: float) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r ** d


@dataclass
class KilledPath:
    """One simulated path: status, exit step and positions on the grid.

    positions has one row per grid time 0, h, ... while the path is in D;
    a killed path has exit_step rows.
    """

    status: str
    exit_step: int
    positions: np.ndarray


def simulate_killed_path(p: ProcessSpec, D: Domain, x, cfg: PathConfig, rng=0) -> KilledPath:
    """Simulate a single killed path; ``rng`` selects the path stream index.

    The path is the stream of index ``rng`` of a batch with cfg.base_seed, so
    it is identical to path ``rng`` of any batch run with the same config.
    """
    i = int(rng)
    if i < 0:
        raise ConfigError("path index must be >= 0")
    sub = cfg.replace(n_paths=i + 1)
    times = np.arange(cfg.n_steps + 1) * cfg.h
    batch = run_paths(p, D, x, sub, record_times=times)
    k = int(batch.exit_step[i])
    if k > cfg.n_steps:
        return KilledPath("alive", k, batch.positions[i].copy())
    # positions are recorded only while the path is inside D
    return KilledPath("killed", k, batch.positions[i, :k].copy())


def _binomial(q, n, cfg, **extra):
    se = math.sqrt(max(q * (1.0 - q), 0.0) / n)
    return MCEstimate(float(q), se, int(n), cfg, dict(extra))


def survival_from_batch(batch, t: float) -> MCEstimate:
    cfg = batch.config
    q = batch.survival(cfg.step_of(t))
    return _binomial(q, cfg.n_paths, cfg, t=t)


def estimate_survival(p: ProcessSpec, D: Domain, x, t: float, cfg: PathConfig) -> MCEstimate:
    """Fraction of paths from x still in D at time t, with binomial stderr."""
    if t > cfg.horizon * (1 + 1e-12):
        raise ConfigError(f"t={t} exceeds the horizon {cfg.horizon}")
    return survival_from_batch(run_paths(p, D, x, cfg), t)


def _cell_hits(pos, centers, width):
    """Boolean (n_paths, n_cells) membership of positions in half-open cubes."""
    lo = centers - 0.5 * width
    hi = centers + 0.5 * width
    P = pos[:, None, :]
    with np.errstate(invalid="ignore"):
        return np.all((P >= lo[None]) & (P < hi[None]), axis=2)


def pD_from_batch(batch, t: float, centers, width: float):
    cfg = batch.config
    r = int(np.searchsorted(batch.record_steps, cfg.step_of(t)))
    pos = batch.positions[:, r, :]
    d = pos.shape[1]
    centers = np.asarray(centers, dtype=float).reshape(-1, d)
    vol = width ** d
    counts = _cell_hits(pos, centers, width).sum(axis=0)
    n = cfg.n_paths
    out = []
    for c in counts:
        q = c / n
        se = math.sqrt(q * (1.0 - q) / n) / vol
        out.append(MCEstimate(float(q / vol), se, n, cfg, {"t": t, "count": int(c)}))
    return out


def estimate_pD(p: ProcessSpec, D: Domain, t: float, x, cell_centers, cell_width: float,
                cfg: PathConfig):
    """Histogram estimate of p_D(t, x, .) on cubes of side cell_width.

    Each entry is (alive paths ending in the cell) / (n * cell volume).
    """
    if not cell_width > 0:
        raise ConfigError("cell_width must be > 0")
    batch = run_paths(p, D, x, cfg, record_times=[t])
    return pD_from_batch(batch, t, cell_centers, cell_width)


def estimate_green(p: ProcessSpec, D: Domain, x, y, ball_eps: float, cfg: PathConfig) -> MCEstimate:
    """Occupation density of B(y, ball_eps) before killing, up to the horizon.

    ``extra["horizon_survival"]`` is the fraction of paths still alive at the
    horizon; the truncated tail is at most that fraction times the largest
    expected remaining occupation density.
    """
    if not ball_eps > 0:
        raise ConfigError("ball_eps must be > 0")
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    if not D.contains(yv if D.d > 1 else float(yv[0])):
        raise DomainError("y must lie in D")
    if np.allclose(np.atleast_1d(x), yv):
        raise DomainError("x and y must differ")
    batch = run_paths(p, D, x, cfg, targets=[yv], target_radii=[ball_eps])
    return green_from_batch(batch, 0, ball_eps)


def green_from_batch(batch, m: int, ball_eps: float) -> MCEstimate:
    cfg = batch.config
    d = batch.positions.shape[2]
    w = batch.occupation[:, m] / ball_volume(d, ball_eps)
    n = cfg.n_paths
    return MCEstimate(float(w.mean()), float(w.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0, n,
                      cfg, {"horizon_survival": batch.survival(cfg.n_steps)})


def estimate_exit_time(p: ProcessSpec, D: Domain, x, cfg: PathConfig) -> MCEstimate:
    """Mean first grid exit time; paths alive at the horizon count as the horizon."""
    batch = run_paths(p, D, x, cfg)
    tau = np.minimum(batch.exit_step, cfg.n_steps) * cfg.h
    n = cfg.n_paths
    return MCEstimate(float(tau.mean()), float(tau.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
                      n, cfg, {"censored": int(np.sum(batch.exit_step > cfg.n_steps))})


def lambda1_from_batch(batch, t_grid) -> MCEstimate:
    cfg = batch.config
    t = np.asarray(t_grid, dtype=float)
    if t.size < 2 or np.any(np.diff(t) <= 0):
        raise ConfigError("t_grid must be increasing with at least two points")
    n = cfg.n_paths
    S = np.array([batch.survival(cfg.step_of(tk)) for tk in t])
    if S[-1] < 10.0 / n:
        raise InsufficientSignalError(
            f"survival {S[-1]:.3g} at t={t[-1]} is below 10/n = {10.0 / n:.3g}")
    y = -np.log(S)
    w = (t - t.mean()) / np.sum((t - t.mean()) ** 2)
    slope = float(w @ y)
    # Cov(log S_i, log S_j) = (1/S_min(i,j) - 1)/n for coupled paths, t_i <= t_j
    idx = np.arange(t.size)
    first = np.minimum.outer(idx, idx)
    cov = (1.0 / S[first] - 1.0) / n
    se = math.sqrt(max(float(w @ cov @ w), 0.0))
    return MCEstimate(slope, se, n, cfg, {"t_grid": tuple(t.tolist()), "survival": tuple(S.tolist())})


def estimate_lambda1(p: ProcessSpec, D: Domain, x, t_grid, cfg: PathConfig,
                     t_large: float = 3.0) -> MCEstimate:
    """Least-squares slope of -log survival over t_grid, delta-method stderr.

    ``t_large`` is the large-time threshold; it is a configuration knob and
    is echoed in ``extra``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.min() < t_large:
        raise ConfigError(f"t_grid must start at or after t_large={t_large}")
    est = lambda1_from_batch(run_paths(p, D, x, cfg), t)
    est.extra["t_large"] = t_large
    return est
