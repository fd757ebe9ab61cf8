"""Ratio-spread verification of two-sided estimates.

A two-sided estimate f ~ g holds with some constants iff the ratio f/g
stays inside a bounded band. Each ``verify_*`` function evaluates an
empirical (or numerical) quantity and an analytic shape on a grid and
returns a :class:`RatioReport` whose ``spread`` (max ratio / min ratio) is
the quantity to keep bounded and refinement-stable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .errors import ConfigError, DomainError
from .geometry import Domain
from .levy_kernel import ProcessSpec
from .simulate import (MCEstimate, PathConfig, ball_volume, green_from_batch,
                       lambda1_from_batch, pD_from_batch, run_paths)

REL_CUT = 0.3
HK_SHAPES = ("global", "factorized", "c11")
LT_VARIANTS = ("survival", "boundary")


@dataclass
class RatioPoint:
    """One grid point: empirical value, its stderr and the analytic shape.

    ``x`` and ``y`` are coordinate tuples; ``y`` is empty for one-point
    quantities such as survival probabilities.
    """

    t: float
    x: tuple
    y: tuple
    empirical: float
    stderr: float
    shape: float

    @property
    def ratio(self) -> float:
        if self.shape > 0 and math.isfinite(self.shape):
            return self.empirical / self.shape
        return math.nan

    def included(self, rel_cut=REL_CUT) -> bool:
        r = self.ratio
        if not (math.isfinite(r) and r > 0):
            return False
        return self.stderr <= rel_cut * self.empirical


@dataclass
class RatioReport:
    """Ratios empirical/shape on a grid with their spread.

    Points with stderr/value above ``rel_cut`` (or a non-positive ratio) are
    excluded from the spread and counted in ``n_excluded``.
    """

    name: str
    grid: dict
    points: list
    rel_cut: float = REL_CUT
    cap: float | None = None
    refinement: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def included_points(self):
        return [q for q in self.points if q.included(self.rel_cut)]

    @property
    def n_excluded(self) -> int:
        return len(self.points) - len(self.included_points)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([q.ratio for q in self.included_points])

    @property
    def min_ratio(self) -> float:
        r = self.ratios
        return float(r.min()) if r.size else math.nan

    @property
    def max_ratio(self) -> float:
        r = self.ratios
        return float(r.max()) if r.size else math.nan

    @property
    def spread(self) -> float:
        r = self.ratios
        return float(r.max() / r.min()) if r.size else math.nan

    @property
    def passed(self) -> bool:
        s = self.spread
        if not math.isfinite(s):
            return False
        return self.cap is None or s <= self.cap

    def summary(self) -> str:
        cap = "" if self.cap is None else f" cap={self.cap:g}"
        return (f"{self.name}: points={len(self.points)} excluded={self.n_excluded} "
                f"min={self.min_ratio:.4g} max={self.max_ratio:.4g} "
                f"spread={self.spread:.4g}{cap} {'PASS' if self.passed else 'FAIL'}")


def refinement_delta(base: RatioReport, refined: RatioReport) -> float:
    """Relative change of the spread, |spread'/spread - 1|."""
    return abs(refined.spread / base.spread - 1.0)


def record_refinement(base: RatioReport, refined: RatioReport, label: str) -> float:
    delta = refinement_delta(base, refined)
    base.refinement[label] = delta
    return delta


def cross_report(a: RatioReport, b: RatioReport, name: str, cap=None) -> RatioReport:
    """Ratio of the shapes of two reports on their common included points."""
    keep_b = {(q.t, q.x, q.y) for q in b.included_points}
    pts = []
    bmap = {(q.t, q.x, q.y): q for q in b.points}
    for q in a.included_points:
        key = (q.t, q.x, q.y)
        if key in keep_b:
            pts.append(RatioPoint(q.t, q.x, q.y, q.shape, 0.0, bmap[key].shape))
    return RatioReport(name, {"from": (a.name, b.name)}, pts, cap=cap)


# ---------------------------------------------------------------------------
# grids and run caches


def _coords(x) -> tuple:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))


def _point(D: Domain, x):
    c = _coords(x)
    return c[0] if D.d == 1 else np.array(c)


def default_t_grid():
    return (0.05, 0.1, 0.5)


def default_x_grid(D: Domain, depths=(0.02, 0.1, 0.5, 0.75)):
    """Nine points for an interval (a, b): given depths from each end plus the middle.

    Depths are scaled by the half-length. Balls and annuli get the same
    depths along the first axis from the outer boundary (and from the inner
    one for annuli) plus the center or mid-radius point.
    """
    if D.kind == "intervals":
        lo, hi = D.parts[0]
        half = (hi - lo) / 2.0
        left = [lo + s * half for s in depths]
        right = [hi - s * half for s in reversed(depths)]
        return left + [lo + half] + right
    c = np.asarray(D.center)
    e = np.zeros(D.d)
    e[0] = 1.0
    if D.kind == "ball":
        R = D.radius
        pts = [c + (R - s * R) * e for s in depths]
        pts += [c - (R - s * R) * e for s in depths]
        return [c.copy()] + pts
    half = (D.r_out - D.r_in) / 2.0
    pts = [c + (D.r_in + s * half) * e for s in depths]
    pts += [c + (D.r_out - s * half) * e for s in depths]
    return pts + [c + (D.r_in + half) * e]


class RunCache:
    """Batch runs keyed by starting point, shared between verifications.

    All runs use the same PathConfig, so paths with the same index are
    coupled across starting points.
    """

    def __init__(self, p: ProcessSpec, D: Domain, cfg: PathConfig, record_times=(),
                 use_numba=None):
        self.p, self.D, self.cfg = p, D, cfg
        self.record_times = tuple(sorted(set(float(t) for t in record_times)))
        self.use_numba = use_numba
        self._runs = {}

    def batch(self, x, targets=(), radii=()):
        key = (_coords(x), tuple(map(_coords, targets)), tuple(float(r) for r in radii))
        if key not in self._runs:
            self._runs[key] = run_paths(self.p, self.D, _point(self.D, x), self.cfg,
                                        record_times=self.record_times, targets=targets,
                                        target_radii=radii, use_numba=self.use_numba)
        return self._runs[key]

    def survival(self, x, t) -> MCEstimate:
        b = self.batch(x)
        q = b.survival(self.cfg.step_of(t))
        n = self.cfg.n_paths
        return MCEstimate(q, math.sqrt(q * (1 - q) / n), n, self.cfg, {"t": t})

    def pD(self, x, t, cells, width):
        return pD_from_batch(self.batch(x), t, cells, width)


def _cell_width(D: Domain, points, width):
    if width is not None:
        return float(width)
    depth = min(float(np.min(D.delta(np.atleast_1d(_point(D, y))))) for y in points)
    return min(0.02, depth)


def _cache(p, D, cfg, times, runs, use_numba):
    if runs is None:
        return RunCache(p, D, cfg, times, use_numba)
    missing = set(float(t) for t in times) - set(runs.record_times)
    if missing:
        raise ConfigError(f"run cache lacks record times {sorted(missing)}")
    return runs


# ---------------------------------------------------------------------------
# heat kernel and survival


def verify_heat_kernel(p: ProcessSpec, D: Domain, t_grid, point_grid, shape: str,
                       cfg: PathConfig, cell_width=None, runs=None, use_numba=None,
                       cap=None, c4=None) -> RatioReport:
    """p_D(t, x, y) estimates against a heat kernel shape on all grid pairs.

    shape: "global" (free-space shape), "factorized" (survival probabilities
    times the global shape, with the survival estimates of the same runs) or
    "c11" (boundary-decay form).
    """
    if shape not in HK_SHAPES:
        raise ConfigError(f"shape must be one of {HK_SHAPES}, got {shape!r}")
    runs = _cache(p, D, cfg, t_grid, runs, use_numba)
    w = _cell_width(D, point_grid, cell_width)
    cells = np.array([_coords(y) for y in point_grid])
    pts = []
    for t in t_grid:
        for x in point_grid:
            ests = runs.pD(x, t, cells, w)
            sx = runs.survival(x, t).value if shape == "factorized" else None
            for y, e in zip(point_grid, ests):
                xp, yp = _point(D, x), _point(D, y)
                if shape == "global":
                    s = bounds.global_shape(p, t, bounds._dist(xp, yp)).value
                elif shape == "factorized":
                    s = bounds.factorization_shape(p, D, t, xp, yp, sx,
                                                   runs.survival(y, t).value).value
                else:
                    s = bounds.c11_shape(p, D, t, xp, yp, c4=c4).value
                pts.append(RatioPoint(float(t), _coords(x), _coords(y), e.value, e.stderr, s))
    grid = {"t": tuple(map(float, t_grid)), "points": tuple(map(_coords, point_grid)),
            "cell_width": w}
    return RatioReport(f"heat kernel ({shape})", grid, pts, cap=cap)


def verify_survival(p: ProcessSpec, D: Domain, t_grid, x_grid, cfg: PathConfig, runs=None,
                    use_numba=None, cap=None) -> RatioReport:
    """Survival estimates against (1 min Phi(delta_D(x))/t)^(1/2)."""
    runs = _cache(p, D, cfg, t_grid, runs, use_numba)
    pts = []
    for t in t_grid:
        for x in x_grid:
            e = runs.survival(x, t)
            s = bounds.survival_shape(p, D, t, _point(D, x))
            pts.append(RatioPoint(float(t), _coords(x), (), e.value, e.stderr, s))
    grid = {"t": tuple(map(float, t_grid)), "points": tuple(map(_coords, x_grid))}
    return RatioReport("survival", grid, pts, cap=cap)


# ---------------------------------------------------------------------------
# Green function


GREEN_SHAPES = ("general", "C69", "C610", "example75")


def green_shape_value(p, D, x, y, shape="general", T=None) -> float:
    if shape == "general":
        return bounds.green_shape(p, D, x, y).value
    if shape in bounds.CONDITIONS:
        return bounds.green_shape_special(p, D, x, y, shape, T=T).value
    if shape == "example75":
        return bounds.example75_green_shape(p, D, x, y).value
    raise ConfigError(f"Green shape must be one of {GREEN_SHAPES}, got {shape!r}")


def default_ball_eps(D: Domain, x, y) -> float:
    """Target radius small against both |x - y| and delta_D(y)."""
    r = bounds._dist(x, y)
    return min(0.02, 0.25 * min(D.delta(y), r))


def verify_green(p: ProcessSpec, D: Domain, pair_grid, cfg: PathConfig, shape="general",
                 ball_eps=None, use_numba=None, cap=None) -> RatioReport:
    """Occupation-density estimates of G_D(x, y) against a Green shape.

    One run per distinct x accumulates occupation of every target ball at
    once. The horizon should be long enough that few paths survive it; the
    largest surviving fraction is reported in ``extra``.
    """
    by_x = {}
    for x, y in pair_grid:
        by_x.setdefault(_coords(x), []).append(_coords(y))
    pts = []
    worst_alive = 0.0
    for xc, ys in by_x.items():
        xp = _point(D, xc)
        radii = [ball_eps if ball_eps is not None else default_ball_eps(D, xp, _point(D, y))
                 for y in ys]
        b = run_paths(p, D, xp, cfg, targets=ys, target_radii=radii, use_numba=use_numba)
        for m, (y, eps) in enumerate(zip(ys, radii)):
            e = green_from_batch(b, m, eps)
            worst_alive = max(worst_alive, e.extra["horizon_survival"])
            s = green_shape_value(p, D, xp, _point(D, y), shape)
            pts.append(RatioPoint(cfg.horizon, xc, y, e.value, e.stderr, s))
    grid = {"pairs": tuple((tuple(x), tuple(y)) for x, ys in by_x.items() for y in ys),
            "shape": shape}
    return RatioReport(f"green ({shape})", grid, pts, cap=cap,
                       extra={"horizon_survival": worst_alive})


@dataclass
class GreenConsistency:
    """Occupation estimator against the time sum of histogram estimates."""

    occupation: MCEstimate
    time_sum: MCEstimate
    paired_stderr: float

    @property
    def z(self) -> float:
        """Difference in units of the combined stderr."""
        se = math.hypot(self.occupation.stderr, self.time_sum.stderr)
        return abs(self.occupation.value - self.time_sum.value) / se if se > 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.z <= 3.0


def green_consistency(p: ProcessSpec, D: Domain, x, y, ball_eps, cfg: PathConfig,
                      every=10, use_numba=None) -> GreenConsistency:
    """Compare G-hat with sum_k p-hat_D(t_k, x, y) dt on the coarse grid t_k = k * every * h.

    Both estimators use the same ball B(y, ball_eps) as the histogram cell
    and the same paths; they differ by the time discretization of the sum.
    """
    dt = every * cfg.h
    times = dt * np.arange(1, int(cfg.n_steps // every) + 1)
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    b = run_paths(p, D, x, cfg, record_times=times, targets=[yv], target_radii=[ball_eps],
                  use_numba=use_numba)
    vol = ball_volume(D.d, ball_eps)
    occ = green_from_batch(b, 0, ball_eps)
    with np.errstate(invalid="ignore"):
        inside = np.sum((b.positions - yv) ** 2, axis=2) < ball_eps ** 2
    per_path = inside.sum(axis=1) * dt / vol
    n = cfg.n_paths
    ts = MCEstimate(float(per_path.mean()), float(per_path.std(ddof=1) / math.sqrt(n)), n, cfg)
    diff = b.occupation[:, 0] / vol - per_path
    return GreenConsistency(occ, ts, float(diff.std(ddof=1) / math.sqrt(n)))


# ---------------------------------------------------------------------------
# large time


def verify_large_time(p: ProcessSpec, D: Domain, t_grid, point_grid, cfg: PathConfig,
                      variant="boundary", lam1=None, t_large=3.0, cell_width=None,
                      runs=None, use_numba=None, cap=None) -> RatioReport:
    """p_D(t, x, y) for t >= t_large against exp(-lam1 t) times boundary factors.

    variant "survival" uses P_x(tau > 1) P_y(tau > 1) from the same runs;
    "boundary" uses Phi(delta_D(x))^(1/2) Phi(delta_D(y))^(1/2). Without
    ``lam1`` the eigenvalue is estimated from the run of the first grid point.
    """
    if variant not in LT_VARIANTS:
        raise ConfigError(f"variant must be one of {LT_VARIANTS}")
    if min(t_grid) < t_large:
        raise ConfigError(f"t_grid must start at or after t_large={t_large}")
    runs = _cache(p, D, cfg, t_grid, runs, use_numba)
    lam_est = None
    if lam1 is None:
        lam_est = lambda1_from_batch(runs.batch(point_grid[0]), t_grid)
        lam1 = lam_est.value
    w = cell_width if cell_width is not None else _cell_width(D, point_grid, None)
    cells = np.array([_coords(y) for y in point_grid])
    pts = []
    for t in t_grid:
        for x in point_grid:
            ests = runs.pD(x, t, cells, w)
            for y, e in zip(point_grid, ests):
                xp, yp = _point(D, x), _point(D, y)
                if variant == "boundary":
                    s = bounds.large_time_shape(p, D, t, xp, yp, lam1, t_large=t_large).value
                else:
                    s = (runs.survival(x, 1.0).value * runs.survival(y, 1.0).value
                         * math.exp(-lam1 * t))
                pts.append(RatioPoint(float(t), _coords(x), _coords(y), e.value, e.stderr, s))
    grid = {"t": tuple(map(float, t_grid)), "points": tuple(map(_coords, point_grid)),
            "cell_width": w, "t_large": t_large}
    extra = {"lambda1": lam1}
    if lam_est is not None:
        extra["lambda1_stderr"] = lam_est.stderr
    return RatioReport(f"large time ({variant})", grid, pts, cap=cap, extra=extra)


# ---------------------------------------------------------------------------
# h_T


def admissible_grid(p, T, n_a=24, n_r=24, decades_a=6.0, decades_r=6.0):
    """Log-spaced (a, r) pairs inside the admissible region of h_T."""
    r_max, a_max = bounds.admissible_region(p, T)
    a_vals = a_max * np.logspace(-decades_a, 0.0, n_a)
    r_vals = r_max * np.logspace(-decades_r, 0.0, n_r)
    return [(float(a), float(r)) for a in a_vals for r in r_vals]


def verify_hT(p, T, grid, rtol=1e-10, cap=None) -> RatioReport:
    """h_T_numeric / h_T_closed on (a, r) pairs; stderr is zero."""
    pts = []
    for a, r in grid:
        num = bounds.h_T_numeric(p, a, r, T, rtol=rtol)
        clo = bounds.h_T_closed(p, a, r).value
        pts.append(RatioPoint(float(T), (float(a),), (float(r),), num, 0.0, clo))
    return RatioReport("h_T", {"T": float(T), "n": len(pts), "rtol": rtol}, pts, cap=cap)
