"""Batch path simulation with killing on exit."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import _accel
from ..errors import ConfigError, DomainError
from ..geometry import Domain
from ..levy_kernel import ProcessSpec
from . import kernels, tables

POISSON_CHUNK = 30.0


@dataclass(frozen=True)
class PathConfig:
    """Time grid, path count and seed of a Monte Carlo run.

    Attributes
    ----------
    h : float
        Time step; killing is checked on the grid k h.
    horizon : float
        Last simulated time T.
    n_paths : int
    base_seed : int
        64-bit seed; path i uses the stream base_seed XOR splitmix(i).
    eps : float
        Small-jump cutoff for the compound-Poisson samplers.
    """

    h: float = 1e-3
    horizon: float = 1.0
    n_paths: int = 10000
    base_seed: int = 0
    eps: float = 1e-4

    def __post_init__(self):
        if not (self.h > 0 and self.horizon > 0):
            raise ConfigError("h and horizon must be > 0")
        if self.h > self.horizon * (1 + 1e-12):
            raise ConfigError(f"step h={self.h} exceeds horizon {self.horizon}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ConfigError("n_paths must be a positive integer")
        if not self.eps > 0:
            raise ConfigError("small-jump cutoff eps must be > 0")
        if not 0 <= int(self.base_seed) < 2 ** 64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.h - 1e-9))

    def step_of(self, t: float) -> int:
        """Grid index of time t; t must lie on the grid up to rounding."""
        k = int(round(t / self.h))
        if abs(k * self.h - t) > 1e-9 * max(1.0, t):
            raise ConfigError(f"time {t} is not a multiple of h={self.h}")
        if k > self.n_steps:
            raise ConfigError(f"time {t} exceeds the horizon {self.horizon}")
        return k

    def replace(self, **kw) -> "PathConfig":
        d = asdict(self)
        d.update(kw)
        return PathConfig(**d)


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo estimate with its standard error."""

    value: float
    stderr: float
    n: int
    config: PathConfig
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError("stderr must be >= 0")

    @property
    def rel_stderr(self) -> float:
        return self.stderr / abs(self.value) if self.value else math.inf


@dataclass
class PathBatch:
    """Raw outcome of a batch run.

    exit_step[i] is the first grid index with the path outside D, or
    n_steps + 1 when the path survives the horizon. positions[i, r] is the
    position at record_steps[r] (NaN once killed); occupation[i, m] is the
    grid-time spent in target ball m.
    """

    exit_step: np.ndarray
    positions: np.ndarray
    record_steps: np.ndarray
    occupation: np.ndarray
    config: PathConfig
    backend: str

    def alive_at(self, step: int) -> np.ndarray:
        return self.exit_step > step

    def survival(self, step: int) -> float:
        return float(np.mean(self.exit_step > step))


def _process_plan(p: ProcessSpec, cfg: PathConfig):
    """Mode code, parameter vector and jump table for the kernels."""
    f, h = p.f, cfg.h
    fpar = np.zeros(9)
    nls = np.zeros(2)
    lx = np.array([0.0, 1.0])
    table = None
    if not p.is_sbm:
        mode = 3
        table = tables.radial_table(p, cfg.eps)
        fpar[7] = math.sqrt(h * tables.small_jump_variance(p, cfg.eps) / p.d)
    elif f.family == "stable" and f.alpha == 1.0:
        mode = 4
        fpar[0] = 0.5
        fpar[2] = h
    elif f.family == "stable":
        mode = 0
        fpar[0] = f.index
        fpar[2] = h ** (1.0 / f.index)
    elif f.family == "mixed":
        mode = 1
        fpar[0], fpar[1] = f.index, f.beta / 2.0
        fpar[2], fpar[3] = h ** (1.0 / fpar[0]), h ** (1.0 / fpar[1])
    else:
        mode = 2
        table = tables.subordinator_table(f, cfg.eps)
        fpar[4] = h * tables.drift_below(f, cfg.eps)
    if table is not None:
        mean = h * table.rate
        chunks = max(1, int(math.ceil(mean / POISSON_CHUNK)))
        fpar[5], fpar[6], fpar[8] = mean / chunks, chunks, table.slope
        nls, lx = table.neg_log_s, table.log_x
    return mode, fpar, nls, lx


def _domain_plan(D: Domain):
    if D.kind == "intervals":
        return 2, np.zeros(2), np.asarray(D.parts, dtype=float)
    c = list(D.center)
    if D.kind == "ball":
        return 0, np.array(c + [D.radius]), np.zeros((1, 2))
    return 1, np.array(c + [D.r_in, D.r_out]), np.zeros((1, 2))


def pick_backend(mode: int, d: int, use_numba=None) -> bool:
    """True for the compiled kernel.

    ``LEVYKERN_NO_NUMBA`` wins, then an explicit ``use_numba``, then
    ``LEVYKERN_BACKEND``. In auto mode the one-dimensional runs with a fixed
    number of draws per step (exact stable and mixed subordinators) go to numpy, whose vectorized transcendental
    functions beat the scalar compiled loop there; everything else, where
    the per-path jump count varies or d >= 2, is compiled.
    """
    if use_numba is not None:
        return bool(use_numba) and _accel.USE_NUMBA
    if _accel.BACKEND != "auto":
        return _accel.BACKEND == "numba"
    return not (d == 1 and mode in (0, 1, 4))


def run_paths(p: ProcessSpec, D: Domain, x, cfg: PathConfig, record_times=(),
              targets=(), target_radii=(), use_numba=None) -> PathBatch:
    """Simulate cfg.n_paths killed paths from x.

    Parameters
    ----------
    record_times : sequence of float
        Grid times at which positions are stored.
    targets, target_radii : points and radii of balls whose occupation time
        is accumulated along each path.
    use_numba : bool, optional
        Force the compiled (True) or numpy (False) kernel for this call;
        by default :func:`pick_backend` decides.
    """
    if p.d != D.d:
        raise DomainError(f"process dimension {p.d} does not match domain dimension {D.d}")
    start = np.atleast_1d(np.asarray(x, dtype=float)).reshape(D.d)
    if not D.contains(start if D.d > 1 else float(start[0])):
        raise DomainError("starting point must lie in D")
    rec = np.array(sorted({cfg.step_of(t) for t in record_times}), dtype=np.int64)
    tg = np.asarray(targets, dtype=float).reshape(-1, D.d)
    trad2 = np.asarray(target_radii, dtype=float).reshape(-1) ** 2
    if tg.shape[0] != trad2.shape[0]:
        raise ConfigError("targets and target_radii differ in length")
    mode, fpar, nls, lx = _process_plan(p, cfg)
    kind, dpar, ints = _domain_plan(D)
    n = int(cfg.n_paths)
    exit_step = np.zeros(n, dtype=np.int64)
    pos = np.full((n, rec.shape[0], D.d), np.nan)
    occ = np.zeros((n, tg.shape[0]))
    use = pick_backend(mode, D.d, use_numba)
    run = kernels.run_compiled if use else kernels.run_numpy
    run(n, np.uint64(int(cfg.base_seed)), start, mode, fpar, nls, lx, kind, dpar, ints,
        cfg.n_steps, float(cfg.h), rec, tg, trad2, exit_step, pos, occ)
    return PathBatch(exit_step, pos, rec, occ, cfg, _accel.backend_name(use))
