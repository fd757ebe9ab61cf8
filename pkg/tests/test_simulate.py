import math

import numpy as np
import pytest
from scipy import stats

from levykern import ProcessSpec, annulus, ball, free_kernel, intervals, relativistic, stable
from levykern import bounds as bd
from levykern.bernstein import logstable, mixed, phi
from levykern.errors import ConfigError, InsufficientSignalError
from levykern.simulate import (PathConfig, estimate_exit_time, estimate_green, estimate_lambda1,
                               estimate_pD, estimate_survival, lambda1_from_batch, pD_from_batch,
                               run_paths, sample_stable_subordinator, sample_subordinator,
                               simulate_killed_path, survival_from_batch)
from levykern.simulate.tables import small_jump_variance

P1 = ProcessSpec(1, stable(1.0))
I1 = intervals([(-1, 1)])

# pinned with use_numba=False; both backends reproduce it exactly
GOLDEN_SURVIVAL = 0.6479
GOLDEN_CFG = PathConfig(h=1e-3, horizon=0.5, n_paths=20000, base_seed=1)


def cauchy_green_interval(x, y):
    """G_(-1,1)(x, y) of the 1-d Cauchy process."""
    num = 1 - x * y + math.sqrt((1 - x * x) * (1 - y * y))
    return math.log(num / abs(x - y)) / math.pi


def laplace_mc(samples, lam):
    v = np.exp(-lam * samples)
    return v.mean(), v.std(ddof=1) / math.sqrt(v.size)


# ---------------------------------------------------------------------------
# configuration


@pytest.mark.parametrize("kw", [dict(h=2.0, horizon=1.0), dict(n_paths=0), dict(eps=0.0),
                                dict(h=-1e-3), dict(base_seed=-1), dict(n_paths=2.5)])
def test_path_config_validation(kw):
    with pytest.raises(ConfigError):
        PathConfig(**kw)


def test_path_config_steps():
    cfg = PathConfig(h=1e-3, horizon=0.5)
    assert cfg.n_steps == 500 and cfg.step_of(0.25) == 250


# ---------------------------------------------------------------------------
# subordinator samplers


def test_stable_subordinator_positive_and_laplace():
    s = sample_stable_subordinator(1.0, 1.0, rng=np.random.default_rng(0), size=10 ** 6)
    assert np.all(s > 0)
    m, se = laplace_mc(s, 1.0)
    assert abs(m - math.exp(-1.0)) <= 3 * se


def test_stable_subordinator_self_similarity():
    rng = np.random.default_rng(1)
    h, alpha = 0.3, 1.2
    a = sample_stable_subordinator(alpha, h, rng=rng, size=20000)
    b = h ** (2 / alpha) * sample_stable_subordinator(alpha, 1.0, rng=rng, size=20000)
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_relativistic_subordinator_laplace():
    f = relativistic(1.0, 1.0)
    s = sample_subordinator(f, 1.0, 1e-4, rng=np.random.default_rng(2), size=200000)
    for lam in (1.0, 2.0):
        m, se = laplace_mc(s, lam)
        ref = math.exp(-phi(f, lam))
        assert abs(m - ref) <= 3 * se + 0.02 * ref


def test_subordinator_eps_refinement():
    f = relativistic(1.0, 1.0)
    a = sample_subordinator(f, 0.5, 2e-4, rng=np.random.default_rng(3), size=200000)
    b = sample_subordinator(f, 0.5, 1e-4, rng=np.random.default_rng(4), size=200000)
    for lam in (1.0, 4.0):
        ma, sa = laplace_mc(a, lam)
        mb, sb = laplace_mc(b, lam)
        assert abs(ma - mb) <= 3 * math.hypot(sa, sb) + 0.02 * mb


@pytest.mark.parametrize("f", [logstable(1.0, 0.25), mixed(1.5, 0.5)])
def test_subordinator_laplace_other_families(f):
    h = 0.25
    s = sample_subordinator(f, h, 1e-4, rng=np.random.default_rng(5), size=200000)
    m, se = laplace_mc(s, 2.0)
    ref = math.exp(-h * phi(f, 2.0))
    assert abs(m - ref) <= 3 * se + 0.02 * ref


def test_subordinator_additivity():
    f = logstable(1.0, 0.25)
    rng = np.random.default_rng(6)
    whole = sample_subordinator(f, 0.2, 1e-4, rng=rng, size=20000)
    halves = (sample_subordinator(f, 0.1, 1e-4, rng=rng, size=20000)
              + sample_subordinator(f, 0.1, 1e-4, rng=rng, size=20000))
    assert stats.ks_2samp(whole, halves).pvalue > 0.01


def test_stable_sampler_delegation_is_exact():
    a = sample_subordinator(stable(1.0), 0.5, 1e-4, rng=np.random.default_rng(7), size=1000)
    b = sample_stable_subordinator(1.0, 0.5, rng=np.random.default_rng(7), size=1000)
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# killed paths


def test_killed_path_starts_at_x():
    kp = simulate_killed_path(P1, I1, 0.3, GOLDEN_CFG, rng=5)
    assert kp.status in ("alive", "killed")
    assert kp.positions[0, 0] == 0.3
    assert kp.positions.shape == (GOLDEN_CFG.n_steps + 1, 1)


def test_killed_path_matches_batch():
    b = run_paths(P1, I1, 0.0, GOLDEN_CFG.replace(n_paths=16), use_numba=False)
    for i in (0, 7, 15):
        kp = simulate_killed_path(P1, I1, 0.0, GOLDEN_CFG, rng=i)
        assert kp.exit_step == b.exit_step[i]


def test_short_time_survival():
    cfg = PathConfig(h=1e-5, horizon=1e-4, n_paths=10000, base_seed=3)
    s = estimate_survival(ProcessSpec(2, stable(1.0)), ball(1.0, d=2), [0.0, 0.0], 1e-4, cfg)
    assert s.value >= 0.99


def test_survival_golden_and_backends_agree():
    a = run_paths(P1, I1, 0.0, GOLDEN_CFG, use_numba=False)
    b = run_paths(P1, I1, 0.0, GOLDEN_CFG, use_numba=True)
    np.testing.assert_array_equal(a.exit_step, b.exit_step)
    s = survival_from_batch(a, 0.5)
    assert s.value == GOLDEN_SURVIVAL
    assert s.stderr == pytest.approx(math.sqrt(s.value * (1 - s.value) / 20000))


def test_factorization_shape_golden():
    s = survival_from_batch(run_paths(P1, I1, 0.0, GOLDEN_CFG, use_numba=False), 0.5).value
    v = bd.factorization_shape(P1, I1, 0.5, 0.0, 0.0, s, s).value
    assert v == pytest.approx(0.83954882, rel=1e-8)


def test_determinism():
    p = ProcessSpec(2, relativistic(1.0, 1.0))
    cfg = PathConfig(h=1e-2, horizon=0.2, n_paths=300, base_seed=9)
    a = run_paths(p, ball(1.0, d=2), [0.1, 0.2], cfg, record_times=(0.1, 0.2))
    b = run_paths(p, ball(1.0, d=2), [0.1, 0.2], cfg, record_times=(0.1, 0.2))
    np.testing.assert_array_equal(a.exit_step, b.exit_step)
    np.testing.assert_array_equal(a.positions, b.positions)


@pytest.mark.parametrize("p, D, x", [
    (ProcessSpec(2, stable(1.5), "perturbed"), ball(1.0, d=2), [0.2, 0.0]),
    (ProcessSpec(1, logstable(1.0, 0.25)), I1, 0.1),
    (ProcessSpec(1, mixed(1.5, 0.5)), I1, 0.0),
    (ProcessSpec(2, stable(1.0)), annulus(1.0, 2.0), [1.5, 0.0]),
])
def test_backends_agree_on_modes(p, D, x):
    cfg = PathConfig(h=1e-2, horizon=0.3, n_paths=200, base_seed=4)
    a = run_paths(p, D, x, cfg, record_times=(0.3,), use_numba=False)
    b = run_paths(p, D, x, cfg, record_times=(0.3,), use_numba=True)
    np.testing.assert_array_equal(a.exit_step, b.exit_step)
    np.testing.assert_allclose(a.positions, b.positions, rtol=0, atol=1e-12)


def test_h_refinement_stability():
    out = []
    for h in (1e-3, 5e-4):
        cfg = PathConfig(h=h, horizon=0.5, n_paths=40000, base_seed=2)
        out.append(estimate_survival(P1, I1, 0.0, 0.5, cfg))
    assert abs(out[0].value - out[1].value) <= 3 * math.hypot(out[0].stderr, out[1].stderr)


def test_survival_monotone_in_t_and_small_t():
    b = run_paths(P1, I1, 0.5, GOLDEN_CFG)
    s = [survival_from_batch(b, t).value for t in np.arange(0.001, 0.5001, 0.001)]
    assert np.all(np.diff(s) <= 0)
    assert s[0] == pytest.approx(1.0, abs=3 * math.sqrt(1 / 20000) + 1e-3)


# ---------------------------------------------------------------------------
# histogram kernel estimates


def test_pD_partition_sums_to_survival():
    b = run_paths(P1, I1, 0.2, GOLDEN_CFG, record_times=(0.25,))
    w = 0.1
    centers = np.arange(-1 + w / 2, 1, w)[:, None]
    ests = pD_from_batch(b, 0.25, centers, w)
    total = sum(e.value for e in ests) * w
    assert total == pytest.approx(survival_from_batch(b, 0.25).value, abs=1e-12)


def test_pD_symmetry():
    cfg = PathConfig(h=1e-3, horizon=0.2, n_paths=40000, base_seed=5)
    x, y, w = -0.3, 0.4, 0.05
    a = estimate_pD(P1, I1, 0.2, x, np.array([[y]]), w, cfg)[0]
    b = estimate_pD(P1, I1, 0.2, y, np.array([[x]]), w, cfg)[0]
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr)


def test_pD_domain_monotonicity():
    cfg = PathConfig(h=1e-3, horizon=0.3, n_paths=5000, base_seed=6)
    cells = np.array([[-0.4], [0.0], [0.4]])
    small = estimate_pD(P1, intervals([(-0.8, 0.8)]), 0.3, 0.0, cells, 0.1, cfg)
    big = estimate_pD(P1, I1, 0.3, 0.0, cells, 0.1, cfg)
    for s, b in zip(small, big):
        # same seeds: the smaller domain only kills more paths
        assert s.value <= b.value


def test_free_space_kernel():
    cfg = PathConfig(h=1e-3, horizon=0.1, n_paths=40000, base_seed=8)
    w = 0.02
    cells = np.array([[0.0], [0.1], [0.3]])
    ests = estimate_pD(P1, intervals([(-100, 100)]), 0.1, 0.0, cells, w, cfg)
    for c, e in zip(cells[:, 0], ests):
        # cell average of the Cauchy density
        ref = (math.atan((c + w / 2) / 0.1) - math.atan((c - w / 2) / 0.1)) / (math.pi * w)
        assert abs(e.value - ref) <= 3 * e.stderr + 0.01 * ref
        assert free_kernel(P1, 0.1, c) == pytest.approx(0.1 / (math.pi * (0.01 + c * c)), rel=1e-8)


def test_free_space_perturbed():
    p = ProcessSpec(1, stable(1.0), "perturbed")
    cfg = PathConfig(h=1e-3, horizon=0.2, n_paths=20000, base_seed=8)
    w = 0.05
    ests = estimate_pD(p, intervals([(-100, 100)]), 0.2, 0.0, np.array([[0.0], [0.5]]), w, cfg)
    for c, e in zip((0.0, 0.5), ests):
        ref = free_kernel(p, 0.2, c)
        assert abs(e.value - ref) <= 3 * e.stderr + 0.02 * ref


def test_small_jump_variance_stable_closed_form():
    p = ProcessSpec(1, stable(1.0), "perturbed")
    eps = 1e-3
    # int_{|z|<eps} z^2 (1/pi) |z|^-2 dz = 2 eps / pi
    assert small_jump_variance(p, eps) == pytest.approx(2 * eps / math.pi, rel=1e-9)


# ---------------------------------------------------------------------------
# Green function, exit times and the principal eigenvalue


def test_green_cauchy_closed_form():
    cfg = PathConfig(h=1e-3, horizon=6.0, n_paths=20000, base_seed=3)
    g = estimate_green(P1, I1, 0.0, 0.5, 0.02, cfg)
    ref = cauchy_green_interval(0.0, 0.5)
    assert abs(g.value - ref) <= 3 * g.stderr + 0.02 * ref
    assert g.extra["horizon_survival"] < 0.01


def test_green_near_boundary_small():
    cfg = PathConfig(h=1e-3, horizon=3.0, n_paths=5000, base_seed=3)
    deep = estimate_green(P1, I1, 0.0, 0.5, 0.01, cfg).value
    edge = estimate_green(P1, I1, 0.0, 0.985, 0.01, cfg).value
    assert edge < 0.5 * deep


def test_green_ball_eps_refinement():
    cfg = PathConfig(h=1e-3, horizon=6.0, n_paths=20000, base_seed=4)
    a = estimate_green(P1, I1, 0.0, 0.5, 0.04, cfg)
    b = estimate_green(P1, I1, 0.0, 0.5, 0.02, cfg)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr) + 0.02 * a.value


def test_mean_exit_time_closed_form():
    # E_0 tau_(-r, r) = r for the 1-d Cauchy process
    cfg = PathConfig(h=1e-3, horizon=4.0, n_paths=4000, base_seed=1)
    ratios = []
    for r in (0.25, 0.5, 1.0):
        e = estimate_exit_time(P1, ball(r), 0.0, cfg)
        assert abs(e.value - r) <= 3 * e.stderr + 0.03 * r
        ratios.append(e.value / r)
    assert max(ratios) / min(ratios) < 1.2


def test_exit_time_comparability_stable_under_doubling():
    spreads = []
    for n in (2000, 4000):
        cfg = PathConfig(h=1e-3, horizon=4.0, n_paths=n, base_seed=7)
        v = [estimate_exit_time(P1, ball(r), 0.0, cfg).value / r for r in (0.25, 0.5, 1.0)]
        spreads.append(max(v) / min(v))
    assert abs(spreads[1] / spreads[0] - 1) < 0.25


LAM_CFG = PathConfig(h=1e-2, horizon=6.0, n_paths=40000, base_seed=4)
LAM_GRID = np.arange(3.0, 6.01, 0.25)


def test_lambda1_positive_and_windows_agree():
    b = run_paths(P1, I1, 0.0, LAM_CFG)
    lam = lambda1_from_batch(b, LAM_GRID)
    assert lam.value > 0
    a = lambda1_from_batch(b, LAM_GRID[LAM_GRID <= 4.5])
    c = lambda1_from_batch(b, LAM_GRID[LAM_GRID >= 4.5])
    assert abs(a.value - c.value) <= 3 * math.hypot(a.stderr, c.stderr)
    # known value for the Cauchy process on (-1, 1)
    assert abs(lam.value - 1.1577738) <= 3 * lam.stderr


def test_lambda1_stable_scaling():
    k = 2.0
    base = estimate_lambda1(P1, I1, 0.0, LAM_GRID, LAM_CFG)
    cfg_k = LAM_CFG.replace(h=LAM_CFG.h * k, horizon=LAM_CFG.horizon * k)
    big = estimate_lambda1(P1, I1.scaled(k), 0.0, LAM_GRID * k, cfg_k, t_large=3.0 * k)
    assert abs(big.value - base.value / k) <= 3 * math.hypot(big.stderr, base.stderr / k)


def test_lambda1_insufficient_signal():
    cfg = PathConfig(h=1e-2, horizon=6.0, n_paths=50, base_seed=1)
    with pytest.raises(InsufficientSignalError):
        estimate_lambda1(P1, intervals([(-0.2, 0.2)]), 0.0, LAM_GRID, cfg)
