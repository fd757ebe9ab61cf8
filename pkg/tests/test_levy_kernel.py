import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from levykern import ProcessSpec, capital_phi, capital_phi_inv, relativistic, stable
from levykern.bernstein import phi
from levykern.errors import DomainError
from levykern.levy_kernel import (bump_profile, char_exponent, check_condition_B,
                                  check_condition_C, free_kernel, jump_density_j,
                                  jump_density_jx, stable_jump_constant)

from conftest import FAMILIES


def cauchy(d, t, r):
    c = special.gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2)
    return c * t / (t * t + r * r) ** ((d + 1) / 2)


SBM1 = ProcessSpec(1, stable(1.0))
PERT1 = ProcessSpec(1, stable(1.0), "perturbed")


def test_process_spec_validation():
    with pytest.raises(DomainError):
        ProcessSpec(0, stable(1.0))
    with pytest.raises(DomainError):
        ProcessSpec(1, stable(1.0), "other")
    with pytest.raises(DomainError):
        ProcessSpec(1, stable(1.0), "perturbed", bump_eps=1.5)
    assert SBM1.gamma == 1.0 and PERT1.gamma == 2.0


# ---------------------------------------------------------------------------
# jump density


def test_j_stable_value():
    assert jump_density_j(SBM1, 1.0) == pytest.approx(1 / math.pi, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_j_quadrature_matches_closed_form(alpha, d):
    p = ProcessSpec(d, stable(alpha))
    r = np.logspace(-2, 1, 7)
    quad = np.array([jump_density_j(p, v, method="quad") for v in r])
    closed = stable_jump_constant(d, alpha) * r ** (-d - alpha)
    np.testing.assert_allclose(quad, closed, rtol=1e-8)


def test_j_oracle(oracles):
    for key, rows in oracles["j"].items():
        name, d = key.split("/d")
        p = ProcessSpec(int(d), FAMILIES[name])
        for r, ref in rows:
            assert jump_density_j(p, r) == pytest.approx(ref, rel=1e-8), (key, r)


@pytest.mark.parametrize("f", [stable(1.0), relativistic(1.0, 1.0), FAMILIES["logstable_1_0.25"],
                               FAMILIES["mixed_1.5_0.5"]])
def test_j_decreasing(f):
    p = ProcessSpec(2, f)
    assert jump_density_j(p, 2.0) < jump_density_j(p, 1.0)


def test_j_times_scale_constant_for_stable():
    r = np.logspace(-3, 0, 13)
    v = np.array([jump_density_j(SBM1, x) * x * capital_phi(SBM1.f, x) for x in r])
    np.testing.assert_allclose(v, v[0], rtol=1e-6)


def test_jx_identity_in_sbm_mode():
    r = np.logspace(-2, 1, 9)
    np.testing.assert_array_equal(jump_density_jx(SBM1, r), jump_density_j(SBM1, r))


def test_jx_perturbed_half_at_one_and_comparable():
    assert jump_density_jx(PERT1, 1.0) == pytest.approx(jump_density_j(PERT1, 1.0) / 2, rel=1e-14)
    r = np.linspace(0.5, 1.5, 201)
    j, jx = jump_density_j(PERT1, r), jump_density_jx(PERT1, r)
    assert np.all(jx >= j / 2 * (1 - 1e-14)) and np.all(jx <= 2 * j)
    # non-monotone: increases somewhere after the dip at 1
    assert np.any(np.diff(jx) > 0)


def test_bump_profile_support():
    assert bump_profile(1.0, 0.25) == pytest.approx(1.0)
    assert bump_profile(1.25, 0.25) == 0.0 and bump_profile(0.7, 0.25) == 0.0


# ---------------------------------------------------------------------------
# characteristic exponent


def test_char_exponent_sbm():
    assert char_exponent(SBM1, 3.0) == pytest.approx(3.0, rel=1e-14)
    assert char_exponent(SBM1, 0.0) == 0.0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_char_exponent_perturbed_comparable(d):
    p = ProcessSpec(d, stable(1.0), "perturbed")
    s = np.logspace(-2, 2, 17)
    psi = char_exponent(p, s)
    ref = phi(p.f, s * s)
    assert np.all(psi >= ref / 2) and np.all(psi <= 2 * ref)
    assert char_exponent(p, 0.0) == 0.0


# ---------------------------------------------------------------------------
# free kernel


def test_free_kernel_cauchy_value():
    assert free_kernel(SBM1, 1.0, 0.0) == pytest.approx(1 / math.pi, rel=1e-10)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("t, r", [(0.1, 0.0), (0.1, 0.05), (1.0, 1.0), (2.0, 10.0), (0.5, 3.0)])
def test_free_kernel_cauchy(d, t, r):
    p = ProcessSpec(d, stable(1.0))
    assert free_kernel(p, t, r) == pytest.approx(cauchy(d, t, r), rel=1e-7)


def test_free_kernel_stable_oracle(oracles):
    for alpha, rows in oracles["stable_kernel_1d"].items():
        p = ProcessSpec(1, stable(float(alpha)))
        for t, r, ref in rows:
            assert free_kernel(p, t, r) == pytest.approx(ref, rel=1e-8), (alpha, t, r)


def test_free_kernel_relativistic_oracle(oracles):
    p = ProcessSpec(1, relativistic(1.0, 1.0))
    for t, r, ref in oracles["relativistic_kernel_1d"]["1"]:
        assert free_kernel(p, t, r) == pytest.approx(ref, rel=1e-8), (t, r)


@pytest.mark.parametrize("method", ["rotated", "real"])
def test_free_kernel_methods_agree(method):
    p = ProcessSpec(1, FAMILIES["logstable_1_0.25"])
    for t, r in ((0.1, 0.2), (1.0, 2.0)):
        assert free_kernel(p, t, r, method=method) == pytest.approx(free_kernel(p, t, r),
                                                                    rel=1e-8)


@pytest.mark.parametrize("spec, t", [(SBM1, 0.1), (SBM1, 1.0), (ProcessSpec(1, stable(1.5)), 0.1),
                                     (PERT1, 1.0)])
def test_free_kernel_normalization(spec, t):
    g = lambda r: free_kernel(spec, t, r)
    edges = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0]
    head = sum(integrate.quad(g, a, b, epsrel=1e-10, limit=200)[0]
               for a, b in zip(edges[:-1], edges[1:]))
    # beyond 100 the kernel is t j_X(r) to leading order
    tail = t * integrate.quad(lambda r: jump_density_j(spec, r), 100.0, np.inf)[0]
    assert 2 * (head + tail) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_free_kernel_stable_scaling(alpha):
    p = ProcessSpec(1, stable(alpha))
    for t, r in ((0.1, 0.3), (0.5, 2.0), (2.0, 0.7)):
        s = t ** (-1 / alpha)
        assert free_kernel(p, t, r) == pytest.approx(s * free_kernel(p, 1.0, s * r), rel=1e-8)


@pytest.mark.parametrize("spec", [SBM1, PERT1])
@pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
def test_perturbed_split_matches_real_axis(spec, t):
    for r in (0.0, 0.5, 1.0, 3.0):
        a = free_kernel(spec, t, r)
        b = free_kernel(spec, t, r, method="real")
        assert a == pytest.approx(b, rel=1e-6), (t, r)


def test_chapman_kolmogorov():
    rng = np.random.default_rng(3)
    p = ProcessSpec(1, stable(1.5))
    for _ in range(4):
        s, t = rng.uniform(0.2, 1.0, 2)
        x, y = rng.uniform(-1, 1, 2)
        g = lambda z: free_kernel(p, s, abs(x - z)) * free_kernel(p, t, abs(z - y))
        edges = [-np.inf, -50, -5, min(x, y), max(x, y), 5, 50, np.inf]
        conv = sum(integrate.quad(g, a, b, epsrel=1e-9, limit=200)[0]
                   for a, b in zip(edges[:-1], edges[1:]))
        assert conv == pytest.approx(free_kernel(p, s + t, abs(x - y)), rel=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.0, 5.0), st.floats(1.01, 3.0))
def test_free_kernel_decreasing_in_r(t, r, k):
    p = ProcessSpec(1, relativistic(1.0, 1.0))
    assert free_kernel(p, t, k * r + 1e-3) < free_kernel(p, t, r)


def test_on_diagonal_upper_bound():
    for f in (stable(1.0), FAMILIES["logstable_1_0.25"], relativistic(1.0, 1.0)):
        p = ProcessSpec(1, f)
        t = np.logspace(-2, 0, 9)
        ratio = [free_kernel(p, v, 0.0) * capital_phi_inv(f, v) for v in t]
        assert max(ratio) / min(ratio) < 10


# ---------------------------------------------------------------------------
# conditions (B) and (C)


T_GRID = [0.05, 0.1, 0.5, 1.0]
R_GRID = [0.05, 0.2, 0.5, 1.0, 2.0, 5.0]


def test_condition_B_sbm_unit_constants():
    rep = check_condition_B(SBM1, T_GRID, R_GRID)
    assert rep.passed and rep.constant == pytest.approx(1.0) and rep.scale == 1.0


def test_condition_B_perturbed():
    sbm = check_condition_B(SBM1, T_GRID, R_GRID)
    rep = check_condition_B(PERT1, T_GRID, R_GRID)
    assert rep.passed and rep.constant <= PERT1.gamma ** 2 * sbm.constant


def test_condition_B_single_radius_trivial():
    assert check_condition_B(SBM1, [0.5], [1.0]).passed


def test_condition_C_stable():
    rep = check_condition_C(SBM1, T_GRID, R_GRID)
    assert rep.passed and rep.scale == 1.0 and math.isfinite(rep.constant)
    # t j(r) / p(t, r) stays bounded below for large r at fixed t
    r = np.array([2.0, 5.0, 10.0, 50.0])
    low = [0.5 * jump_density_j(SBM1, v) / free_kernel(SBM1, 0.5, v) for v in r]
    assert min(low) > 0.5


def test_condition_C_perturbed():
    assert check_condition_C(PERT1, T_GRID, R_GRID).passed


def test_on_diagonal_regime_dominates():
    t = 0.3
    r0 = capital_phi_inv(SBM1.f, t)
    for r in np.linspace(0.0, r0, 5):
        assert free_kernel(SBM1, t, r) <= 1.0 / r0
