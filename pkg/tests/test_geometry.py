import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levykern.errors import ConfigError, DomainError
from levykern.geometry import annulus, ball, contains, delta_D, diam, intervals, parse_domain


def test_delta_examples():
    assert delta_D(ball(1.0, d=2), [0.0, 0.0]) == 1.0
    assert delta_D(intervals([(-1, 1)]), 0.5) == 0.5
    assert delta_D(annulus(1.0, 2.0, d=2), [1.4, 0.0]) == pytest.approx(0.4)


def test_contains_and_diam():
    assert diam(ball(1.0, d=3)) == 2.0
    assert not contains(annulus(1.0, 2.0), [0.0, 0.0])
    assert diam(intervals([(-1, 0), (0.5, 1)])) == 2.0
    assert contains(intervals([(-1, 0), (0.5, 1)]), 0.7)
    assert not contains(intervals([(-1, 0), (0.5, 1)]), 0.2)


def test_delta_outside_is_zero():
    assert delta_D(ball(1.0, d=2), [3.0, 0.0]) == 0.0
    assert delta_D(intervals([(-1, 0), (0.5, 1)]), 0.25) == 0.0


def test_vectorized_delta():
    D = ball(1.0, d=2)
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.9]])
    np.testing.assert_allclose(D.delta(pts), [1.0, 0.5, 0.1])


@pytest.mark.parametrize("bad", [
    lambda: ball(0.0), lambda: annulus(2.0, 1.0), lambda: intervals([(0, 1), (1, 2)]),
    lambda: intervals([(1, 0)]), lambda: intervals([]), lambda: ball(1.0, d=2, center=(0, 0, 0)),
])
def test_invalid_domains(bad):
    with pytest.raises(DomainError):
        bad()


def test_c11_characteristics():
    assert ball(2.0, d=2).c11 == (2.0, 0.0)
    assert annulus(1.0, 1.5).c11 == (0.5, 0.0)
    assert intervals([(-1, 1), (1.5, 4)]).c11 == (0.25, 0.0)


def test_parse_domain():
    assert parse_domain("ball:r=1") == ball(1.0, d=1)
    assert parse_domain("ball:r=2,d=3") == ball(2.0, d=3)
    assert parse_domain("annulus:rin=1,rout=2") == annulus(1.0, 2.0, d=2)
    assert parse_domain("intervals:(-1,1)|(2,3)") == intervals([(-1, 1), (2, 3)])
    assert parse_domain("ball:r=1", d=2).d == 2


@pytest.mark.parametrize("text", ["square:r=1", "ball:r", "ball:r=1,q=2", "intervals:(0,1"])
def test_parse_domain_errors(text):
    with pytest.raises(ConfigError):
        parse_domain(text)


def test_scaled():
    D = intervals([(-1, 1)]).scaled(2.0)
    assert D.parts == ((-2.0, 2.0),)
    B = ball(1.0, d=2).scaled(3.0)
    assert B.radius == 3.0 and B.delta([0.0, 0.0]) == 3.0


def test_point_at_depth():
    for D in (ball(1.0, d=2), annulus(1.0, 2.0), intervals([(-1, 1)])):
        x = D.point_at_depth(0.1)
        assert D.delta(x) == pytest.approx(0.1)
    with pytest.raises(DomainError):
        ball(1.0).point_at_depth(2.0)


DOMAINS = [ball(1.0, d=1), ball(1.0, d=2), ball(0.7, d=3, center=(0.1, 0.0, -0.2)),
           annulus(1.0, 2.0), intervals([(-1, 0), (0.5, 1)])]


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(DOMAINS), st.lists(st.floats(-2.5, 2.5), min_size=3, max_size=3))
def test_delta_bounded_by_half_diameter(D, coords):
    x = np.array(coords[:D.d])
    assert D.delta(x) <= D.diam / 2 + 1e-15


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(DOMAINS), st.lists(st.floats(-2.5, 2.5), min_size=6, max_size=6))
def test_delta_lipschitz_along_segment(D, coords):
    a, b = np.array(coords[:D.d]), np.array(coords[3:3 + D.d])
    s = np.linspace(0.0, 1.0, 101)
    pts = a + s[:, None] * (b - a)
    dv = D.delta(pts if D.d > 1 else pts[:, 0])
    step = np.linalg.norm(b - a) / 100
    assert np.all(np.abs(np.diff(dv)) <= step + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(DOMAINS), st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3),
       st.floats(0.01, 1.0))
def test_kappa_fat_witness(D, coords, frac):
    # random point in the closure: pull a random direction point into D
    x = np.array(coords[:D.d])
    if not D.contains(x):
        x = np.asarray(D.point_at_depth(0.05), dtype=float).reshape(D.d)
    r1, kappa = D.kappa_fat
    r = frac * r1
    A, m = D.fat_witness(x, r)
    assert m == pytest.approx(kappa * r)
    assert np.linalg.norm(A - x) + m <= r * (1 + 1e-12)
    # the ball B(A, kappa r) is inside D: check its center depth
    assert D.delta(A if D.d > 1 else A[0]) >= m * (1 - 1e-12)
