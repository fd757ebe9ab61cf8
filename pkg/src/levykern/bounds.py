"""Analytic shapes of the two-sided heat kernel and Green function estimates.

Every estimate here holds only up to unspecified multiplicative constants, so
each function returns the constant-free expression and comparisons against
numerics are made through ratios.

Shapes that are a minimum of two branches return a :class:`ShapeValue`
whose ``regime`` records the active branch: ``"OnDiagonal"`` for the branch
that stays finite as the two points merge and ``"OffDiagonal"`` for the one
carrying the singular factor in |x - y|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import bernstein as bf
from ._quad import quad
from .bernstein import BernsteinFunction
from .errors import ConvergenceError, DomainError, RegimeError
from .geometry import Domain
from .levy_kernel import ProcessSpec, jump_density_jx

ON = "OnDiagonal"
OFF = "OffDiagonal"
CONDITIONS = ("C69", "C610")


@dataclass(frozen=True)
class ShapeValue:
    value: float
    regime: str

    def __float__(self):
        return float(self.value)


def _f(p) -> BernsteinFunction:
    return p.f if isinstance(p, ProcessSpec) else p


def _Phi(f, r):
    return bf.capital_phi_scalar(f, r)


def _Phi_inv(f, t):
    return bf.capital_phi_inv_scalar(f, t)


def _dist(x, y):
    return float(np.linalg.norm(np.atleast_1d(np.asarray(x, float) - np.asarray(y, float))))


def _depth(D: Domain, x, name):
    dx = D.delta(x)
    if not dx > 0:
        raise DomainError(f"{name} is not in the domain")
    return dx


# ---------------------------------------------------------------------------
# heat kernel shapes


def global_shape(p: ProcessSpec, t, r) -> ShapeValue:
    """Phi^-1(t)^-d  min  t j_X(r); r = 0 returns the on-diagonal branch."""
    if not t > 0:
        raise DomainError("t must be > 0")
    if r < 0:
        raise DomainError("r must be >= 0")
    R = _Phi_inv(p.f, t)
    on = R ** -p.d
    # t j(r) ~ t / (r^d Phi(r)) exceeds R^-d by a factor >= (R/r)^d there
    if r <= 1e-8 * R:
        return ShapeValue(on, ON)
    off = t * jump_density_jx(p, r)
    return ShapeValue(on, ON) if on <= off else ShapeValue(off, OFF)


def global_shape_grid(p: ProcessSpec, t_values, r_values):
    """Vectorised ``global_shape`` on a (t, r) grid; j is computed once per r.

    Returns (values, on_diagonal_mask), both of shape (len(t), len(r)).
    """
    t = np.asarray(t_values, float)
    r = np.asarray(r_values, float)
    if np.any(t <= 0) or np.any(r < 0):
        raise DomainError("need t > 0 and r >= 0")
    on = np.array([_Phi_inv(p.f, v) ** -p.d for v in t])[:, None]
    j = np.array([jump_density_jx(p, v) if v > 0 else math.inf for v in r])[None, :]
    off = t[:, None] * j
    return np.minimum(on, off), on <= off


def global_crossover(p: ProcessSpec, t) -> float:
    """r at which the two branches of ``global_shape`` meet."""
    from scipy.optimize import brentq

    on = _Phi_inv(p.f, t) ** -p.d
    g = lambda lr: math.log(t * jump_density_jx(p, math.exp(lr))) - math.log(on)
    lo, hi = -1.0, 1.0
    while g(lo) < 0:
        lo -= 2.0
    while g(hi) > 0:
        hi += 2.0
    return math.exp(brentq(g, lo, hi, xtol=1e-14, rtol=1e-14))


def factorization_shape(p: ProcessSpec, D: Domain, t, x, y, survX, survY) -> ShapeValue:
    """P_x(tau > t) P_y(tau > t) times the global shape at |x - y|."""
    for v, name in ((survX, "survX"), (survY, "survY")):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} must be a probability, got {v}")
    g = global_shape(p, t, _dist(x, y))
    return ShapeValue(survX * survY * g.value, g.regime)


def boundary_factor(p, D: Domain, t, x):
    """(1 min Phi(delta_D(x))/t)^(1/2); 0 outside D."""
    dx = D.delta(x)
    if not dx > 0:
        return 0.0
    return math.sqrt(min(1.0, _Phi(_f(p), dx) / t))


def c11_shape(p: ProcessSpec, D: Domain, t, x, y, c4=None) -> ShapeValue:
    """Boundary-decay form of the Dirichlet heat kernel on a C^{1,1} set.

    With ``c4`` given, the off-diagonal branch uses t j(c4 |x - y| / 4), the
    argument rescaling of the upper bound.
    """
    if not t > 0:
        raise DomainError("t must be > 0")
    _depth(D, x, "x")
    _depth(D, y, "y")
    r = _dist(x, y)
    if c4 is not None:
        r = c4 * r / 4.0
    g = global_shape(p, t, r)
    return ShapeValue(boundary_factor(p, D, t, x) * boundary_factor(p, D, t, y) * g.value,
                      g.regime)


def survival_shape(p, D: Domain, t, x) -> float:
    if not t > 0:
        raise DomainError("t must be > 0")
    return boundary_factor(p, D, t, x)


def large_time_shape(p, D: Domain, t, x, y, lam1, t_large=3.0) -> ShapeValue:
    """exp(-lam1 t) Phi(delta_D(x))^(1/2) Phi(delta_D(y))^(1/2) for t >= t_large.

    There is no minimum here; the regime is reported as on-diagonal.
    """
    if not lam1 > 0:
        raise DomainError("lam1 must be > 0")
    if t < t_large:
        raise RegimeError(f"large-time shape needs t >= {t_large}, got {t}")
    f = _f(p)
    dx, dy = D.delta(x), D.delta(y)
    if dx <= 0 or dy <= 0:
        return ShapeValue(0.0, ON)
    return ShapeValue(math.exp(-lam1 * t) * math.sqrt(_Phi(f, dx) * _Phi(f, dy)), ON)


# ---------------------------------------------------------------------------
# scaling constants and the admissible h_T region


@lru_cache(maxsize=256)
def _eq77_constant(f, T, d1, d2, n=48):
    s = T * np.logspace(-8.0, 0.0, n)
    li = np.log([_Phi_inv(f, v) for v in s])
    ls = np.log(s)
    worst = 0.0
    for i in range(n):
        x = ls[: i + 1] - ls[i]
        rho = li[: i + 1] - li[i]
        worst = max(worst, float(np.max(rho - x / (2 * d2))), float(np.max(x / (2 * d1) - rho)))
    return max(1.0, math.exp(worst))


@dataclass(frozen=True)
class ScalingConstants:
    """delta1, delta2 from the scaling certificate and C_T on (0, T]."""

    delta1: float
    delta2: float
    C_T: float
    T: float


def scaling_constants(p, T) -> ScalingConstants:
    """Scaling exponents and the two-sided constant for Phi^-1 on (0, T].

    The exponents come from ``certify_scaling`` on the frequencies that
    Phi^-1 visits for arguments up to T; C_T is the extremal ratio over a
    log grid of pairs r <= R <= T.
    """
    f = _f(p)
    if not T > 0:
        raise DomainError("T must be > 0")
    R0 = _Phi_inv(f, T) ** -2.0
    cert = bf.certify_scaling(f, R0, lam_max=1e6, r_max=R0 * 1e6)
    ct = _eq77_constant(f, float(T), cert.delta1, cert.delta2)
    return ScalingConstants(cert.delta1, cert.delta2, ct, float(T))


def default_T(p, D: Domain, max_iter=20) -> ScalingConstants:
    """T = (2 max (2 C_T)^(2 delta2)) Phi(diam D), solved as a fixed point.

    C_T depends on the range (0, T] it is computed over, so T and C_T are
    iterated until T stops growing.
    """
    f = _f(p)
    base = _Phi(f, D.diam)
    T = 2.0 * base
    for _ in range(max_iter):
        sc = scaling_constants(f, T)
        new = max(2.0, (2.0 * sc.C_T) ** (2.0 * sc.delta2)) * base
        if abs(new - T) <= 1e-12 * T:
            return ScalingConstants(sc.delta1, sc.delta2, sc.C_T, new)
        T = new
    raise ConvergenceError("default T did not settle")


def admissible_region(p, T, sc: ScalingConstants | None = None):
    """(r_max, a_max) with 0 < r <= r_max and 0 < a <= a_max for h_T."""
    f = _f(p)
    if sc is None:
        sc = scaling_constants(f, T)
    return _Phi_inv(f, T / 2.0), min(0.5, (2.0 * sc.C_T) ** (-2.0 * sc.delta2)) * T


# ---------------------------------------------------------------------------
# h_T and Green function shapes


def h_T_numeric(p, a, r, T, rtol=1e-10) -> float:
    """h_T(a, r) by direct quadrature of its defining integral.

    h_T = a + Phi(r) int_{Phi(r)/T}^1 (1 min ua/Phi(r)) du / (u^2 Phi^-1(Phi(r)/u))
          + Phi(r)/r (1 min a/Phi(r)).
    """
    f = _f(p)
    if not a > 0:
        raise DomainError("a must be > 0")
    if not r > 0:
        raise DomainError("r must be > 0")
    if r > _Phi_inv(f, T / 2.0) * (1 + 1e-12):
        raise DomainError("h_T needs r <= Phi^-1(T/2)")
    pr = _Phi(f, r)
    lo = math.log(pr / T)

    def g(v):
        u = math.exp(v)
        return min(1.0, u * a / pr) / (u * _Phi_inv(f, pr / u))

    kink = math.log(pr / a)
    pts = [kink] if lo < kink < 0.0 else None
    val, _ = quad(g, lo, 0.0, rtol=rtol, points=pts, limit=400)
    return a + pr * val + pr / r * min(1.0, a / pr)


def integral_phi_over_s2(p, lo, hi, rtol=1e-12) -> float:
    """int_lo^hi Phi(s)/s^2 ds (signed); closed form for stable families."""
    f = _f(p)
    if not (lo > 0 and hi > 0):
        raise DomainError("limits must be > 0")
    if lo == hi:
        return 0.0
    if f.family == "stable":
        if f.alpha == 1.0:
            return math.log(hi / lo)
        e = f.alpha - 1.0
        return (hi ** e - lo ** e) / e
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    # log variable: int Phi(s)/s d(log s)
    val, _ = quad(lambda v: _Phi(f, math.exp(v)) * math.exp(-v), math.log(lo), math.log(hi),
                  rtol=rtol, limit=400)
    return sign * val


def h_T_closed(p, a, r) -> ShapeValue:
    """a/r  min  (a/Phi^-1(a) + (int_r^{Phi^-1(a)} Phi(s)/s^2 ds)^+)."""
    f = _f(p)
    if not (a > 0 and r > 0):
        raise DomainError("a and r must be > 0")
    ra = _Phi_inv(f, a)
    near = a / ra + max(0.0, integral_phi_over_s2(f, r, ra))
    far = a / r
    return ShapeValue(near, ON) if near <= far else ShapeValue(far, OFF)


def boundary_product(p, D: Domain, x, y) -> float:
    """a(x, y) = Phi(delta_D(x))^(1/2) Phi(delta_D(y))^(1/2)."""
    f = _f(p)
    return math.sqrt(_Phi(f, _depth(D, x, "x")) * _Phi(f, _depth(D, y, "y")))


def _green_args(p, D, x, y):
    if not D.bounded:
        raise DomainError("Green function shapes need a bounded domain")
    r = _dist(x, y)
    if r == 0:
        raise DomainError("Green function shapes are undefined at x = y")
    return boundary_product(p, D, x, y), r


def green_shape(p: ProcessSpec, D: Domain, x, y) -> ShapeValue:
    """Two-sided Green function shape on a bounded C^{1,1} set.

    d = 1 uses ``h_T_closed(a(x, y), |x - y|)``. For d >= 2 the shape is
    Phi(r)/r^d (1 min a/Phi(r)), reported on-diagonal when a >= Phi(r).
    """
    a, r = _green_args(p, D, x, y)
    if p.d == 1:
        return h_T_closed(p, a, r)
    pr = _Phi(p.f, r)
    base = pr / r ** p.d
    return ShapeValue(base, ON) if a >= pr else ShapeValue(base * a / pr, OFF)


@dataclass
class GreenConditionReport:
    """Outcome of the integral regularity check for the Green function.

    ``c`` is the largest ratio integral / (Phi(r)/r) seen on the sweep;
    ``passed`` says whether that ratio stays bounded as r -> 0.
    """

    which: str
    c: float
    passed: bool
    T: float
    r_grid: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    tail_factor: float = math.nan


def _decade_integrals(f, r, decades):
    # int over [r 10^-(k+1), r 10^-k] for k = 0 .. decades-1
    edges = r * 10.0 ** -np.arange(decades + 1.0)
    return np.array([integral_phi_over_s2(f, lo, hi) for hi, lo in zip(edges[:-1], edges[1:])])


def check_green_condition(p, which: str, T, decades=12, per_decade=4,
                          q_max=0.9) -> GreenConditionReport:
    """Sweep r over (0, T] and test one of the two integral conditions.

    C69:  int_r^T Phi(s)/s^2 ds <= c Phi(r)/r
    C610: int_0^r Phi(s)/s^2 ds <= c Phi(r)/r

    Boundedness is decided from decade increments: the ratio is judged
    bounded when successive decade contributions shrink geometrically with
    factor below ``q_max``. For C610 the integral down to 0 is the sum of the
    decade pieces plus a geometric tail, which is exact for pure powers.
    """
    f = _f(p)
    if which not in CONDITIONS:
        raise DomainError(f"condition must be one of {CONDITIONS}")
    if not T > 0:
        raise DomainError("T must be > 0")
    rs = T * 10.0 ** -(np.arange(decades * per_decade + 1) / per_decade)
    scale = np.array([_Phi(f, v) / v for v in rs])
    if which == "C69":
        ints = np.array([integral_phi_over_s2(f, v, T) for v in rs])
        ratios = ints / scale
        dec = ratios[::per_decade]
        inc = np.diff(dec)
        tail = inc[-3:]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = tail[1:] / tail[:-1]
        passed = bool(np.all(np.abs(tail) <= 1e-12 * np.abs(dec[-1]))
                      or np.all((q >= 0) & (q < q_max)))
        qf = float(np.max(q)) if q.size else math.nan
        return GreenConditionReport(which, float(np.max(ratios)), passed, float(T), rs, ratios, qf)
    pieces = _decade_integrals(f, T, decades + 8)
    q = pieces[1:] / pieces[:-1]
    qf = float(np.max(q[-4:]))
    passed = bool(qf < q_max)
    ratios = np.empty_like(rs)
    for i, v in enumerate(rs):
        pc = _decade_integrals(f, v, 8)
        qq = pc[-1] / pc[-2]
        total = pc.sum() + (pc[-1] * qq / (1.0 - qq) if 0 <= qq < 1 else math.inf)
        ratios[i] = total / scale[i]
    c = float(np.max(ratios)) if passed else math.inf
    return GreenConditionReport(which, c, passed, float(T), rs, ratios, qf)


@lru_cache(maxsize=128)
def _condition_cached(f, which, T):
    return check_green_condition(f, which, T)


def green_shape_special(p: ProcessSpec, D: Domain, x, y, condition: str, T=None) -> ShapeValue:
    """Simplified d = 1 Green shape under one of the integral conditions.

    C69:  Phi(r)/r (1 min a/Phi(r))
    C610: a/Phi^-1(a)  min  a/r

    Raises RegimeError when the condition does not hold for this family.
    """
    if p.d != 1:
        raise DomainError("the simplified Green shapes are one-dimensional")
    if condition not in CONDITIONS:
        raise DomainError(f"condition must be one of {CONDITIONS}")
    if T is None:
        T = default_T(p.f, D).T
    rep = _condition_cached(p.f, condition, float(T))
    if not rep.passed:
        raise RegimeError(f"condition {condition} fails for {p.f}")
    a, r = _green_args(p, D, x, y)
    f = p.f
    if condition == "C69":
        pr = _Phi(f, r)
        return ShapeValue(pr / r, ON) if a >= pr else ShapeValue(a / r, OFF)
    near = a / _Phi_inv(f, a)
    far = a / r
    return ShapeValue(near, ON) if near <= far else ShapeValue(far, OFF)


# ---------------------------------------------------------------------------
# elementary inequality and Lambert W


def lemma71_bounds(r, phi_dx, phi_dy, phi_xy):
    """The three members of the boundary-product inequality.

    Returns (lower, product, upper) with
      upper   = 1 min r^2 sqrt(phi_dx phi_dy) / phi_xy
      product = (1 min r sqrt(phi_dx / phi_xy)) (1 min r sqrt(phi_dy / phi_xy))
      lower   = upper / 2.
    The ordering lower <= product <= upper needs the inputs to come from an
    actual configuration, i.e. Phi(delta(x)), Phi(delta(y)), Phi(|x - y|)
    for a 1-Lipschitz delta and a Phi with Phi(2s) <= 4 Phi(s).
    """
    if not 0 < r <= 1:
        raise DomainError("r must lie in (0, 1]")
    if not (phi_dx >= 0 and phi_dy >= 0 and phi_xy > 0):
        raise DomainError("Phi values must be >= 0 (Phi(|x-y|) > 0)")
    upper = min(1.0, r * r * math.sqrt(phi_dx * phi_dy) / phi_xy)
    product = min(1.0, r * math.sqrt(phi_dx / phi_xy)) * min(1.0, r * math.sqrt(phi_dy / phi_xy))
    return 0.5 * upper, product, upper


def lambert_w(x, branch=0, max_iter=100):
    """Real Lambert W: the solution w of w e^w = x.

    ``branch=0`` is the principal branch (w >= -1, x >= -1/e); ``branch=-1``
    the lower branch (w <= -1, -1/e <= x < 0). Halley iteration from a
    log-based or branch-point initial guess.
    """
    x = float(x)
    em1 = -math.exp(-1.0)
    if x < em1 - 1e-16:
        raise DomainError(f"lambert_w needs x >= -1/e, got {x}")
    if branch not in (0, -1):
        raise DomainError("branch must be 0 or -1")
    if branch == -1 and not x < 0:
        raise DomainError("the lower branch needs -1/e <= x < 0")
    if x == 0.0:
        return 0.0
    near = x - em1 < 0.05
    if near:
        q = math.sqrt(max(0.0, 2.0 * (1.0 + math.e * x)))
        w = -1.0 + q - q * q / 3.0 if branch == 0 else -1.0 - q - q * q / 3.0
    elif branch == -1:
        L1 = math.log(-x)
        w = L1 - math.log(-L1)
    elif x < math.e:
        w = math.log1p(x) * (1.0 - math.log1p(math.log1p(x)) / (2.0 + math.log1p(x)))
    else:
        L1 = math.log(x)
        w = L1 - math.log(L1)
    for _ in range(max_iter):
        ew = math.exp(w)
        fw = w * ew - x
        wp1 = w + 1.0
        # at the branch point w is only sqrt(eps)-determined; stop once the residual is rounding
        if wp1 == 0.0 or abs(fw) <= 2.2e-16 * abs(x):
            break
        step = fw / (ew * wp1 - (w + 2.0) * fw / (2.0 * wp1))
        w -= step
        if abs(step) <= 4e-16 * (1.0 + abs(w)):
            break
    else:
        raise ConvergenceError(f"lambert_w({x}) did not converge")
    if abs(w * math.exp(w) - x) > 1e-12 * max(1.0, abs(x)):
        raise ConvergenceError(f"lambert_w({x}) residual too large")
    return w


# ---------------------------------------------------------------------------
# logarithmically perturbed stable example (alpha = 1)


def log_scale_from_W(a, p_exp):
    """Approximation of log(1/Phi^-1(a)) for Phi(r) ~ r log(1/r)^-p.

    Solving a = r log(1/r)^-p gives log(1/r) = p W(a^(-1/p) / p); p < 0
    uses the lower branch of W. p = 1 reduces to W(1/a).
    """
    if not a > 0:
        raise DomainError("a must be > 0")
    if p_exp == 0:
        raise DomainError("p must be nonzero")
    y = a ** (-1.0 / p_exp) / p_exp
    if p_exp > 0:
        return p_exp * lambert_w(y)
    return p_exp * lambert_w(y, branch=-1)


def example75_expression(a, r, p_exp) -> ShapeValue:
    """a/r  min  (L^-p + ((L^(1-p) - log(1/r)^(1-p)) / (p - 1))^+) with L = log_scale_from_W(a).

    For p = 1 the bracket is L^-1 + log^+(log(1/r) / L). Needs 0 < r < 1.
    """
    if not 0 < r < 1:
        raise DomainError("the closed form needs 0 < |x - y| < 1")
    L = log_scale_from_W(a, p_exp)
    lr = math.log(1.0 / r)
    if p_exp == 1:
        near = 1.0 / L + max(0.0, math.log(lr / L))
    else:
        near = L ** -p_exp + max(0.0, (L ** (1 - p_exp) - lr ** (1 - p_exp)) / (p_exp - 1))
    far = a / r
    return ShapeValue(near, ON) if near <= far else ShapeValue(far, OFF)


@lru_cache(maxsize=64)
def example75_c0(f: BernsteinFunction, n=400, decades=40.0) -> float:
    """Grid estimate of c0 in c0 E(s) <= Phi^-1(s) <= E(s)/c0, s in (0, Phi(1/2)].

    E(s) = exp(-log_scale_from_W(s)). Grid points where the lower branch of W
    is not real are skipped.
    """
    _require_example75(f)
    top = _Phi(f, 0.5)
    worst = 1.0
    for s in top * 10.0 ** -np.linspace(0.0, decades, n):
        try:
            L = log_scale_from_W(float(s), f.p)
        except DomainError:
            continue
        ratio = _Phi_inv(f, float(s)) / math.exp(-L)
        worst = min(worst, ratio, 1.0 / ratio)
    return worst


def _require_example75(f):
    if f.family != "logstable" or f.alpha != 1.0 or f.p == 0:
        raise DomainError("the closed form applies to LogStable(alpha=1, p != 0)")


def example75_green_shape(p: ProcessSpec, D: Domain, x, y, c0=None) -> ShapeValue:
    """Lambert-W form of the d = 1 Green shape for LogStable(alpha=1, p).

    The domain must satisfy Phi^-1(diam D) max diam D < c0/2, with c0
    estimated by ``example75_c0`` unless supplied.
    """
    _require_example75(p.f)
    if p.d != 1:
        raise DomainError("the closed form is one-dimensional")
    if c0 is None:
        c0 = example75_c0(p.f)
    size = max(_Phi_inv(p.f, D.diam), D.diam)
    if not size < c0 / 2.0:
        raise DomainError(
            f"domain too large for the closed form: max(Phi^-1(diam), diam) = {size:.4g} "
            f"is not below c0/2 = {c0 / 2:.4g}")
    a, r = _green_args(p, D, x, y)
    return example75_expression(a, r, p.f.p)
