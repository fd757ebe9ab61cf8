"""Complete Bernstein function families and the scale function Phi.

Every family here is a complete Bernstein function with zero drift:

    stable        phi(l) = l**(a/2)
    relativistic  phi(l) = (l + m**(2/a))**(a/2) - m
    mixed         phi(l) = l**(a/2) + l**(b/2)
    logstable     phi(l) = l**(a/2) * log(1 + l)**p

The scale function is ``Phi(r) = 1 / phi(r**-2)``; it is the natural time
scale at spatial scale ``r``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from ._quad import quad_pieces
from .errors import ConfigError, ConvergenceError, DomainError, ScalingFitError

FAMILIES = ("stable", "relativistic", "mixed", "logstable")

_PARAM_NAMES = {
    "stable": ("alpha",),
    "relativistic": ("alpha", "m"),
    "mixed": ("alpha", "beta"),
    "logstable": ("alpha", "p"),
}


@dataclass(frozen=True)
class BernsteinFunction:
    """A named complete Bernstein function.

    Only the parameters relevant to ``family`` are used; the others stay None.
    """

    family: str
    alpha: float
    m: float | None = None
    beta: float | None = None
    p: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown Bernstein family {self.family!r}")
        a = self.alpha
        if not 0.0 < a < 2.0:
            raise DomainError(f"alpha must lie in (0, 2), got {a}")
        if self.family == "relativistic":
            if self.m is None or not self.m > 0:
                raise DomainError(f"relativistic family needs m > 0, got {self.m}")
        elif self.family == "mixed":
            if self.beta is None or not 0.0 < self.beta < a:
                raise DomainError(f"mixed family needs 0 < beta < alpha, got {self.beta}")
        elif self.family == "logstable":
            p = self.p
            # at p = -alpha/2 phi(0+) = 1, a killed subordinator, so that
            # endpoint is excluded
            if p is None or not (-a / 2 < p <= (2 - a) / 2 + 1e-15):
                raise DomainError(
                    f"logstable family needs p in (-alpha/2, (2-alpha)/2], got {p}")

    @property
    def index(self) -> float:
        """Stability index of the subordinator at infinity, alpha/2."""
        return self.alpha / 2.0

    @property
    def drift(self) -> float:
        return 0.0

    def __str__(self):
        names = _PARAM_NAMES[self.family]
        body = ",".join(f"{n}={getattr(self, n)!r}" for n in names)
        return f"{self.family}:{body}"


def stable(alpha):
    return BernsteinFunction("stable", float(alpha))


def relativistic(alpha, m):
    return BernsteinFunction("relativistic", float(alpha), m=float(m))


def mixed(alpha, beta):
    return BernsteinFunction("mixed", float(alpha), beta=float(beta))


def logstable(alpha, p):
    return BernsteinFunction("logstable", float(alpha), p=float(p))


def parse_family(text: str) -> BernsteinFunction:
    """Parse ``"stable:alpha=1.0"``-style family strings."""
    name, _, body = text.strip().partition(":")
    name = name.strip().lower()
    if name not in FAMILIES:
        raise ConfigError(f"unknown family {name!r} in {text!r}")
    params = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"malformed parameter {item!r} in {text!r}")
        key = key.strip()
        if key not in _PARAM_NAMES[name]:
            raise ConfigError(f"unknown parameter {key!r} for family {name!r}")
        try:
            params[key] = float(val)
        except ValueError:
            raise ConfigError(f"parameter {key!r} is not a number: {val!r}") from None
    missing = [n for n in _PARAM_NAMES[name] if n not in params]
    if missing:
        raise ConfigError(f"family {name!r} is missing {', '.join(missing)}")
    try:
        return BernsteinFunction(name, **params)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _positive(x, what):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError(f"{what} must be > 0")
    return x


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _kappa(f):
    # m**(2/alpha): the exponential tempering rate of the relativistic family
    return f.m ** (2.0 / f.alpha)


def phi(f: BernsteinFunction, lam):
    """Laplace exponent phi(lam), lam > 0 (array-friendly)."""
    lam = _positive(lam, "lambda")
    b = f.index
    if f.family == "stable":
        out = lam ** b
    elif f.family == "relativistic":
        # (k + l)^b - k^b without cancellation for l << k
        out = f.m * np.expm1(b * np.log1p(lam / _kappa(f)))
    elif f.family == "mixed":
        out = lam ** b + lam ** (f.beta / 2.0)
    else:
        out = lam ** b * np.log1p(lam) ** f.p
    return _out(out)


def phi_scalar(f: BernsteinFunction, lam: float) -> float:
    """phi for a single positive float, without array overhead."""
    b = f.index
    fam = f.family
    if fam == "stable":
        return lam ** b
    if fam == "relativistic":
        return f.m * math.expm1(b * math.log1p(lam / _kappa(f)))
    if fam == "mixed":
        return lam ** b + lam ** (f.beta / 2.0)
    return lam ** b * math.log1p(lam) ** f.p


def phi_complex(f: BernsteinFunction, w):
    """Analytic continuation of phi to C minus (-inf, 0] (principal branches)."""
    w = np.asarray(w, dtype=complex)
    b = f.index
    if f.family == "stable":
        out = w ** b
    elif f.family == "relativistic":
        k = _kappa(f)
        out = k ** b * np.expm1(b * np.log1p(w / k))
    elif f.family == "mixed":
        out = w ** b + w ** (f.beta / 2.0)
    else:
        out = w ** b * np.log1p(w) ** f.p
    return complex(out) if out.ndim == 0 else out


def _clog1p(w):
    if abs(w) < 1e-8:
        return w - w * w / 2.0 + w * w * w / 3.0
    return cmath.log(1.0 + w)


def phi_complex_scalar(f: BernsteinFunction, w: complex) -> complex:
    """Scalar ``phi_complex`` without numpy overhead."""
    b = f.index
    if f.family == "stable":
        return w ** b
    if f.family == "relativistic":
        k = _kappa(f)
        x = b * _clog1p(w / k)
        em1 = x + x * x / 2.0 + x ** 3 / 6.0 if abs(x) < 1e-5 else cmath.exp(x) - 1.0
        return k ** b * em1
    if f.family == "mixed":
        return w ** b + w ** (f.beta / 2.0)
    return w ** b * _clog1p(w) ** f.p


def dphi(f: BernsteinFunction, lam):
    """Derivative phi'(lam)."""
    lam = _positive(lam, "lambda")
    b = f.index
    if f.family == "stable":
        out = b * lam ** (b - 1)
    elif f.family == "relativistic":
        out = b * (lam + _kappa(f)) ** (b - 1)
    elif f.family == "mixed":
        c = f.beta / 2.0
        out = b * lam ** (b - 1) + c * lam ** (c - 1)
    else:
        L = np.log1p(lam)
        out = lam ** b * L ** f.p * (b / lam + f.p / ((1 + lam) * L))
    return _out(out)


def _stable_mu_const(b):
    return b / special.gamma(1.0 - b)


def boundary_density(f: BernsteinFunction, s):
    """Stieltjes density (1/pi) Im phi(-s + i0) on s > 0.

    For a complete Bernstein function with zero drift,
    ``mu(t) = int_0^inf exp(-t s) boundary_density(s) ds``.
    """
    s = _positive(s, "s")
    b = f.index
    if f.family == "stable":
        out = s ** b * math.sin(math.pi * b)
    elif f.family == "relativistic":
        out = np.where(s > _kappa(f), np.abs(s - _kappa(f)) ** b, 0.0) * math.sin(math.pi * b)
    elif f.family == "mixed":
        c = f.beta / 2.0
        out = s ** b * math.sin(math.pi * b) + s ** c * math.sin(math.pi * c)
    else:
        # log(1 - s + i0): negative real for s < 1, log(s - 1) + i pi for s > 1
        with np.errstate(divide="ignore"):
            re = np.where(s < 1, np.log1p(-np.minimum(s, 1.0)), np.log(np.abs(s - 1.0)))
        im = np.where(s < 1, 0.0, math.pi)
        mod = np.hypot(re, im)
        ang = np.where(s < 1, math.pi, np.arctan2(im, re))
        with np.errstate(invalid="ignore"):
            val = s ** b * mod ** f.p * np.sin(math.pi * b + f.p * ang)
        out = np.where(np.isfinite(val), np.maximum(val, 0.0), 0.0)
    return _out(out / math.pi)


def _boundary_density_scalar(f, s):
    if s <= 0:
        return 0.0
    if f.family != "logstable":
        return float(boundary_density(f, s))
    b = f.index
    if s < 1:
        mod, ang = -math.log1p(-s), math.pi
    elif s == 1:
        return 0.0 if f.p < 0 else math.inf
    else:
        re = math.log(s - 1.0)
        mod, ang = math.hypot(re, math.pi), math.atan2(math.pi, re)
    if mod == 0.0:
        return 0.0
    return max(s ** b * mod ** f.p * math.sin(math.pi * b + f.p * ang), 0.0) / math.pi


def _stieltjes_transform(f, kernel, tscale):
    """int_0^inf kernel(s) boundary_density(s) ds, with breakpoints at s=1,2.

    ``tscale`` sets where the kernel lives (roughly s ~ 1/tscale).
    """
    g = lambda s: kernel(s) * _boundary_density_scalar(f, s) if s > 0 else 0.0
    edges = sorted({0.0, 1.0, 2.0, 1.0 / tscale, 10.0 / tscale, 60.0 / tscale})
    head = quad_pieces(g, edges, rtol=1e-10, check=1e-7)[0]
    # log-variable for the last panel: some kernels decay only algebraically
    s0 = edges[-1]

    def gl(v):
        s = s0 * math.exp(v)
        return g(s) * s if math.isfinite(s) else 0.0

    tail = quad_pieces(gl, [0.0, 5.0, 50.0, 300.0], rtol=1e-10, check=1e-7)[0]
    return head + tail


def levy_mu(f: BernsteinFunction, t):
    """Density mu(t) of the subordinator Levy measure."""
    t = _positive(t, "t")
    b = f.index
    if f.family == "stable":
        out = _stable_mu_const(b) * t ** (-1 - b)
    elif f.family == "relativistic":
        out = _stable_mu_const(b) * t ** (-1 - b) * np.exp(-_kappa(f) * t)
    elif f.family == "mixed":
        c = f.beta / 2.0
        out = _stable_mu_const(b) * t ** (-1 - b) + _stable_mu_const(c) * t ** (-1 - c)
    else:
        out = np.vectorize(lambda tt: _stieltjes_transform(f, lambda s: math.exp(-tt * s), tt))(t)
    return _out(out)


def _upper_gamma_neg(b, x):
    # Gamma(-b, x) for 0 < b < 1 via Gamma(1-b, x) = -b Gamma(-b, x) + x^-b e^-x
    g1 = special.gammaincc(1 - b, x) * special.gamma(1 - b)
    return (x ** (-b) * np.exp(-x) - g1) / b


def tail_mass(f: BernsteinFunction, t):
    """N(t) = mu((t, inf)), the rate of subordinator jumps larger than t."""
    t = _positive(t, "t")
    b = f.index
    if f.family == "stable":
        out = t ** (-b) / special.gamma(1 - b)
    elif f.family == "relativistic":
        k = _kappa(f)
        out = _stable_mu_const(b) * k ** b * _upper_gamma_neg(b, k * t)
    elif f.family == "mixed":
        c = f.beta / 2.0
        out = t ** (-b) / special.gamma(1 - b) + t ** (-c) / special.gamma(1 - c)
    else:
        out = np.vectorize(lambda tt: _stieltjes_transform(
            f, lambda s: math.exp(-tt * s) / s, tt))(t)
    return _out(out)


def small_jump_mean(f: BernsteinFunction, eps):
    """m(eps) = int_0^eps t mu(t) dt, the mean contribution of jumps below eps."""
    eps = _positive(eps, "eps")
    b = f.index
    if f.family == "stable":
        out = _stable_mu_const(b) * eps ** (1 - b) / (1 - b)
    elif f.family == "relativistic":
        k = _kappa(f)
        out = (_stable_mu_const(b) * k ** (b - 1)
               * special.gammainc(1 - b, k * eps) * special.gamma(1 - b))
    elif f.family == "mixed":
        c = f.beta / 2.0
        out = (_stable_mu_const(b) * eps ** (1 - b) / (1 - b)
               + _stable_mu_const(c) * eps ** (1 - c) / (1 - c))
    else:
        def kern(s, e=float(eps)):
            x = e * s
            # (1 - e^-x (1 + x)) / s^2, series for small x
            if x < 1e-4:
                return e * e * (0.5 - x / 3.0)
            return (-math.expm1(-x) - x * math.exp(-x)) / (s * s)
        out = _stieltjes_transform(f, kern, float(eps))
    return _out(out)


def capital_phi(f: BernsteinFunction, r):
    """Phi(r) = 1 / phi(r**-2); strictly increasing in r."""
    r = _positive(r, "r")
    return _out(1.0 / np.asarray(phi(f, r ** -2.0)))


def _log_phi_u(f, u):
    # log phi(e^u) without forming e^u, so extreme arguments do not underflow
    b = f.index
    if f.family == "mixed":
        b2 = f.beta / 2.0
        hi, lo = max(b * u, b2 * u), min(b * u, b2 * u)
        return hi + math.log1p(math.exp(lo - hi))
    if f.family == "logstable":
        if u < -30.0:
            ll = u - 0.5 * math.exp(u)
        else:
            ll = math.log(u + math.log1p(math.exp(-u)) if u > 0 else math.log1p(math.exp(u)))
        return b * u + f.p * ll
    return math.log(phi_scalar(f, math.exp(u)))


def _elasticity_u(f, u):
    # d log phi / d log lambda at lambda = e^u; lies in (0, 1]
    b = f.index
    if f.family == "mixed":
        b2 = f.beta / 2.0
        w = 1.0 / (1.0 + math.exp(min((b2 - b) * u, 700.0)))
        return b * w + b2 * (1.0 - w)
    if u < -30.0:
        ratio = 1.0 - 0.5 * math.exp(u)
    elif u > 30.0:
        ratio = 1.0 / u
    else:
        lam = math.exp(u)
        ratio = lam / ((1.0 + lam) * math.log1p(lam))
    return b + f.p * ratio


def phi_inverse_scalar(f: BernsteinFunction, y: float, log=False) -> float:
    """lambda with phi(lambda) = y > 0 (or log lambda when ``log``)."""
    b = f.index
    if f.family == "stable":
        u = math.log(y) / b
        return u if log else math.exp(u)
    if f.family == "relativistic":
        k = _kappa(f)
        lam = k * math.expm1(math.log1p(y / f.m) / b)
        return math.log(lam) if log else lam
    # Newton in (log lambda, log phi) with a bisection safeguard
    target = math.log(y)
    u = target / b
    lo, hi = -math.inf, math.inf
    for _ in range(400):
        g = _log_phi_u(f, u) - target
        if g > 0:
            hi = min(hi, u)
        else:
            lo = max(lo, u)
        if abs(g) <= 1e-15 * max(1.0, abs(target)):
            break
        nu = u - g / _elasticity_u(f, u)
        if not lo < nu < hi:
            if math.isinf(lo):
                nu = u - 2.0 * max(1.0, abs(u))
            elif math.isinf(hi):
                nu = u + 2.0 * max(1.0, abs(u))
            else:
                nu = 0.5 * (lo + hi)
        if abs(nu - u) <= 1e-16 * max(1.0, abs(u)):
            u = nu
            break
        u = nu
    else:
        raise ConvergenceError(f"phi^-1({y}) did not converge")
    return u if log else math.exp(u)


def capital_phi_inv_scalar(f: BernsteinFunction, t: float) -> float:
    """Phi^-1(t) for a single positive float."""
    if not t > 0:
        raise DomainError("t must be > 0")
    u = phi_inverse_scalar(f, 1.0 / t, log=True)
    if -0.5 * u > 709.0:
        raise DomainError(f"Phi^-1({t}) exceeds the floating-point range")
    return math.exp(-0.5 * u)


def capital_phi_scalar(f: BernsteinFunction, r: float) -> float:
    """Phi(r) for a single positive float."""
    if not r > 0:
        raise DomainError("r must be > 0")
    return 1.0 / phi_scalar(f, r ** -2.0)


def capital_phi_inv(f: BernsteinFunction, t, max_expand=600, max_iter=400):
    """Inverse of Phi by geometric bracketing and bisection in log r.

    Small inputs go through ``capital_phi_inv_scalar`` element by element,
    which is much faster than the vectorised bisection.
    """
    t = _positive(t, "t")
    scalar = t.ndim == 0
    if t.size <= 64:
        out = np.array([capital_phi_inv_scalar(f, float(v)) for v in t.ravel()]).reshape(t.shape)
        return float(out) if scalar else out
    t = np.atleast_1d(t).astype(float)
    lo = t.copy()
    hi = t.copy()
    for _ in range(max_expand):
        low = np.asarray(capital_phi(f, lo)) > t
        if not low.any():
            break
        lo = np.where(low, lo / 4.0, lo)
    else:
        raise ConvergenceError("could not bracket Phi^-1 from below")
    for _ in range(max_expand):
        high = np.asarray(capital_phi(f, hi)) < t
        if not high.any():
            break
        hi = np.where(high, hi * 4.0, hi)
    else:
        raise ConvergenceError("could not bracket Phi^-1 from above")
    llo, lhi = np.log(lo), np.log(hi)
    for _ in range(max_iter):
        mid = 0.5 * (llo + lhi)
        below = np.asarray(capital_phi(f, np.exp(mid))) < t
        llo = np.where(below, mid, llo)
        lhi = np.where(below, lhi, mid)
        if np.all(lhi - llo <= 4e-16 * np.maximum(1.0, np.abs(mid))):
            break
    out = np.exp(0.5 * (llo + lhi))
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class ScalingCertificate:
    """Numerical witness of a1 l^d1 phi(r) <= phi(l r) <= a2 l^d2 phi(r)."""

    delta1: float
    delta2: float
    a1: float
    a2: float
    R0: float
    grid: dict = field(default_factory=dict)

    def holds(self, f, lam, r, rtol=1e-12):
        lam = np.asarray(lam, float)
        r = np.asarray(r, float)
        ratio = np.asarray(phi(f, lam * r)) / np.asarray(phi(f, r))
        return bool(np.all(self.a1 * lam ** self.delta1 <= ratio * (1 + rtol))
                    and np.all(ratio <= self.a2 * lam ** self.delta2 * (1 + rtol)))


def certify_scaling(f: BernsteinFunction, R0, lam_max=1e6, r_max=None,
                    n_lam=64, n_r=64, mono_tol=1e-10) -> ScalingCertificate:
    """Certify the weak scaling condition on a log-log grid.

    delta1/delta2 are the extremal chord slopes of l -> log phi(l r)/phi(r)
    against log l; a1/a2 are the extremal residual factors once the slopes
    are fixed.
    """
    if not R0 > 0:
        raise DomainError("R0 must be > 0")
    if not lam_max > 1:
        raise DomainError("lam_max must be > 1")
    if r_max is None:
        r_max = R0 * 1e6
    if not r_max > R0:
        raise DomainError("r_max must exceed R0")
    lam = np.logspace(0.0, math.log10(lam_max), n_lam)
    r = np.logspace(math.log10(R0), math.log10(r_max), n_r)
    L, Rg = np.meshgrid(lam, r, indexing="ij")
    logratio = np.log(np.asarray(phi(f, L * Rg))) - np.log(np.asarray(phi(f, Rg)))
    steps = np.diff(logratio, axis=0)
    if np.any(steps < -mono_tol):
        raise ScalingFitError(
            f"phi(l r)/phi(r) decreases in l for {f}; not a Bernstein function")
    chords = logratio[1:] / np.log(L[1:])
    d1, d2 = float(chords.min()), float(chords.max())
    a1 = float(np.exp((logratio - d1 * np.log(L)).min()))
    a2 = float(np.exp((logratio - d2 * np.log(L)).max()))
    grid = {"lam_max": float(lam_max), "r_max": float(r_max), "n_lam": n_lam, "n_r": n_r}
    return ScalingCertificate(d1, d2, a1, a2, float(R0), grid)


def bernstein_inequality_check(f: BernsteinFunction, lam, r) -> bool:
    """phi(lam r) <= lam phi(r) for lam >= 1."""
    lam = np.asarray(lam, float)
    if np.any(lam < 1):
        raise DomainError("lambda must be >= 1")
    lhs = np.asarray(phi(f, lam * np.asarray(r, float)))
    rhs = lam * np.asarray(phi(f, r))
    return bool(np.all(lhs <= rhs * (1 + 1e-12)))


@lru_cache(maxsize=64)
def is_concave_on_grid(f: BernsteinFunction, lo=1e-6, hi=1e6, n=400) -> bool:
    lam = np.logspace(math.log10(lo), math.log10(hi), n)
    d = np.asarray(dphi(f, lam))
    return bool(np.all(np.diff(d) <= 1e-12 * np.abs(d[:-1])))
