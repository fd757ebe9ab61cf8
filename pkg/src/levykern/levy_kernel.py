"""Jump densities, characteristic exponents and the free-space heat kernel.

The free kernel p(t, r) is recovered from exp(-t Psi) by radial Fourier
inversion, which is independent of everything the Monte Carlo engine does;
it serves as the oracle for the global two-sided estimate.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from . import bernstein as bf
from ._quad import quad, quad_pieces
from .bernstein import BernsteinFunction
from .errors import DomainError, InversionAccuracyError, QuadratureError

JUMP_MODES = ("sbm", "perturbed")


@dataclass(frozen=True)
class ProcessSpec:
    """Dimension, Bernstein function and jump-density mode of a process.

    ``jump_mode="perturbed"`` replaces j by j - h for a compactly supported
    bump h with h(1) = j(1)/2, supported on [1 - bump_eps, 1 + bump_eps].
    """

    d: int
    f: BernsteinFunction
    jump_mode: str = "sbm"
    bump_eps: float = 0.25

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d}")
        if self.jump_mode not in JUMP_MODES:
            raise DomainError(f"unknown jump mode {self.jump_mode!r}")
        if not 0 < self.bump_eps < 1:
            raise DomainError("bump_eps must lie in (0, 1)")

    @property
    def gamma(self) -> float:
        """Comparability constant between j_X and j."""
        return 1.0 if self.jump_mode == "sbm" else 2.0

    @property
    def is_sbm(self):
        return self.jump_mode == "sbm"


def sphere_area(d):
    """Surface measure of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def stable_jump_constant(d, alpha):
    """A(d, alpha) with j(r) = A r^{-d-alpha} for phi(l) = l^{alpha/2}."""
    return (alpha * 2.0 ** (alpha - 1.0) * math.pi ** (-d / 2.0)
            * math.gamma((d + alpha) / 2.0) / math.gamma(1.0 - alpha / 2.0))


def _j_closed(p, r):
    f = p.f
    out = stable_jump_constant(p.d, f.alpha) * r ** (-p.d - f.alpha)
    if f.family == "mixed":
        out = out + stable_jump_constant(p.d, f.beta) * r ** (-p.d - f.beta)
    return out


def _j_subordination(p, r, rtol):
    """Subordination integral with t = r^2 e^u / 4."""
    d = p.d
    lr2 = math.log(r * r)

    def logg(u):
        if lr2 + u > 700.0:
            # far beyond the peak; the integrand is below e^-300 of it here
            return -math.inf
        t = r * r * math.exp(u) / 4.0
        mu = bf.levy_mu(p.f, t)
        if mu <= 0:
            return -math.inf
        return -0.5 * d * (math.log(math.pi) + lr2 + u) - math.exp(-u) + math.log(mu) + math.log(t)

    grid = np.arange(-8.0, 60.0, 0.25)
    vals = np.array([logg(u) for u in grid])
    k = int(np.argmax(vals))
    peak = vals[k]
    keep = np.nonzero(vals > peak - 60.0)[0]
    lo = grid[max(keep[0] - 1, 0)]
    hi = grid[min(keep[-1] + 1, len(grid) - 1)]
    if keep[-1] == len(grid) - 1:
        hi = math.inf
    g = lambda u: math.exp(logg(u) - peak)
    val, _ = quad_pieces(g, [lo, grid[k], hi], rtol=rtol, check=1e-7)
    return val * math.exp(peak)


def _bessel_kernel(d, r, s):
    # int_0^inf (4 pi t)^{-d/2} exp(-r^2/(4t) - t s) dt
    nu = 1.0 - d / 2.0
    z = r * math.sqrt(s)
    if d == 1:
        return math.exp(-z) / (2.0 * math.sqrt(s))
    if d == 3:
        return math.exp(-z) / (4.0 * math.pi * r)
    kv = special.kve(nu, z) * math.exp(-z)
    return (4 * math.pi) ** (-d / 2.0) * 2.0 * (r * r / (4.0 * s)) ** (nu / 2.0) * kv


def _j_stieltjes(p, r, rtol):
    g = lambda s: _bessel_kernel(p.d, r, s) * bf._boundary_density_scalar(p.f, s) if s > 0 else 0.0
    sc = 1.0 / (r * r)
    edges = sorted({0.0, 1.0, 2.0, sc, 30.0 * sc, 3000.0 * sc})
    val, _ = quad_pieces(g, edges, rtol=rtol, check=1e-7)
    # the tail carries a fraction ~exp(-55) of the total: judge it against the head
    tail, _ = quad(g, edges[-1], math.inf, rtol=rtol, atol=1e-3 * rtol * abs(val), check=1e-6)
    return val + tail


def jump_density_j(p: ProcessSpec, r, method="auto", rtol=1e-10):
    """Radial Levy density j(r) of the subordinate Brownian motion.

    method: "closed" (stable / mixed only), "quad" (subordination integral
    against mu), "stieltjes" (Bessel-K representation), or "auto".
    """
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("r must be > 0")
    fam = p.f.family
    if method == "auto":
        method = {"stable": "closed", "mixed": "closed",
                  "relativistic": "quad", "logstable": "stieltjes"}[fam]
    if method == "closed":
        if fam not in ("stable", "mixed"):
            raise DomainError(f"no closed-form jump density for {fam}")
        out = _j_closed(p, r)
    elif method == "quad":
        out = np.vectorize(lambda x: _j_subordination(p, x, rtol))(r)
    elif method == "stieltjes":
        out = np.vectorize(lambda x: _j_stieltjes(p, x, rtol))(r)
    else:
        raise DomainError(f"unknown method {method!r}")
    return float(out) if out.ndim == 0 else out


def bump_profile(r, eps):
    """max(0, 1 - |r - 1|/eps)^2; the bump is h = j/2 times this."""
    r = np.asarray(r, dtype=float)
    return np.maximum(0.0, 1.0 - np.abs(r - 1.0) / eps) ** 2


def jump_density_jx(p: ProcessSpec, r, **kw):
    j = np.asarray(jump_density_j(p, r, **kw))
    if p.is_sbm:
        out = j
    else:
        out = j * (1.0 - 0.5 * bump_profile(r, p.bump_eps))
    return float(out) if out.ndim == 0 else out


def _sphere_cos_average(d, z):
    """Average of cos(z e . w) over the unit sphere, e fixed."""
    z = np.asarray(z, dtype=float)
    if d == 1:
        return np.cos(z)
    if d == 3:
        return np.sinc(z / math.pi)
    nu = d / 2.0 - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        out = math.gamma(d / 2.0) * (2.0 / z) ** nu * special.jv(nu, z)
    return np.where(z < 1e-8, 1.0, out)


@lru_cache(maxsize=32)
def _bump_j_cheb(p):
    # j is smooth on the bump support; a Chebyshev fit spares repeated quadrature
    e = p.bump_eps
    return np.polynomial.Chebyshev.interpolate(
        lambda x: np.asarray(jump_density_j(p, x)), 64, domain=[1.0 - e, 1.0 + e])


@lru_cache(maxsize=64)
def _bump_nodes(p, m):
    # composite 24-point Gauss-Legendre, m sub-panels on each smooth side of h
    x, w = np.polynomial.legendre.leggauss(24)
    e = p.bump_eps
    edges = np.concatenate([np.linspace(1.0 - e, 1.0, m + 1), np.linspace(1.0, 1.0 + e, m + 1)[1:]])
    a, b = edges[:-1, None], edges[1:, None]
    rho = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wts = (0.5 * (b - a) * w).ravel()
    h = 0.5 * _bump_j_cheb(p)(rho) * bump_profile(rho, e)
    return rho, wts * h * rho ** (p.d - 1) * sphere_area(p.d)


def bump_mass(p: ProcessSpec):
    """Total mass of the bump h over R^d."""
    return float(np.sum(_bump_nodes(p, 1)[1]))


def bump_transform(p: ProcessSpec, s):
    """Fourier transform of the radial bump, int cos(xi . x) h(|x|) dx, |xi| = s."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty_like(s)
    for i, si in enumerate(s):
        # about ten radians of oscillation per 24-point sub-panel
        m = max(1, math.ceil(si * p.bump_eps / 10.0))
        m = 1 << (m - 1).bit_length()
        rho, w = _bump_nodes(p, m)
        out[i] = np.dot(w, _sphere_cos_average(p.d, si * rho))
    return out


def bump_exponent(p: ProcessSpec, s):
    """int (1 - cos(xi . x)) h(|x|) dx for |xi| = s."""
    return bump_mass(p) - bump_transform(p, s)


def char_exponent(p: ProcessSpec, s):
    """Psi(s) for |xi| = s; Psi(0) = 0."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("s must be >= 0")
    pos = np.where(s > 0, s, 1.0)
    out = np.where(s > 0, np.asarray(bf.phi(p.f, pos * pos)), 0.0)
    if not p.is_sbm:
        out = out - np.where(s > 0, bump_exponent(p, pos).reshape(out.shape), 0.0)
    return float(out) if out.ndim == 0 else out


def _psi_scalar(p, s):
    if s == 0.0:
        return 0.0
    if p.is_sbm:
        return bf.phi_scalar(p.f, s * s)
    return bf.phi_scalar(p.f, s * s) - float(bump_exponent(p, s)[0])


def char_exponent_radial(p: ProcessSpec, s, rtol=1e-10):
    """Psi(s) straight from the radial Levy-Khintchine integral of j_X.

    Slow; kept as an independent cross-check of ``char_exponent``.
    """
    d = p.d
    area = sphere_area(d)

    def integrand(rho):
        return area * rho ** (d - 1) * jump_density_jx(p, rho) * (
            1.0 - float(_sphere_cos_average(d, s * rho)))

    edges = [0.0, 1.0 / max(s, 1e-300) if s > 0 else 1.0]
    if not p.is_sbm:
        edges += [1.0 - p.bump_eps, 1.0, 1.0 + p.bump_eps]
    edges = sorted(set(e for e in edges if e >= 0))
    val, _ = quad_pieces(integrand, edges, rtol=rtol, check=1e-6)
    tail, _ = quad(integrand, edges[-1], math.inf, rtol=rtol, check=1e-5, limit=2000)
    return val + tail


# ---------------------------------------------------------------------------
# Fourier inversion


def _sigma_max(p, t, ell):
    """sigma with t Psi(sigma/ell) >= 37 (exp(-tPsi) < 1e-16)."""
    sig = 1.0
    while t * _psi_scalar(p, sig / ell) < 37.0:
        sig *= 2.0
        if sig > 1e12:
            raise InversionAccuracyError("characteristic exponent grows too slowly to truncate")
    return sig


def _j0_panels(omega, sig_max):
    k = 1
    zeros = special.jn_zeros(0, 50)
    prev = 0.0
    while True:
        z = zeros[k - 1] if k <= 50 else (k - 0.25) * math.pi
        edge = z / omega
        yield prev, min(edge, sig_max)
        if edge >= sig_max:
            return
        prev = edge
        k += 1


def _wynn(sums):
    """Wynn epsilon extrapolation of a sequence of partial sums."""
    n = len(sums)
    e0 = [0.0] * (n + 1)
    e1 = list(sums)
    best = sums[-1]
    for k in range(1, n):
        e2 = []
        for i in range(len(e1) - 1):
            diff = e1[i + 1] - e1[i]
            if diff == 0:
                return e1[i + 1]
            e2.append(e0[i + 1] + 1.0 / diff)
        if k % 2 == 0 and e2:
            best = e2[-1]
        e0, e1 = e1, e2
        if len(e1) < 2:
            break
    return best


def _hankel0(g, omega, sig_max, rtol):
    partial = []
    total = 0.0
    for lo, hi in _j0_panels(omega, sig_max):
        v, _ = quad(lambda x: g(x) * special.j0(omega * x), lo, hi, rtol=1e-12, check=math.inf)
        total += v
        partial.append(total)
        if hi >= sig_max:
            return total
        if len(partial) >= 16 and len(partial) % 4 == 0:
            a = _wynn(partial[-13:])
            b = _wynn(partial[-9:])
            if abs(a - b) <= rtol * abs(b):
                return b
        if len(partial) > 20000:
            raise InversionAccuracyError("Hankel inversion did not converge")
    return total


def _max_angle(f):
    # largest ray angle keeping Re phi(z^2) >= 0 for large |z|
    top = f.index
    if f.family == "mixed":
        top = max(f.alpha, f.beta) / 2.0
    elif f.family == "logstable":
        top = f.index + max(f.p, 0.0)
    return min(0.4 * math.pi, math.pi / (4.0 * top))


def _rotated(p, t, r, ell, rtol, theta=0.25 * math.pi):
    """Inversion along the ray arg(sigma) = pi/4.

    exp(-t phi(z^2)) continues analytically to the sector 0 <= arg z <= pi/4
    and stays bounded there (Re phi >= 0 when Re z^2 >= 0), so the contour
    can be turned off the real axis (theta = pi/4; steeper rays are used
    as a fallback when the index permits). The oscillatory factor then decays like
    exp(-r s / sqrt 2) and deep tails no longer come from cancellation.
    Returns (value, abserr).
    """
    d = p.d
    f = p.f
    omega = r / ell
    rot = cmath.exp(1j * theta)
    rot2 = rot * rot

    def expo(x):
        return -t * bf.phi_complex_scalar(f, (x / ell) ** 2 * rot2)

    if d == 1:
        def F(x):
            return cmath.exp(expo(x) + 1j * omega * x * rot)
        pref, phase, part = 1.0 / (math.pi * ell), rot, "re"
    elif d == 3:
        def F(x):
            return x * cmath.exp(expo(x) + 1j * omega * x * rot)
        pref, phase, part = 1.0 / (2 * math.pi ** 2 * r * ell ** 2), rot2, "im"
    else:
        def F(x):
            z = omega * x * rot
            if x == 0.0:
                return 0j
            # scaled Hankel function: hankel1 itself misbehaves near underflow
            return x * cmath.exp(expo(x) + 1j * z) * complex(special.hankel1e(0, z))
        pref, phase, part = 1.0 / (2 * math.pi * ell ** 2), rot2, "re"

    def decay(x):
        return -(expo(x).real) + omega * x * rot.imag - math.log(max(x, 1.0)) * (d > 1)

    smax = 1.0
    while decay(smax) < 40.0:
        smax *= 2.0
        if smax > 1e12:
            raise InversionAccuracyError("integrand does not decay along the rotated ray")
    pts = [0.0] + [smax * 4.0 ** -k for k in range(20, -1, -1)]
    if part == "re":
        h = lambda x: (phase * F(x)).real
    else:
        h = lambda x: (phase * F(x)).imag
    val, err = quad_pieces(h, pts, rtol=rtol, atol=1e-300, check=math.inf)
    return pref * val, pref * err


def _rotated_best(p, t, r, ell, rtol, accuracy):
    out, err = _rotated(p, t, r, ell, rtol)
    if err > accuracy * abs(out):
        # QUADPACK's estimate is pessimistic when the ray integrand cancels;
        # two further independent rays give a sharper one
        steep = _max_angle(p.f)
        if steep > 0.3 * math.pi:
            angles = (steep, 0.5 * (steep + 0.25 * math.pi))
        else:
            angles = (math.pi / 6.0, math.pi / 5.0)
        out, err2 = _rotated(p, t, r, ell, rtol, theta=angles[0])
        out3, _ = _rotated(p, t, r, ell, rtol, theta=angles[1])
        err = min(err, max(abs(out3 - out), 1e-3 * err2))
    return out, err


def _real_axis(p, t, r, ell, rtol, g=None):
    d = p.d
    smax = _sigma_max(p if g is None else ProcessSpec(d, p.f), t, ell)
    if g is None:
        g = lambda x: math.exp(-t * _psi_scalar(p, x / ell))
    omega = r / ell
    pts = [0.0] + [smax * 2.0 ** -k for k in range(40, -1, -1)]
    if r == 0 or omega * smax < 1e-6:
        poly = {1: lambda x: g(x), 2: lambda x: x * g(x), 3: lambda x: x * x * g(x)}[d]
        val, err = quad_pieces(poly, pts, rtol=rtol, atol=1e-300, check=math.inf)
        pref = {1: 1.0 / (math.pi * ell), 2: 1.0 / (2 * math.pi * ell ** 2),
                3: 1.0 / (2 * math.pi ** 2 * ell ** 3)}[d]
        return pref * val, pref * err
    if d == 2:
        val = _hankel0(lambda x: x * g(x), omega, smax, rtol)
        return val / (2 * math.pi * ell ** 2), 0.0
    if d == 1:
        h, weight, pref = g, "cos", 1.0 / (math.pi * ell)
    else:
        h, weight, pref = (lambda x: x * g(x)), "sin", 1.0 / (2 * math.pi ** 2 * r * ell ** 2)
    val = err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e = quad(h, lo, hi, rtol=rtol, atol=1e-300, weight=weight, wvar=omega,
                    limit=2000, check=math.inf)
        val += v
        err += e
    return pref * val, pref * err


def _perturbed(p, t, r, ell, rtol, accuracy):
    """exp(-t Psi_X) = exp(t H0) [exp(-t phi) + exp(-t phi) expm1(-t H^)].

    The first term is the subordinate kernel, inverted on the rotated ray;
    the second is O(t |H^|) and only needs absolute accuracy.
    """
    base = ProcessSpec(p.d, p.f)
    if r > 0:
        main, main_err = _rotated_best(base, t, r, ell, rtol, accuracy)
    else:
        main, main_err = _real_axis(base, t, 0.0, ell, rtol)

    def g(x):
        s = x / ell
        return math.exp(-t * bf.phi_scalar(p.f, s * s)) * math.expm1(
            -t * float(bump_transform(p, s)[0]))

    corr, corr_err = _real_axis(p, t, r, ell, rtol, g=g)
    scale = math.exp(t * bump_mass(p))
    return scale * (main + corr), scale * (main_err + corr_err)


def free_kernel(p: ProcessSpec, t, r, rtol=1e-10, accuracy=1e-7, method="auto"):
    """Free-space transition density p(t, r) by radial Fourier inversion.

    Parameters
    ----------
    method : {"auto", "rotated", "real", "split"}
        ``"real"`` integrates along the real frequency axis (QUADPACK's
        Fourier-weighted rules for d = 1, 3, J0 panels with Wynn acceleration
        for d = 2). ``"rotated"`` turns the contour by pi/4, which requires
        an analytic exponent and so is only available for subordinate
        Brownian motion. ``"split"`` handles the perturbed mode by
        inverting the subordinate part on the rotated ray and the bump
        correction on the real axis. ``"auto"`` picks the rotated ray for
        subordinate Brownian motion and ``"split"`` otherwise.

    Raises
    ------
    InversionAccuracyError
        If the quadrature error estimate exceeds ``accuracy`` times the value.
    """
    if p.d not in (1, 2, 3):
        raise DomainError("free_kernel is available for d in {1, 2, 3}")
    if not t > 0:
        raise DomainError("t must be > 0")
    r = float(r)
    if r < 0:
        raise DomainError("r must be >= 0")
    if method == "auto":
        method = ("rotated" if r > 0 else "real") if p.is_sbm else "split"
    if method == "rotated" and not p.is_sbm:
        raise DomainError("the rotated contour needs an analytic exponent (jump_mode='sbm')")
    if method == "split" and p.is_sbm:
        raise DomainError("method='split' applies to jump_mode='perturbed'")
    ell = bf.capital_phi_inv(p.f, t)
    try:
        if method == "rotated":
            out, err = _rotated_best(p, t, r, ell, rtol, accuracy)
        elif method == "real":
            out, err = _real_axis(p, t, r, ell, rtol)
        elif method == "split":
            out, err = _perturbed(p, t, r, ell, rtol, accuracy)
        else:
            raise DomainError(f"unknown method {method!r}")
    except QuadratureError as exc:
        raise InversionAccuracyError(str(exc), exc.value, exc.abserr) from None
    if not out > 0 or err > accuracy * abs(out):
        raise InversionAccuracyError(
            f"free_kernel inversion inaccurate at t={t}, r={r}: value={out!r}, "
            f"relative error estimate={err / max(abs(out), 1e-300):.2e}",
            value=out, abserr=err)
    return out


def free_kernel_grid(p, t_values, r_values, **kw):
    return np.array([[free_kernel(p, t, r, **kw) for r in r_values] for t in t_values])


# ---------------------------------------------------------------------------
# conditions (B) and (C)


@dataclass
class ConditionReport:
    name: str
    constant: float
    scale: float
    passed: bool
    worst: tuple
    two_sided: float | None = None


def check_condition_B(p: ProcessSpec, t_grid, r_grid, kernel=None, cap=1e6):
    """Smallest C1 (with C2 = 1) such that p(t, u) <= C1 p(t, r) for u >= r on the grid."""
    t_grid = np.asarray(t_grid, float)
    r_grid = np.sort(np.asarray(r_grid, float))
    P = free_kernel_grid(p, t_grid, r_grid) if kernel is None else np.asarray(kernel)
    # for each r: the largest p(t, u) over u >= r
    tail_max = np.maximum.accumulate(P[:, ::-1], axis=1)[:, ::-1]
    ratio = tail_max / P
    i, k = np.unravel_index(np.argmax(ratio), ratio.shape)
    c1 = float(ratio[i, k])
    return ConditionReport("B", c1, 1.0, bool(np.isfinite(c1) and c1 <= cap),
                           (float(t_grid[i]), float(r_grid[k])))


def check_condition_C(p: ProcessSpec, t_grid, r_grid, kernel=None, c4=1.0, cap=1e6):
    """Smallest C3 with p(t, r) <= C3 t j(C4 r) on the grid; also the two-sided constant."""
    t_grid = np.asarray(t_grid, float)
    r_grid = np.asarray(r_grid, float)
    P = free_kernel_grid(p, t_grid, r_grid) if kernel is None else np.asarray(kernel)
    T, R = np.meshgrid(t_grid, r_grid, indexing="ij")
    tj = T * np.asarray(jump_density_jx(p, c4 * R))
    ratio = P / tj
    i, k = np.unravel_index(np.argmax(ratio), ratio.shape)
    c3 = float(ratio[i, k])
    ondiag = np.asarray(bf.capital_phi_inv(p.f, T)) ** (-p.d)
    shape = np.minimum(ondiag, T * np.asarray(jump_density_jx(p, R)))
    sandwich_hi = np.minimum(ondiag, tj)
    two = float(max(np.max(P / sandwich_hi), np.max(shape / P)))
    return ConditionReport("C", c3, float(c4), bool(np.isfinite(c3) and c3 <= cap),
                           (float(t_grid[i]), float(r_grid[k])), two)
