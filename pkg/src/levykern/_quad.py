"""Thin wrappers over scipy's QUADPACK bindings with explicit error checks."""
import math
import warnings

import numpy as np
from scipy import integrate

from .errors import QuadratureError


def quad(func, a, b, rtol=1e-10, atol=0.0, limit=200, points=None, check=1e-6, **kw):
    """Adaptive Gauss-Kronrod integral of ``func`` over [a, b].

    Raises QuadratureError when the achieved error estimate exceeds
    ``check`` relative to the value (and ``atol``).
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if points is not None and math.isfinite(a) and math.isfinite(b):
            val, err = integrate.quad(func, a, b, epsabs=atol, epsrel=rtol, limit=limit,
                                      points=points, **kw)
        else:
            val, err = integrate.quad(func, a, b, epsabs=atol, epsrel=rtol, limit=limit, **kw)
    if not np.isfinite(val) or err > max(check * abs(val), atol, 1e-300):
        raise QuadratureError(
            f"quadrature on [{a}, {b}] did not converge: value={val!r}, abserr={err!r}",
            value=val, abserr=err)
    return val, err


def quad_pieces(func, edges, rtol=1e-10, atol=0.0, check=1e-6, limit=200):
    """Sum of ``quad`` over consecutive panels; the last edge may be inf."""
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        v, e = quad(func, lo, hi, rtol=rtol, atol=atol, check=math.inf, limit=limit)
        total += v
        err += e
    if not np.isfinite(total) or err > max(check * abs(total), atol, 1e-300):
        raise QuadratureError(
            f"piecewise quadrature did not converge: value={total!r}, abserr={err!r}",
            value=total, abserr=err)
    return total, err
