"""Subordinator increment samplers driven by a numpy Generator."""
from __future__ import annotations

import math

import numpy as np

from ..bernstein import BernsteinFunction
from ..errors import DomainError
from . import tables


_BLOCK = 1 << 20


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _open_uniform(rng, size):
    u = rng.random(size)
    return np.where(u == 0.0, 2.0 ** -54, u)


def _kanter(beta, u, e):
    th = math.pi * u
    ls = (np.log(np.sin(beta * th)) - np.log(np.sin(th)) / beta
          + (1.0 - beta) / beta * (np.log(np.sin((1.0 - beta) * th)) - np.log(e)))
    return np.exp(ls)


def _stable_increment(beta, h, rng, size):
    u = _open_uniform(rng, size)
    e = rng.standard_exponential(size)
    return h ** (1.0 / beta) * _kanter(beta, u, e)


def _scalar(x, size):
    return float(x) if size is None else x


def sample_stable_subordinator(alpha: float, h: float, rng=None, size=None):
    """Increments over time h of the subordinator with exponent lambda^{alpha/2}.

    Uses Kanter's representation: with U uniform on (0, pi), E standard
    exponential and b = alpha/2,
    S_1 = sin(bU) / sin(U)^{1/b} * (sin((1-b)U) / E)^{(1-b)/b}.

    Parameters
    ----------
    alpha : float in (0, 2)
    h : float > 0
    rng : numpy Generator or seed
    size : int or tuple, optional
        Number of samples; a float is returned when omitted.
    """
    if not 0 < alpha < 2:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    if not h > 0:
        raise DomainError("h must be > 0")
    return _scalar(_stable_increment(alpha / 2.0, h, _rng(rng), size), size)


def sample_subordinator(f: BernsteinFunction, h: float, eps: float, rng=None, size=None):
    """Increments over time h of the subordinator with exponent f.

    Stable is sampled exactly and mixed as a sum of two exact stable
    increments. Other families use the compound-Poisson scheme: jumps of
    size >= eps arrive at rate N(eps) and are drawn by inversion of the
    tabulated tail, while jumps below eps are replaced by their mean drift
    m(eps) = int_0^eps t mu(t) dt.
    """
    if not (h > 0 and eps > 0):
        raise DomainError("h and eps must be > 0")
    rng = _rng(rng)
    if f.family == "stable":
        out = _stable_increment(f.index, h, rng, size)
    elif f.family == "mixed":
        out = (_stable_increment(f.index, h, rng, size)
               + _stable_increment(f.beta / 2.0, h, rng, size))
    else:
        table = tables.subordinator_table(f, float(eps))
        m = tables.drift_below(f, float(eps))
        shape = () if size is None else size
        flat = rng.poisson(h * table.rate, shape).ravel()
        total = np.zeros(flat.size)
        # blocks of about a million jumps keep memory flat
        ends = np.searchsorted(np.cumsum(flat), np.arange(1, flat.sum() // _BLOCK + 2) * _BLOCK)
        lo = 0
        for hi in np.unique(np.append(np.minimum(ends + 1, flat.size), flat.size)):
            c = flat[lo:hi]
            jumps = table.sample(_open_uniform(rng, int(c.sum())))
            owner = np.repeat(np.arange(c.size), c)
            total[lo:hi] = np.bincount(owner, weights=jumps, minlength=c.size)
            lo = hi
        out = (h * m + total).reshape(shape)
    return _scalar(out, size)
