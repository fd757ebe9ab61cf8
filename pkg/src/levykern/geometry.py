"""Test domains with exact distance to the complement.

Three shapes are supported: balls, annuli and finite unions of open
intervals on the line. Each carries its C^{1,1} characteristics (R2, Lambda)
and kappa-fat characteristics (R1, kappa), derived from the geometry.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

KINDS = ("ball", "annulus", "intervals")


def _as_points(x, d):
    """Return an (n, d) array and whether the input was a single point."""
    a = np.asarray(x, dtype=float)
    if d == 1:
        return a.reshape(-1, 1), a.ndim == 0
    if a.ndim == 1:
        if a.shape[0] != d:
            raise DomainError(f"point has dimension {a.shape[0]}, expected {d}")
        return a.reshape(1, d), True
    if a.shape[-1] != d:
        raise DomainError(f"points have dimension {a.shape[-1]}, expected {d}")
    return a.reshape(-1, d), False


@dataclass(frozen=True)
class Domain:
    """Bounded open set with closed-form distance to its complement.

    Use the constructors :func:`ball`, :func:`annulus` and :func:`intervals`
    rather than building this directly.

    Attributes
    ----------
    kind : {"ball", "annulus", "intervals"}
    d : int
        Ambient dimension (always 1 for interval unions).
    center : tuple of float
    radius, r_in, r_out : float
        Radii; unused ones are 0.
    parts : tuple of (float, float)
        The open intervals, sorted, for ``kind="intervals"``.
    c11 : (R2, Lambda)
    kappa_fat : (R1, kappa)
    """

    kind: str
    d: int
    center: tuple = ()
    radius: float = 0.0
    r_in: float = 0.0
    r_out: float = 0.0
    parts: tuple = ()
    c11: tuple = field(default=None, compare=False)
    kappa_fat: tuple = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.d < 1:
            raise DomainError("dimension must be >= 1")
        if self.kind == "ball":
            if not self.radius > 0:
                raise DomainError("ball radius must be > 0")
            r2 = self.radius
            fat = (self.radius, 0.5)
        elif self.kind == "annulus":
            if not 0 < self.r_in < self.r_out:
                raise DomainError("annulus needs 0 < r_in < r_out")
            r2 = min(self.r_in, self.r_out - self.r_in)
            fat = ((self.r_out - self.r_in) / 2.0, 0.5)
        else:
            if self.d != 1:
                raise DomainError("interval unions live in d = 1")
            if not self.parts:
                raise DomainError("need at least one interval")
            for lo, hi in self.parts:
                if not hi > lo:
                    raise DomainError(f"interval ({lo}, {hi}) is empty")
            gaps = [b[0] - a[1] for a, b in zip(self.parts[:-1], self.parts[1:])]
            if any(g <= 0 for g in gaps):
                raise DomainError("intervals must be pairwise disjoint with positive gaps")
            shortest = min(hi - lo for lo, hi in self.parts)
            # interior and exterior touching balls are intervals of length 2 R2
            r2 = min([shortest] + gaps) / 2.0
            fat = (shortest / 2.0, 0.5)
        if len(self.center) != self.d:
            object.__setattr__(self, "center", tuple([0.0] * self.d) if not self.center
                               else tuple(self.center))
            if len(self.center) != self.d:
                raise DomainError("center dimension does not match d")
        if self.c11 is None:
            # Lambda = 0 is a convention: any Lambda >= 0 is admissible here
            object.__setattr__(self, "c11", (r2, 0.0))
        if self.kappa_fat is None:
            object.__setattr__(self, "kappa_fat", fat)

    # -- basic predicates -------------------------------------------------

    def _radial(self, pts):
        return np.linalg.norm(pts - np.asarray(self.center), axis=1)

    def delta(self, x):
        """Euclidean distance from ``x`` to the complement; 0 outside."""
        pts, single = _as_points(x, self.d)
        if self.kind == "ball":
            out = np.maximum(0.0, self.radius - self._radial(pts))
        elif self.kind == "annulus":
            rho = self._radial(pts)
            out = np.maximum(0.0, np.minimum(rho - self.r_in, self.r_out - rho))
        else:
            v = pts[:, 0]
            out = np.zeros_like(v)
            for lo, hi in self.parts:
                out = np.maximum(out, np.minimum(v - lo, hi - v))
        return float(out[0]) if single else out

    def contains(self, x):
        d = self.delta(x)
        return bool(d > 0) if np.ndim(d) == 0 else d > 0

    @property
    def diam(self) -> float:
        if self.kind == "ball":
            return 2.0 * self.radius
        if self.kind == "annulus":
            return 2.0 * self.r_out
        return self.parts[-1][1] - self.parts[0][0]

    @property
    def bounded(self):
        return True

    # -- construction helpers ---------------------------------------------

    def scaled(self, k: float) -> "Domain":
        """The dilation kD (about the origin)."""
        if not k > 0:
            raise DomainError("scale factor must be > 0")
        c = tuple(k * v for v in self.center)
        if self.kind == "ball":
            return Domain("ball", self.d, c, radius=k * self.radius)
        if self.kind == "annulus":
            return Domain("annulus", self.d, c, r_in=k * self.r_in, r_out=k * self.r_out)
        return Domain("intervals", 1, (0.0,), parts=tuple((k * a, k * b) for a, b in self.parts))

    def point_at_depth(self, delta: float, direction=None):
        """A point of D with delta_D = ``delta``.

        Balls and annuli place it along ``direction`` (default e1); interval
        unions use the left end of the first interval. Raises DomainError
        when no such point exists.
        """
        if not delta > 0:
            raise DomainError("depth must be > 0")
        if self.kind == "intervals":
            lo, hi = self.parts[0]
            if delta > (hi - lo) / 2.0:
                raise DomainError("depth exceeds the half-length of the interval")
            return lo + delta
        u = np.zeros(self.d)
        u[0] = 1.0
        if direction is not None:
            u = np.asarray(direction, dtype=float)
            u = u / np.linalg.norm(u)
        if self.kind == "ball":
            if delta > self.radius:
                raise DomainError("depth exceeds the radius")
            rho = self.radius - delta
        else:
            if delta > (self.r_out - self.r_in) / 2.0:
                raise DomainError("depth exceeds the half-width of the annulus")
            rho = self.r_in + delta
        pt = np.asarray(self.center) + rho * u
        return float(pt[0]) if self.d == 1 else pt

    def fat_witness(self, x, r):
        """A point A with B(A, kappa r) inside D and B(x, r), for x in the closure.

        The witness clips the radial (or linear) coordinate of x into the
        band that sits at least kappa r away from the boundary; it moves x by
        at most kappa r, so with kappa = 1/2 the small ball stays in B(x, r).
        """
        r1, kappa = self.kappa_fat
        if not 0 < r <= r1:
            raise DomainError(f"r must lie in (0, {r1}]")
        pts, _ = _as_points(x, self.d)
        p = pts[0]
        m = kappa * r
        if self.kind == "intervals":
            v = p[0]
            best = min(self.parts, key=lambda I: max(I[0] - v, v - I[1], 0.0))
            if max(best[0] - v, v - best[1]) > 1e-12:
                raise DomainError("x is not in the closure of D")
            a = min(max(v, best[0] + m), best[1] - m)
            return np.array([a]), m
        c = np.asarray(self.center)
        rho = float(np.linalg.norm(p - c))
        if self.kind == "ball":
            lo, hi = 0.0, self.radius - m
            if rho > self.radius * (1 + 1e-12):
                raise DomainError("x is not in the closure of D")
        else:
            lo, hi = self.r_in + m, self.r_out - m
            if not self.r_in * (1 - 1e-12) <= rho <= self.r_out * (1 + 1e-12):
                raise DomainError("x is not in the closure of D")
        target = min(max(rho, lo), hi)
        if rho == 0.0:
            u = np.zeros(self.d)
            u[0] = 1.0
        else:
            u = (p - c) / rho
        return c + target * u, m

    def __str__(self):
        if self.kind == "ball":
            s = f"ball:r={self.radius!r},d={self.d}"
        elif self.kind == "annulus":
            s = f"annulus:rin={self.r_in!r},rout={self.r_out!r},d={self.d}"
        else:
            return "intervals:" + "|".join(f"({a!r},{b!r})" for a, b in self.parts)
        if any(self.center):
            s += ",center=" + ";".join(repr(v) for v in self.center)
        return s


def ball(radius=1.0, d=1, center=None) -> Domain:
    return Domain("ball", d, tuple(center) if center is not None else (), radius=float(radius))


def annulus(r_in, r_out, d=2, center=None) -> Domain:
    return Domain("annulus", d, tuple(center) if center is not None else (),
                  r_in=float(r_in), r_out=float(r_out))


def intervals(parts) -> Domain:
    parts = tuple(sorted((float(a), float(b)) for a, b in parts))
    return Domain("intervals", 1, (0.0,), parts=parts)


def delta_D(D: Domain, x):
    return D.delta(x)


def contains(D: Domain, x):
    return D.contains(x)


def diam(D: Domain) -> float:
    return D.diam


_INTERVAL = re.compile(r"^\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)$")


def parse_domain(text: str, d: int | None = None) -> Domain:
    """Build a domain from strings like ``ball:r=1``, ``annulus:rin=1,rout=2``
    or ``intervals:(-1,1)|(2,3)``.

    ``d`` fills in the dimension when the string does not give one; balls
    default to d = 1 and annuli to d = 2.
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "intervals":
            parts = []
            for tok in rest.split("|"):
                m = _INTERVAL.match(tok.strip())
                if not m:
                    raise ConfigError(f"bad interval {tok.strip()!r} in {text!r}")
                parts.append((float(m.group(1)), float(m.group(2))))
            return intervals(parts)
        if kind not in ("ball", "annulus"):
            raise ConfigError(f"unknown domain kind {kind!r} in {text!r}")
        kv = {}
        for tok in filter(None, (t.strip() for t in rest.split(","))):
            key, eq, val = tok.partition("=")
            if not eq:
                raise ConfigError(f"expected key=value, got {tok!r} in {text!r}")
            kv[key.strip().lower()] = val.strip()
        dim = int(kv.pop("d", d if d is not None else (1 if kind == "ball" else 2)))
        center = kv.pop("center", None)
        if center is not None:
            center = [float(v) for v in center.split(";")]
        if kind == "ball":
            radius = float(kv.pop("r"))
            out = ball(radius, dim, center)
        else:
            out = annulus(float(kv.pop("rin")), float(kv.pop("rout")), dim, center)
        if kv:
            raise ConfigError(f"unknown domain keys {sorted(kv)} in {text!r}")
        return out
    except KeyError as exc:
        raise ConfigError(f"missing domain key {exc.args[0]!r} in {text!r}") from None
    except (ValueError, DomainError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid domain {text!r}: {exc}") from None
