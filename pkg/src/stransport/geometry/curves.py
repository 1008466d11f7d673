"""Parametrized paths and the built-in curve catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class Curve:
    """A path s -> chart coordinates over ``domain`` with its tangent field.

    ``acceleration`` is the coordinate second derivative; it is optional and
    only needed by transports built from the covariant acceleration.
    """

    domain: tuple[float, float]
    dim: int
    position: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    acceleration: Optional[Callable[[float], np.ndarray]] = None
    breakpoints: tuple[float, ...] = ()
    name: str = "curve"

    def __post_init__(self):
        lo, hi = (float(v) for v in self.domain)
        if hi < lo:
            raise ValueError(f"invalid curve domain [{lo}, {hi}]")
        object.__setattr__(self, "domain", (lo, hi))

    def x(self, s: float) -> np.ndarray:
        return np.asarray(self.position(s), dtype=float)

    def u(self, s: float) -> np.ndarray:
        return np.asarray(self.velocity(s), dtype=float)

    def a(self, s: float) -> np.ndarray:
        if self.acceleration is None:
            raise ValueError(f"curve {self.name!r} has no acceleration")
        return np.asarray(self.acceleration(s), dtype=float)

    @property
    def start(self) -> np.ndarray:
        return self.x(self.domain[0])

    @property
    def end(self) -> np.ndarray:
        return self.x(self.domain[1])

    def velocity_defect(self, num: int = 7, h: Optional[float] = None) -> float:
        """Largest mismatch between ``velocity`` and central differences of ``position``."""
        lo, hi = self.domain
        h = h if h is not None else 1e-5 * max(hi - lo, 1e-300)
        worst = 0.0
        for s in np.linspace(lo + 2 * h, hi - 2 * h, num):
            fd = (self.x(s + h) - self.x(s - h)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(fd - self.u(s)))))
        return worst

    @classmethod
    def tabulated(cls, s, coords, name: str = "tabulated") -> "Curve":
        """Cubic-spline curve through ``coords[k]`` at strictly increasing ``s[k]``."""
        s = np.asarray(s, dtype=float)
        coords = np.asarray(coords, dtype=float)
        if s.ndim != 1 or len(s) < 2:
            raise ValueError("need at least two samples")
        if np.any(np.diff(s) <= 0):
            raise ValueError("sample grid must be strictly increasing")
        if coords.ndim != 2 or coords.shape[0] != len(s):
            raise ValueError(f"coordinates must have shape ({len(s)}, n)")
        spline = CubicSpline(s, coords, axis=0, bc_type="natural" if len(s) > 2 else "not-a-knot")
        vel = spline.derivative()
        acc = vel.derivative()
        return cls(
            (s[0], s[-1]),
            coords.shape[1],
            lambda x: spline(x),
            lambda x: vel(x),
            lambda x: acc(x),
            breakpoints=tuple(s[1:-1]),
            name=name,
        )


def line(start, direction, domain=(0.0, 1.0)) -> Curve:
    x0 = np.asarray(start, dtype=float)
    d = np.asarray(direction, dtype=float)
    if x0.shape != d.shape:
        raise ValueError("start and direction differ in length")
    zero = np.zeros_like(d)
    return Curve(tuple(domain), len(d), lambda s: x0 + s * d, lambda s: d.copy(), lambda s: zero.copy(), name="line")


def latitude_circle(theta0: float, turns: float = 1.0) -> Curve:
    """theta = theta0, phi = s on the unit sphere, s in [0, 2 pi turns]."""
    if not 0.0 < theta0 < math.pi:
        raise ValueError("theta0 must lie strictly between 0 and pi")
    return Curve(
        (0.0, 2.0 * math.pi * turns),
        2,
        lambda s: np.array([theta0, s]),
        lambda s: np.array([0.0, 1.0]),
        lambda s: np.zeros(2),
        name=f"latitude-circle({theta0})",
    )


def great_circle(turns: float = 1.0) -> Curve:
    """The equator, a geodesic of the unit sphere."""
    curve = latitude_circle(math.pi / 2, turns)
    return Curve(curve.domain, 2, curve.position, curve.velocity, curve.acceleration, name="great-circle")


def accelerated_worldline(alpha: float = 1.0, domain=(0.0, 1.0), dim: int = 2) -> Curve:
    """Hyperbolic motion with proper acceleration ``alpha``, proper-time parametrized.

    u = (cosh(alpha s), sinh(alpha s), 0, ...).
    """
    if alpha == 0:
        raise ValueError("alpha must be non-zero")
    pad = np.zeros(dim - 2)

    def pos(s):
        return np.concatenate([[math.sinh(alpha * s) / alpha, math.cosh(alpha * s) / alpha], pad])

    def vel(s):
        return np.concatenate([[math.cosh(alpha * s), math.sinh(alpha * s)], pad])

    def acc(s):
        return np.concatenate([[alpha * math.sinh(alpha * s), alpha * math.cosh(alpha * s)], pad])

    return Curve(tuple(domain), dim, pos, vel, acc, name=f"accelerated-worldline({alpha})")


def circular_worldline(radius: float, omega: float, orbits: float = 1.0) -> Curve:
    """Uniform circular motion in 2+1 Minkowski, proper-time parametrized.

    Lab angular velocity ``omega``; the domain covers ``orbits`` lab orbits.
    """
    v = radius * omega
    if not 0 < abs(v) < 1:
        raise ValueError("orbital speed radius*omega must lie in (0, 1)")
    lorentz = 1.0 / math.sqrt(1.0 - v * v)
    rate = omega * lorentz

    def pos(s):
        return np.array([lorentz * s, radius * math.cos(rate * s), radius * math.sin(rate * s)])

    def vel(s):
        return np.array([lorentz, -radius * rate * math.sin(rate * s), radius * rate * math.cos(rate * s)])

    def acc(s):
        return np.array([0.0, -radius * rate**2 * math.cos(rate * s), -radius * rate**2 * math.sin(rate * s)])

    return Curve((0.0, 2.0 * math.pi * orbits / rate), 3, pos, vel, acc, name=f"circular-worldline({radius}, {omega})")


CURVES = ("line", "latitude-circle", "great-circle", "accelerated-worldline", "circular-worldline")
