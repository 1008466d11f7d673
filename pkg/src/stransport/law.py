"""Transport laws: the coefficient matrix function s -> Gamma(s) along one curve."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

INTERPOLATIONS = ("linear", "cubic")


def _check_domain(domain) -> tuple[float, float]:
    lo, hi = (float(v) for v in domain)
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise ValueError(f"invalid domain [{lo}, {hi}]")
    return lo, hi


@dataclass(frozen=True)
class TransportLaw:
    """Coefficients Gamma^i_j(s) of a linear transport along a path.

    ``coefficients`` maps a scalar parameter to an ``(n, n)`` array whose row
    index is the upper index.  ``batch`` optionally evaluates a whole array of
    parameters at once (returning ``(m, n, n)``); the integrator uses it when
    present.  ``breakpoints`` lists interior parameters where the coefficients
    are only piecewise smooth (tabulation knots); integration never steps
    across them.
    """

    domain: tuple[float, float]
    dim: int
    coefficients: Callable[[float], np.ndarray]
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    breakpoints: tuple[float, ...] = ()
    samples: Optional[tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False, compare=False)
    interpolation: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "domain", _check_domain(self.domain))
        if int(self.dim) < 1:
            raise ValueError("dim must be positive")
        lo, hi = self.domain
        bps = sorted({float(b) for b in self.breakpoints if lo < float(b) < hi})
        object.__setattr__(self, "breakpoints", tuple(bps))

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    def contains(self, s: float) -> bool:
        lo, hi = self.domain
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        return lo - slack <= s <= hi + slack

    def _require(self, s) -> None:
        s = np.atleast_1d(s)
        lo, hi = self.domain
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(s < lo - slack) or np.any(s > hi + slack):
            raise ValueError(f"parameter outside law domain [{lo}, {hi}]")

    def __call__(self, s: float) -> np.ndarray:
        self._require(s)
        mat = np.asarray(self.coefficients(float(s)), dtype=float)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"coefficient matrix has shape {mat.shape}, expected {(self.dim, self.dim)}")
        return mat

    def matrices(self, s: Sequence[float]) -> np.ndarray:
        """Evaluate the coefficients at every entry of ``s``; shape ``(m, n, n)``."""
        s = np.asarray(s, dtype=float).reshape(-1)
        self._require(s)
        if self.batch is not None:
            out = np.asarray(self.batch(s), dtype=float)
        else:
            out = np.array([self.coefficients(float(v)) for v in s], dtype=float).reshape(len(s), self.dim, self.dim)
        if out.shape != (len(s), self.dim, self.dim):
            raise ValueError(f"batched coefficients have shape {out.shape}")
        return out

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_callable(cls, func, domain, dim: int, *, batch=None, breakpoints=()) -> "TransportLaw":
        return cls(domain=tuple(domain), dim=int(dim), coefficients=func, batch=batch, breakpoints=tuple(breakpoints))

    @classmethod
    def constant(cls, matrix, domain=(0.0, 1.0)) -> "TransportLaw":
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("constant law needs a square matrix")
        mat.setflags(write=False)
        return cls(
            domain=tuple(domain),
            dim=mat.shape[0],
            coefficients=lambda s: mat.copy(),
            batch=lambda s: np.broadcast_to(mat, (len(s),) + mat.shape).copy(),
        )

    @classmethod
    def zero(cls, dim: int, domain=(0.0, 1.0)) -> "TransportLaw":
        return cls.constant(np.zeros((dim, dim)), domain)

    @classmethod
    def tabulated(cls, s, gamma, interpolation: str = "linear") -> "TransportLaw":
        """Interpolate ``gamma[k]`` (shape ``(m, n, n)``) given at strictly increasing ``s[k]``."""
        s = np.array(s, dtype=float)
        gamma = np.array(gamma, dtype=float)
        if s.ndim != 1 or len(s) < 2:
            raise ValueError("need at least two samples")
        if np.any(np.diff(s) <= 0):
            raise ValueError("sample grid must be strictly increasing")
        if gamma.ndim != 3 or gamma.shape[0] != len(s) or gamma.shape[1] != gamma.shape[2]:
            raise ValueError(f"samples must have shape (m, n, n) with m={len(s)}, got {gamma.shape}")
        if not np.all(np.isfinite(gamma)):
            raise ValueError("non-finite coefficient samples")
        if interpolation not in INTERPOLATIONS:
            raise ValueError(f"unknown interpolation {interpolation!r}")
        s.setflags(write=False)
        gamma.setflags(write=False)
        n = gamma.shape[1]

        if interpolation == "cubic" and len(s) >= 3:
            spline = CubicSpline(s, gamma, axis=0)

            def batch(x):
                return spline(np.asarray(x, dtype=float))
        else:

            def batch(x):
                x = np.asarray(x, dtype=float)
                idx = np.clip(np.searchsorted(s, x, side="right") - 1, 0, len(s) - 2)
                w = ((x - s[idx]) / (s[idx + 1] - s[idx]))[:, None, None]
                return (1.0 - w) * gamma[idx] + w * gamma[idx + 1]

        return cls(
            domain=(s[0], s[-1]),
            dim=n,
            coefficients=lambda x: batch(np.array([x]))[0],
            batch=batch,
            breakpoints=tuple(s[1:-1]),
            samples=(s, gamma),
            interpolation=interpolation,
        )

    # -- combinators ------------------------------------------------------

    def negated(self) -> "TransportLaw":
        return TransportLaw(
            domain=self.domain,
            dim=self.dim,
            coefficients=lambda s: -self.coefficients(s),
            batch=None if self.batch is None else (lambda s: -self.batch(s)),
            breakpoints=self.breakpoints,
        )

    def __add__(self, other: "TransportLaw") -> "TransportLaw":
        if not isinstance(other, TransportLaw):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        if not np.allclose(other.domain, self.domain):
            raise ValueError("domain mismatch")
        both = self.batch is not None and other.batch is not None
        return TransportLaw(
            domain=self.domain,
            dim=self.dim,
            coefficients=lambda s: np.asarray(self.coefficients(s)) + np.asarray(other.coefficients(s)),
            batch=(lambda s: self.batch(s) + other.batch(s)) if both else None,
            breakpoints=self.breakpoints + other.breakpoints,
        )

    def sample(self, num: int = 11) -> tuple[np.ndarray, np.ndarray]:
        """Tabulate the law on ``num`` evenly spaced parameters."""
        s = np.linspace(*self.domain, num)
        return s, self.matrices(s)

    def max_jump(self, num: int = 201) -> float:
        """Largest entry change between adjacent evaluations on an even grid.

        For a continuous law this shrinks like the grid spacing.
        """
        _, g = self.sample(num)
        return float(np.max(np.abs(np.diff(g, axis=0)))) if num > 1 else 0.0
