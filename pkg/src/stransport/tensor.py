"""Dense component algebra for type-(p, q) tensors in one n-dimensional fiber.

Components are stored as an array of shape ``(n,) * (p + q)``; the first ``p``
axes are the contravariant (upper) slots, the remaining ``q`` axes covariant.
In every matrix the row index is the upper index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .law import TransportLaw


@dataclass(frozen=True, eq=False)
class TensorComponents:
    p: int
    q: int
    dim: int
    values: np.ndarray

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValueError("ranks must be non-negative")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        vals = np.array(self.values, dtype=float)
        shape = (self.dim,) * (self.p + self.q)
        if vals.size != self.dim ** (self.p + self.q):
            raise ValueError(f"expected {self.dim ** (self.p + self.q)} components, got {vals.size}")
        vals = vals.reshape(shape)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def scalar(cls, value: float, dim: int = 1) -> "TensorComponents":
        return cls(0, 0, dim, np.array(float(value)))

    @classmethod
    def vector(cls, comps) -> "TensorComponents":
        comps = np.asarray(comps, dtype=float)
        return cls(1, 0, len(comps), comps)

    @classmethod
    def covector(cls, comps) -> "TensorComponents":
        comps = np.asarray(comps, dtype=float)
        return cls(0, 1, len(comps), comps)

    @classmethod
    def random(cls, p: int, q: int, dim: int, rng: np.random.Generator) -> "TensorComponents":
        return cls(p, q, dim, rng.uniform(-1.0, 1.0, size=(dim,) * (p + q)))

    @property
    def rank(self) -> int:
        return self.p + self.q

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def with_values(self, values) -> "TensorComponents":
        return TensorComponents(self.p, self.q, self.dim, values)

    def __add__(self, other: "TensorComponents") -> "TensorComponents":
        _same_type(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "TensorComponents") -> "TensorComponents":
        _same_type(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, factor: float) -> "TensorComponents":
        return self.with_values(float(factor) * self.values)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __repr__(self):
        return f"TensorComponents(p={self.p}, q={self.q}, dim={self.dim}, values={self.values.tolist()!r})"


def _same_type(a: TensorComponents, b: TensorComponents) -> None:
    if (a.p, a.q, a.dim) != (b.p, b.q, b.dim):
        raise ValueError(f"type mismatch: ({a.p},{a.q}) in dim {a.dim} vs ({b.p},{b.q}) in dim {b.dim}")


def apply_slot_matrices(t: TensorComponents, upper: np.ndarray, lower: np.ndarray) -> TensorComponents:
    """Act with ``upper`` on every contravariant slot and ``lower`` on every covariant one.

    Contravariant components transform as ``v -> upper @ v``; covariant ones
    as the row vector ``w -> w @ lower``.
    """
    vals = t.values
    for axis in range(t.rank):
        mat = upper if axis < t.p else lower.T
        vals = np.moveaxis(np.tensordot(mat, vals, axes=([1], [axis])), 0, axis)
    return t.with_values(vals)


def tensor_product(a: TensorComponents, b: TensorComponents) -> TensorComponents:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    out = np.multiply.outer(a.values, b.values)
    # reorder to (upper_a, upper_b, lower_a, lower_b)
    order = (
        list(range(a.p))
        + list(range(a.rank, a.rank + b.p))
        + list(range(a.p, a.rank))
        + list(range(a.rank + b.p, a.rank + b.rank))
    )
    return TensorComponents(a.p + b.p, a.q + b.q, a.dim, np.transpose(out, order) if order else out)


def contract(t: TensorComponents, upper_slot: int, lower_slot: int) -> TensorComponents:
    """Sum over the paired index of contravariant slot ``upper_slot`` and covariant slot ``lower_slot`` (0-based)."""
    if t.p < 1 or t.q < 1:
        raise ValueError(f"cannot contract a type-({t.p},{t.q}) tensor")
    if not (0 <= upper_slot < t.p):
        raise IndexError(f"upper slot {upper_slot} out of range for p={t.p}")
    if not (0 <= lower_slot < t.q):
        raise IndexError(f"lower slot {lower_slot} out of range for q={t.q}")
    vals = np.trace(t.values, axis1=upper_slot, axis2=t.p + lower_slot)
    return TensorComponents(t.p - 1, t.q - 1, t.dim, vals)


@dataclass(frozen=True, eq=False)
class BasisChange:
    """New basis ``E_i' = forward[i, i'] E_i`` at one point.

    ``inverse`` is computed when omitted; ``derivative`` is d(forward)/ds and
    is only needed to transform transport laws.
    """

    forward: np.ndarray
    inverse: Optional[np.ndarray] = None
    derivative: Optional[np.ndarray] = None
    tol: float = 1e-9

    def __post_init__(self):
        fwd = np.array(self.forward, dtype=float)
        if fwd.ndim != 2 or fwd.shape[0] != fwd.shape[1]:
            raise ValueError("basis change must be a square matrix")
        if self.inverse is None:
            try:
                inv = np.linalg.inv(fwd)
            except np.linalg.LinAlgError as exc:
                raise ValueError("singular basis change") from exc
        else:
            inv = np.array(self.inverse, dtype=float)
        if not np.all(np.isfinite(inv)):
            raise ValueError("singular basis change")
        if np.max(np.abs(fwd @ inv - np.eye(len(fwd)))) > self.tol * max(1.0, np.linalg.cond(fwd)):
            raise ValueError("inverse does not invert forward matrix")
        object.__setattr__(self, "forward", fwd)
        object.__setattr__(self, "inverse", inv)
        if self.derivative is not None:
            der = np.array(self.derivative, dtype=float)
            if der.shape != fwd.shape:
                raise ValueError("derivative shape differs from basis change")
            object.__setattr__(self, "derivative", der)

    @property
    def dim(self) -> int:
        return self.forward.shape[0]

    def inverted(self) -> "BasisChange":
        return BasisChange(self.inverse, self.forward)


def change_tensor_basis(t: TensorComponents, ch: BasisChange) -> TensorComponents:
    if ch.dim != t.dim:
        raise ValueError(f"dimension mismatch: tensor dim {t.dim}, basis change dim {ch.dim}")
    return apply_slot_matrices(t, ch.inverse, ch.forward)


def basis_change_path(
    forward: Callable[[float], np.ndarray],
    derivative: Optional[Callable[[float], np.ndarray]] = None,
    *,
    domain: tuple[float, float] = (0.0, 1.0),
    fd_step: Optional[float] = None,
) -> Callable[[float], BasisChange]:
    """Wrap an s-dependent basis matrix as ``s -> BasisChange``.

    Without an analytic ``derivative`` the derivative is taken by central
    differences with step ``fd_step`` (default 1e-6 of the domain length),
    one-sided at the domain ends.
    """
    lo, hi = domain
    h = fd_step if fd_step is not None else 1e-6 * max(hi - lo, 1e-300)

    def numeric(s):
        if s - h < lo:
            return (-3 * forward(s) + 4 * forward(s + h) - forward(s + 2 * h)) / (2 * h)
        if s + h > hi:
            return (3 * forward(s) - 4 * forward(s - h) + forward(s - 2 * h)) / (2 * h)
        return (np.asarray(forward(s + h)) - np.asarray(forward(s - h))) / (2 * h)

    dfun = derivative or numeric

    def at(s: float) -> BasisChange:
        return BasisChange(forward(s), derivative=dfun(s))

    return at


def change_law_basis(gamma: TransportLaw, ch: Callable[[float], BasisChange]) -> TransportLaw:
    """Coefficients of the same transport in the moved basis.

    ``Gamma' = A^-1 Gamma A + A^-1 dA/ds`` with ``A = ch(s).forward``.
    """

    def coeffs(s):
        c = ch(s)
        if c.dim != gamma.dim:
            raise ValueError(f"dimension mismatch: law dim {gamma.dim}, basis change dim {c.dim}")
        if c.derivative is None:
            raise ValueError("basis change carries no derivative; needed to transform a transport law")
        return c.inverse @ gamma.coefficients(s) @ c.forward + c.inverse @ c.derivative

    coeffs(gamma.domain[0])
    return TransportLaw(
        domain=gamma.domain,
        dim=gamma.dim,
        coefficients=coeffs,
        breakpoints=gamma.breakpoints,
    )
