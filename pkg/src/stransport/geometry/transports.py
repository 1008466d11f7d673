"""Transport laws built from a connection and curve data.

A derivation along the curve differs from covariant differentiation along
the tangent by a (1, 1) tensor B(s); its law is Gamma_parallel(s) + B(s).
The named transports below are particular choices of B.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..law import TransportLaw
from .curves import Curve
from .metric import ConnectionField, MetricField

UNIT_TOL = 1e-8
NULL_TOL = 1e-12
CHECK_SAMPLES = 9


@dataclass(frozen=True)
class VectorField:
    """Vector field X on the chart with Jacobian ``J[i, j] = d_j X^i``.

    Without an analytic Jacobian, central differences with step ``fd_step``.
    """

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = 1e-5

    def at(self, x) -> np.ndarray:
        return np.asarray(self.value(np.asarray(x, dtype=float)), dtype=float)

    def partials(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float)
        out = np.empty((self.dim, self.dim))
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = self.fd_step
            out[:, j] = (self.at(x + e) - self.at(x - e)) / (2 * self.fd_step)
        return out

    @classmethod
    def affine(cls, matrix, offset=None) -> "VectorField":
        """X(x) = matrix @ x + offset."""
        mat = np.array(matrix, dtype=float)
        off = np.zeros(len(mat)) if offset is None else np.array(offset, dtype=float)
        return cls(len(mat), lambda x: mat @ x + off, lambda x: mat.copy())


def covariant_jacobian(conn: ConnectionField, X: VectorField, point) -> np.ndarray:
    """``X^i_{;j} = d_j X^i + Gamma^i_{kj} X^k``."""
    c = conn.symbols(point)
    return X.partials(point) + np.einsum("ikj,k->ij", c, X.at(point))


def sigma_of_X(conn: ConnectionField, X: VectorField, point) -> np.ndarray:
    """(1, 1) tensor Sigma(X) with nabla_X = L_X + Sigma(X).

    ``Sigma^i_j = X^i_{;j} + T^i_{kj} X^k``; without torsion just X^i_{;j}.
    """
    if X.dim != conn.dim:
        raise ValueError(f"dimension mismatch: field {X.dim}, connection {conn.dim}")
    return covariant_jacobian(conn, X, point) + np.einsum("ikj,k->ij", conn.torsion_at(point), X.at(point))


def _dims(curve: Curve, conn: ConnectionField) -> None:
    if curve.dim != conn.dim:
        raise ValueError(f"dimension mismatch: curve {curve.dim}, connection {conn.dim}")


def parallel_law(c: Curve, conn: ConnectionField) -> TransportLaw:
    """Gamma^i_j(s) = Gamma^i_{jk}(gamma(s)) dgamma^k/ds."""
    _dims(c, conn)

    def coeffs(s):
        return np.einsum("ijk,k->ij", conn.symbols(c.x(s)), c.u(s))

    return TransportLaw.from_callable(coeffs, c.domain, c.dim, breakpoints=c.breakpoints)


@dataclass(frozen=True)
class DeformationField:
    """B(s): the (1, 1) tensor by which a derivation differs from nabla along the tangent."""

    domain: tuple[float, float]
    dim: int
    B: Callable[[float], np.ndarray]
    breakpoints: tuple[float, ...] = ()

    def __call__(self, s: float) -> np.ndarray:
        return np.asarray(self.B(s), dtype=float)

    def as_law(self) -> TransportLaw:
        return TransportLaw.from_callable(self.B, self.domain, self.dim, breakpoints=self.breakpoints)

    @classmethod
    def constant(cls, matrix, domain) -> "DeformationField":
        mat = np.array(matrix, dtype=float)
        return cls(tuple(domain), len(mat), lambda s: mat.copy())


def law_with_deformation(c: Curve, conn: ConnectionField, d: DeformationField) -> TransportLaw:
    _dims(c, conn)
    if d.dim != c.dim:
        raise ValueError(f"dimension mismatch: curve {c.dim}, deformation {d.dim}")
    if not np.allclose(d.domain, c.domain):
        raise ValueError("deformation and curve domains differ")
    return parallel_law(c, conn) + TransportLaw.from_callable(d.B, c.domain, c.dim, breakpoints=d.breakpoints)


def covariant_acceleration(c: Curve, conn: ConnectionField, s: float) -> np.ndarray:
    """(nabla_u u)^i = d^2x^i/ds^2 + Gamma^i_{jk} u^j u^k."""
    u = c.u(s)
    return c.a(s) + np.einsum("ijk,j,k->i", conn.symbols(c.x(s)), u, u)


def _connection(m: MetricField, conn: Optional[ConnectionField]) -> ConnectionField:
    return conn if conn is not None else ConnectionField.levi_civita(m)


def _sample(c: Curve) -> np.ndarray:
    return np.linspace(*c.domain, CHECK_SAMPLES)


def _antisym_generator(c: Curve, m: MetricField, conn: ConnectionField, s: float) -> tuple[np.ndarray, float]:
    x = c.x(s)
    u = c.u(s)
    a = covariant_acceleration(c, conn, s)
    g = m.at(x)
    return np.outer(u, g @ a) - np.outer(a, g @ u), float(u @ g @ u)


def fermi_walker_B(c: Curve, m: MetricField, conn: Optional[ConnectionField] = None) -> DeformationField:
    """B^i_j = (u^i a_j - a^i u_j) / g(u, u), a the covariant acceleration."""
    conn = _connection(m, conn)
    _dims(c, conn)
    if c.acceleration is None:
        raise ValueError("Fermi-Walker transport needs the curve acceleration")

    def B(s):
        gen, norm = _antisym_generator(c, m, conn, s)
        if abs(norm) < NULL_TOL:
            raise ValueError(f"null velocity at s={s}")
        return gen / norm

    for s in _sample(c):
        B(s)
    return DeformationField(c.domain, c.dim, B, c.breakpoints)


def fermi_B(c: Curve, m: MetricField, conn: Optional[ConnectionField] = None) -> DeformationField:
    """B^i_j = -(u^i a_j - a^i u_j) for a unit timelike tangent, g(u, u) = -1."""
    conn = _connection(m, conn)
    _dims(c, conn)
    if c.acceleration is None:
        raise ValueError("Fermi transport needs the curve acceleration")

    def B(s):
        gen, norm = _antisym_generator(c, m, conn, s)
        if abs(norm + 1.0) > UNIT_TOL:
            raise ValueError(f"velocity is not unit timelike at s={s}: g(u,u)={norm}")
        return -gen

    for s in _sample(c):
        B(s)
    return DeformationField(c.domain, c.dim, B, c.breakpoints)


def truesdell_B(
    c: Curve, m: MetricField, X: VectorField, conn: Optional[ConnectionField] = None
) -> DeformationField:
    """B = theta * I - Sigma(X), theta = X^i_{;i} the expansion.

    ``X`` extends the tangent field off the curve; only its value and
    derivatives on the curve enter.
    """
    conn = _connection(m, conn)
    _dims(c, conn)
    if X is None:
        raise ValueError("Truesdell transport needs the velocity field derivatives")
    if X.dim != c.dim:
        raise ValueError(f"dimension mismatch: field {X.dim}, curve {c.dim}")
    eye = np.eye(c.dim)

    def B(s):
        x = c.x(s)
        jac = covariant_jacobian(conn, X, x)
        sigma = jac + np.einsum("ikj,k->ij", conn.torsion_at(x), X.at(x))
        return float(np.trace(jac)) * eye - sigma

    return DeformationField(c.domain, c.dim, B, c.breakpoints)


def vorticity(m: MetricField, conn: ConnectionField, X: VectorField, point) -> np.ndarray:
    """omega^i_j with omega_ij = (X_{i;j} - X_{j;i}) / 2, first index raised."""
    g = m.at(point)
    low = g @ covariant_jacobian(conn, X, point)
    return m.inverse(point) @ (0.5 * (low - low.T))


def jaumann_B(c: Curve, m: MetricField, X: VectorField, conn: Optional[ConnectionField] = None) -> DeformationField:
    """B = -omega, the vorticity of the velocity field."""
    conn = _connection(m, conn)
    _dims(c, conn)
    if X is None:
        raise ValueError("Jaumann transport needs the velocity field derivatives")

    def B(s):
        return -vorticity(m, conn, X, c.x(s))

    return DeformationField(c.domain, c.dim, B, c.breakpoints)


LAWS = ("parallel", "fermi-walker", "fermi", "truesdell", "jaumann")


def named_law(
    kind: str,
    c: Curve,
    m: MetricField,
    X: Optional[VectorField] = None,
    conn: Optional[ConnectionField] = None,
) -> TransportLaw:
    """Law of one of the built-in transports along ``c``."""
    conn = _connection(m, conn)
    if kind == "parallel":
        return parallel_law(c, conn)
    builders = {
        "fermi-walker": lambda: fermi_walker_B(c, m, conn),
        "fermi": lambda: fermi_B(c, m, conn),
        "truesdell": lambda: truesdell_B(c, m, X, conn),
        "jaumann": lambda: jaumann_B(c, m, X, conn),
    }
    if kind not in builders:
        raise KeyError(f"unknown transport {kind!r}")
    return law_with_deformation(c, conn, builders[kind]())
