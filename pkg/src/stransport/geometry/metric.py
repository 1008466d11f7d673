"""Metrics, linear connections and the built-in manifold catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

METRIC_FD_STEP = 1e-5


def _fd_metric_derivatives(g: Callable, x: np.ndarray, h: float = METRIC_FD_STEP) -> np.ndarray:
    n = len(x)
    out = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        out[k] = (np.asarray(g(x + e)) - np.asarray(g(x - e))) / (2 * h)
    return out


@dataclass(frozen=True)
class MetricField:
    """Metric components g_ij on a chart.

    ``dg(x)[k, i, j]`` is the partial derivative of g_ij along coordinate k;
    when not supplied it is taken by central differences with step 1e-5.
    """

    dim: int
    g: Callable[[np.ndarray], np.ndarray]
    g_inv: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dg: Optional[Callable[[np.ndarray], np.ndarray]] = None
    signature: Optional[tuple[int, ...]] = None
    sample_point: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.signature is None:
            x = np.zeros(self.dim) if self.sample_point is None else np.asarray(self.sample_point, float)
            eig = np.linalg.eigvalsh(self.at(x))
            object.__setattr__(self, "signature", tuple(int(v) for v in np.sign(eig)))

    def at(self, x) -> np.ndarray:
        mat = np.asarray(self.g(np.asarray(x, dtype=float)), dtype=float)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"metric has shape {mat.shape}, expected {(self.dim, self.dim)}")
        return mat

    def inverse(self, x) -> np.ndarray:
        if self.g_inv is not None:
            return np.asarray(self.g_inv(np.asarray(x, dtype=float)), dtype=float)
        mat = self.at(x)
        if abs(np.linalg.det(mat)) < 1e-14 * max(1.0, np.max(np.abs(mat))) ** self.dim:
            raise ValueError(f"singular metric at {np.asarray(x).tolist()}")
        return np.linalg.inv(mat)

    def derivatives(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dg is not None:
            return np.asarray(self.dg(x), dtype=float)
        return _fd_metric_derivatives(self.g, x)

    def inner(self, x, v, w) -> float:
        return float(np.asarray(v) @ self.at(x) @ np.asarray(w))

    def lower(self, x, v) -> np.ndarray:
        return self.at(x) @ np.asarray(v)

    def check(self, points, tol: float = 1e-9) -> None:
        """Raise if symmetry, invertibility or signature fail at any of ``points``."""
        for x in points:
            g = self.at(x)
            if np.max(np.abs(g - g.T)) > tol * max(1.0, np.max(np.abs(g))):
                raise ValueError(f"metric not symmetric at {list(x)}")
            if np.max(np.abs(g @ self.inverse(x) - np.eye(self.dim))) > 1e3 * tol:
                raise ValueError(f"metric inverse inconsistent at {list(x)}")
            sig = tuple(int(v) for v in np.sign(np.linalg.eigvalsh(g)))
            if sig != self.signature:
                raise ValueError(f"metric signature changes at {list(x)}")

    @classmethod
    def constant(cls, matrix) -> "MetricField":
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("metric must be a square matrix")
        if np.max(np.abs(mat - mat.T)) > 1e-12 * max(1.0, np.max(np.abs(mat))):
            raise ValueError("metric must be symmetric")
        if abs(np.linalg.det(mat)) < 1e-14:
            raise ValueError("metric must be non-degenerate")
        n = len(mat)
        inv = np.linalg.inv(mat)
        return cls(n, lambda x: mat.copy(), lambda x: inv.copy(), lambda x: np.zeros((n, n, n)))


def christoffels_from_metric(m: MetricField, point) -> np.ndarray:
    """Levi-Civita symbols ``C[i, j, k] = Gamma^i_{jk}``.

    Gamma^i_{jk} = 1/2 g^{il} (d_j g_lk + d_k g_lj - d_l g_jk); symmetric in (j, k).
    """
    x = np.asarray(point, dtype=float)
    ginv = m.inverse(x)
    dg = m.derivatives(x)  # dg[k, i, j] = d_k g_ij
    # lowered[l, j, k] = d_j g_lk + d_k g_lj - d_l g_jk
    lowered = np.einsum("jlk->ljk", dg) + np.einsum("klj->ljk", dg) - dg
    return 0.5 * np.einsum("il,ljk->ijk", ginv, lowered)


@dataclass(frozen=True)
class ConnectionField:
    """Linear connection with ``christoffels(x)[i, j, k] = Gamma^i_{jk}``.

    Covariant derivatives follow ``(nabla_k v)^i = d_k v^i + Gamma^i_{jk} v^j``,
    the derivative index last.  Torsion components ``T[i, j, k]`` with
    ``T(X, Y)^i = T^i_{jk} X^j Y^k`` default to the antisymmetric part of the
    Christoffel symbols, ``Gamma^i_{kj} - Gamma^i_{jk}``.
    """

    dim: int
    christoffels: Callable[[np.ndarray], np.ndarray]
    torsion: Optional[Callable[[np.ndarray], np.ndarray]] = None
    metric: Optional[MetricField] = field(default=None, compare=False)

    def symbols(self, x) -> np.ndarray:
        c = np.asarray(self.christoffels(np.asarray(x, dtype=float)), dtype=float)
        if c.shape != (self.dim,) * 3:
            raise ValueError(f"Christoffel array has shape {c.shape}")
        return c

    def torsion_at(self, x) -> np.ndarray:
        if self.torsion is not None:
            return np.asarray(self.torsion(np.asarray(x, dtype=float)), dtype=float)
        c = self.symbols(x)
        return np.swapaxes(c, 1, 2) - c

    @classmethod
    def levi_civita(cls, m: MetricField) -> "ConnectionField":
        return cls(m.dim, lambda x: christoffels_from_metric(m, x), metric=m)

    @classmethod
    def flat(cls, dim: int) -> "ConnectionField":
        return cls(dim, lambda x: np.zeros((dim, dim, dim)))

    def metric_compatibility(self, m: MetricField, x) -> float:
        """Max |nabla_k g_ij| at ``x`` (zero for the Levi-Civita connection)."""
        c = self.symbols(x)
        g = m.at(x)
        dg = m.derivatives(x)
        # nabla_k g_ij = d_k g_ij - Gamma^l_{ik} g_lj - Gamma^l_{jk} g_il
        cov = dg - np.einsum("lik,lj->kij", c, g) - np.einsum("ljk,il->kij", c, g)
        return float(np.max(np.abs(cov)))


# -- catalog ----------------------------------------------------------------


@dataclass(frozen=True)
class Manifold:
    """A catalog chart: metric plus the coordinate periods used to detect closed curves."""

    name: str
    metric: MetricField
    periods: tuple[Optional[float], ...]
    coordinates: tuple[str, ...]

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def connection(self) -> ConnectionField:
        return ConnectionField.levi_civita(self.metric)

    def same_point(self, x, y, tol: float = 1e-9) -> bool:
        for a, b, period in zip(x, y, self.periods):
            d = a - b
            if period:
                d = math.remainder(d, period)
            if abs(d) > tol:
                return False
        return True


def euclidean(n: int) -> Manifold:
    eye = np.eye(n)
    metric = MetricField(n, lambda x: eye.copy(), lambda x: eye.copy(), lambda x: np.zeros((n, n, n)), (1,) * n)
    return Manifold(f"euclidean-{n}", metric, (None,) * n, tuple(f"x{i + 1}" for i in range(n)))


def minkowski(n: int) -> Manifold:
    if n < 2:
        raise ValueError("minkowski needs at least two dimensions")
    eta = np.diag([-1.0] + [1.0] * (n - 1))
    metric = MetricField(n, lambda x: eta.copy(), lambda x: eta.copy(), lambda x: np.zeros((n, n, n)), tuple(int(v) for v in np.diag(eta)))
    return Manifold(f"minkowski-{n}", metric, (None,) * n, ("t",) + tuple(f"x{i}" for i in range(1, n)))


def _sphere_g(x):
    return np.diag([1.0, math.sin(x[0]) ** 2])


def _sphere_ginv(x):
    return np.diag([1.0, 1.0 / math.sin(x[0]) ** 2])


def _sphere_dg(x):
    out = np.zeros((2, 2, 2))
    out[0, 1, 1] = 2.0 * math.sin(x[0]) * math.cos(x[0])
    return out


def sphere2() -> Manifold:
    """Unit 2-sphere in (theta, phi) with g = diag(1, sin^2 theta)."""
    metric = MetricField(2, _sphere_g, _sphere_ginv, _sphere_dg, (1, 1))
    return Manifold("sphere-2", metric, (None, 2 * math.pi), ("theta", "phi"))


def polar_plane() -> Manifold:
    """Euclidean plane in polar coordinates (r, phi), g = diag(1, r^2)."""

    def dg(x):
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = 2.0 * x[0]
        return out

    metric = MetricField(
        2, lambda x: np.diag([1.0, x[0] ** 2]), lambda x: np.diag([1.0, 1.0 / x[0] ** 2]), dg, (1, 1)
    )
    return Manifold("polar-plane", metric, (None, 2 * math.pi), ("r", "phi"))


MANIFOLDS = ("euclidean-n", "sphere-2", "minkowski-n", "polar-plane")


def manifold(name: str, dim: Optional[int] = None) -> Manifold:
    """Look up a catalog manifold; ``euclidean-n`` / ``minkowski-n`` take ``dim`` (or a numeric suffix)."""
    if name == "sphere-2":
        return sphere2()
    if name == "polar-plane":
        return polar_plane()
    for prefix, build in (("euclidean-", euclidean), ("minkowski-", minkowski)):
        if name.startswith(prefix):
            suffix = name[len(prefix) :]
            if suffix == "n":
                if dim is None:
                    raise ValueError(f"{name} needs an explicit dimension")
                return build(dim)
            if suffix.isdigit():
                return build(int(suffix))
    raise KeyError(f"unknown catalog id {name!r}")
