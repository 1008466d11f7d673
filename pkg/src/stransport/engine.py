"""Transport matrices from transport laws, their action on tensors, and the induced derivation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .law import TransportLaw
from .tensor import TensorComponents, apply_slot_matrices, contract, tensor_product

DEFAULT_STEPS_PER_DOMAIN = 2000
DEFAULT_FD_FRACTION = 1e-6


class NonFiniteSolution(ArithmeticError):
    """The fundamental-matrix integration produced inf or nan entries."""


MatrixFunction = Union[TransportLaw, Callable[[float], np.ndarray]]


def _eval_many(Z: MatrixFunction, nodes: np.ndarray) -> np.ndarray:
    if hasattr(Z, "matrices"):
        return Z.matrices(nodes)
    return np.array([np.asarray(Z(float(x)), dtype=float) for x in nodes])


def _step_nodes(a: float, b: float, step: float) -> np.ndarray:
    """Nodes a = x_0, x_0 + h, ... with a shortened final step landing on b."""
    length = abs(b - a)
    direction = 1.0 if b >= a else -1.0
    nfull = int(math.floor(length / step + 1e-9))
    nodes = a + direction * step * np.arange(nfull + 1)
    if length - nfull * step > 1e-12 * step:
        nodes = np.append(nodes, b)
    else:
        nodes[-1] = b
    return nodes


def integration_nodes(s0: float, s: float, step: float, breakpoints: Sequence[float] = ()) -> np.ndarray:
    """All RK4 nodes from ``s0`` to ``s``; pieces between breakpoints are stepped separately."""
    lo, hi = min(s0, s), max(s0, s)
    cuts = [b for b in breakpoints if lo < b < hi]
    if s < s0:
        cuts = cuts[::-1]
    ends = [s0, *cuts, s]
    pieces = [_step_nodes(a, b, step) for a, b in zip(ends[:-1], ends[1:])]
    return np.concatenate([pieces[0]] + [p[1:] for p in pieces[1:]])


def node_values(Z: MatrixFunction, nodes: np.ndarray) -> np.ndarray:
    """Z at the left ends, midpoints and right ends of every step, stacked in that order."""
    left, right = nodes[:-1], nodes[1:]
    return _eval_many(Z, np.concatenate([left, left + 0.5 * (right - left), right]))


def _reverse_values(mats: np.ndarray) -> np.ndarray:
    """Stacked node values for the same grid walked backwards."""
    m = len(mats) // 3
    z0, zm, z1 = mats[:m], mats[m : 2 * m], mats[2 * m :]
    return np.concatenate([z1[::-1], zm[::-1], z0[::-1]])


def rk4_step_matrices(Z: MatrixFunction, nodes: np.ndarray, mats: Optional[np.ndarray] = None) -> np.ndarray:
    """Classical RK4 propagators ``M_k`` with ``Y_{k+1} = M_k Y_k`` for ``dY/ds = Z Y``.

    ``mats`` may hold precomputed :func:`node_values` for ``nodes``.
    """
    left, right = nodes[:-1], nodes[1:]
    h = (right - left)[:, None, None]
    if mats is None:
        mats = node_values(Z, nodes)
    m = len(left)
    z0, zm, z1 = mats[:m], mats[m : 2 * m], mats[2 * m :]
    eye = np.eye(mats.shape[-1])
    k1 = z0
    k2 = zm @ (eye + 0.5 * h * k1)
    k3 = zm @ (eye + 0.5 * h * k2)
    k4 = z1 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _propagate(steps: np.ndarray, s0: float, s: float) -> np.ndarray:
    with np.errstate(all="ignore"):
        if not np.all(np.isfinite(steps)):
            raise NonFiniteSolution(f"non-finite coefficients or step propagators between s={s0} and s={s}")
        y = np.eye(steps.shape[-1])
        for mk in steps:
            y = mk @ y
    if not np.all(np.isfinite(y)):
        raise NonFiniteSolution(f"fundamental matrix blew up between s={s0} and s={s}")
    return y


def solve_fundamental(
    Z: MatrixFunction, s0: float, s: float, step: float, *, breakpoints: Sequence[float] = ()
) -> np.ndarray:
    """Fundamental matrix Y(s, s0; Z) of dY/ds = Z(s) Y with Y(s0) = I.

    Fixed-step classical Runge-Kutta; the last step of each smooth piece is
    shortened so the integration lands exactly on ``s`` (and on every
    breakpoint in between).

    Parameters
    ----------
    Z : callable or TransportLaw
        Coefficient matrix function, evaluable on [min(s0, s), max(s0, s)].
    s0, s : float
        Initial and final parameter; ``s < s0`` integrates backwards.
    step : float
        Positive step size.
    breakpoints : sequence of float
        Parameters where ``Z`` is only piecewise smooth.

    Raises
    ------
    NonFiniteSolution
        If any intermediate matrix has non-finite entries.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    s0, s = float(s0), float(s)
    if s == s0:
        probe = _eval_many(Z, np.array([s0]))
        return np.eye(probe.shape[-1])
    nodes = integration_nodes(s0, s, step, breakpoints)
    with np.errstate(all="ignore"):
        steps = rk4_step_matrices(Z, nodes)
    return _propagate(steps, s0, s)


@dataclass(frozen=True, eq=False)
class TransportMatrix:
    """H(t, s): components at gamma(s) -> components at gamma(t), plus its inverse."""

    s: float
    t: float
    H: np.ndarray
    H_inv: np.ndarray

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def inverse_defect(self) -> float:
        return float(np.max(np.abs(self.H @ self.H_inv - np.eye(self.dim))))

    def reversed(self) -> "TransportMatrix":
        return TransportMatrix(self.t, self.s, self.H_inv, self.H)


def default_step(law: TransportLaw) -> float:
    return law.length / DEFAULT_STEPS_PER_DOMAIN if law.length > 0 else 1.0


def transport_matrix(
    law: TransportLaw, s: float, t: float, step: Optional[float] = None, *, reference: Optional[float] = None
) -> TransportMatrix:
    """Matrix of the transport from ``s`` to ``t`` generated by ``law``.

    H solves dH/dt = -Gamma(t) H with H(s, s) = I; its inverse is integrated
    back from ``t`` to ``s`` over the same nodes rather than inverted.  Passing ``reference``
    instead builds ``Y(t, s0) Y(s, s0)^-1`` about that fixed point (used to
    check that the result does not depend on it).
    """
    for name, v in (("s", s), ("t", t)):
        if not law.contains(v):
            raise ValueError(f"{name}={v} outside law domain {law.domain}")
    s, t = float(s), float(t)
    n = law.dim
    if law.length == 0 or s == t:
        return TransportMatrix(s, t, np.eye(n), np.eye(n))
    step = default_step(law) if step is None else step
    minus = law.negated()
    if not step > 0:
        raise ValueError("step must be positive")
    if reference is None:
        # one grid serves both directions; the backward pass reuses its coefficient values
        nodes = integration_nodes(s, t, step, law.breakpoints)
        with np.errstate(all="ignore"):
            mats = node_values(minus, nodes)
            fwd = rk4_step_matrices(minus, nodes, mats)
            back = rk4_step_matrices(minus, nodes[::-1], _reverse_values(mats))
        H = _propagate(fwd, s, t)
        H_inv = _propagate(back, t, s)
    else:
        if not law.contains(reference):
            raise ValueError(f"reference={reference} outside law domain {law.domain}")
        yt = solve_fundamental(minus, reference, t, step, breakpoints=law.breakpoints)
        ys = solve_fundamental(minus, reference, s, step, breakpoints=law.breakpoints)
        H = yt @ np.linalg.inv(ys)
        H_inv = ys @ np.linalg.inv(yt)
    return TransportMatrix(s, t, H, H_inv)


def transport_tensor(tm: TransportMatrix, T: TensorComponents) -> TensorComponents:
    if T.dim != tm.dim:
        raise ValueError(f"dimension mismatch: tensor dim {T.dim}, transport dim {tm.dim}")
    if T.rank == 0:
        return T
    return apply_slot_matrices(T, tm.H, tm.H_inv)


def generator_action(G: np.ndarray, T: TensorComponents) -> TensorComponents:
    """Algebraic part of the derivation: +G per upper slot, -G^T-placement per lower slot."""
    vals = np.zeros_like(T.values)
    for axis in range(T.rank):
        mat = G if axis < T.p else -G.T
        vals = vals + np.moveaxis(np.tensordot(mat, T.values, axes=([1], [axis])), 0, axis)
    return T.with_values(vals)


@dataclass(frozen=True)
class TensorFieldAlongPath:
    """A type-(p, q) tensor field along a path, given by its components.

    ``evaluator`` returns components (array or TensorComponents) at s;
    ``derivative`` optionally returns their componentwise d/ds.  Without
    it, central differences are used, one-sided at the domain ends and next
    to ``breakpoints`` (parameters where the field is only C^1).
    """

    domain: tuple[float, float]
    p: int
    q: int
    dim: int
    evaluator: Callable[[float], object]
    derivative: Optional[Callable[[float], object]] = None
    breakpoints: tuple[float, ...] = ()

    def _wrap(self, raw) -> TensorComponents:
        if isinstance(raw, TensorComponents):
            if (raw.p, raw.q, raw.dim) != (self.p, self.q, self.dim):
                raise ValueError("field changed type along the path")
            return raw
        return TensorComponents(self.p, self.q, self.dim, raw)

    def __call__(self, s: float) -> TensorComponents:
        return self._wrap(self.evaluator(s))

    def d_ds(self, s: float, fd_step: Optional[float] = None) -> TensorComponents:
        if self.derivative is not None:
            return self._wrap(self.derivative(s))
        lo, hi = self.domain
        h = fd_step if fd_step is not None else DEFAULT_FD_FRACTION * (hi - lo)
        f = lambda x: self(x).values
        # never difference across a kink: fall back to a one-sided stencil
        kink_left = any(s - 2 * h < b <= s for b in self.breakpoints)
        kink_right = any(s <= b < s + 2 * h for b in self.breakpoints)
        if s - h < lo or (kink_left and not s + 2 * h > hi):
            vals = (-3 * f(s) + 4 * f(s + h) - f(s + 2 * h)) / (2 * h)
        elif s + h > hi or kink_right:
            vals = (3 * f(s) - 4 * f(s - h) + f(s - 2 * h)) / (2 * h)
        else:
            vals = (f(s + h) - f(s - h)) / (2 * h)
        return self._wrap(vals)

    @classmethod
    def constant(cls, T: TensorComponents, domain) -> "TensorFieldAlongPath":
        zero = np.zeros_like(T.values)
        return cls(tuple(domain), T.p, T.q, T.dim, lambda s: T, lambda s: zero)


def derivation_at(
    law: TransportLaw, field: TensorFieldAlongPath, s: float, fd_step: Optional[float] = None
) -> TensorComponents:
    """Components of the derivation generated by ``law`` applied to ``field`` at ``s``.

    d/ds of each component, plus Gamma acting on every upper index, minus
    Gamma acting on every lower index.
    """
    if field.dim != law.dim:
        raise ValueError(f"dimension mismatch: field dim {field.dim}, law dim {law.dim}")
    if not law.contains(s):
        raise ValueError(f"s={s} outside law domain {law.domain}")
    if law.length == 0 and field.derivative is None:
        raise ValueError("cannot differentiate on a single-point domain")
    dT = field.d_ds(s, fd_step)
    if field.p + field.q == 0:
        return dT
    return dT + generator_action(law(s), field(s))


def derivation_of_transported(
    law: TransportLaw,
    T0: TensorComponents,
    s: float,
    t: float,
    step: Optional[float] = None,
    fd_step: Optional[float] = None,
    *,
    base: Optional[TransportMatrix] = None,
) -> TensorComponents:
    """Derivation at ``t`` of the field tau -> S_{s->tau} T0.

    Identically zero for an exact transport; the returned components are the
    numerical residual.  ``base`` may carry an already computed H(t, s) at
    the same step.
    """
    step = default_step(law) if step is None else step
    if base is None or (base.s, base.t) != (float(s), float(t)):
        base = transport_matrix(law, s, t, step)
    minus = law.negated()

    def local(tau: float) -> TransportMatrix:
        if tau == t:
            return base
        fwd = solve_fundamental(minus, t, tau, step, breakpoints=law.breakpoints)
        back = solve_fundamental(minus, tau, t, step, breakpoints=law.breakpoints)
        return TransportMatrix(s, tau, fwd @ base.H, base.H_inv @ back)

    fld = TensorFieldAlongPath(law.domain, T0.p, T0.q, T0.dim, lambda tau: transport_tensor(local(tau), T0), breakpoints=law.breakpoints)
    return derivation_at(law, fld, t, fd_step)


def basis_fields(law: TransportLaw) -> list[TensorFieldAlongPath]:
    """Vector fields E_j with constant components e_j over the law's domain."""
    eye = np.eye(law.dim)
    return [TensorFieldAlongPath.constant(TensorComponents(1, 0, law.dim, eye[j]), law.domain) for j in range(law.dim)]


def law_from_derivation(derivation: Callable[[TensorFieldAlongPath, float], TensorComponents], domain, dim: int, breakpoints=()) -> TransportLaw:
    """Recover the coefficients of a derivation from its action on basis fields.

    Column j of Gamma(s) is the derivation of E_j at s.
    """
    probe = TransportLaw.zero(dim, domain)
    fields = basis_fields(probe)

    def coeffs(s):
        return np.column_stack([derivation(E, s).values for E in fields])

    return TransportLaw.from_callable(coeffs, domain, dim, breakpoints=breakpoints)


# -- axiom verification ----------------------------------------------------

AXIOMS = (
    "linearity",
    "product",
    "contraction",
    "composition",
    "identity",
    "scalar",
    "inverse",
    "derivation",
)

DEFAULT_TYPES = ((1, 0), (0, 1), (1, 1), (2, 1), (1, 2))


@dataclass(frozen=True)
class Probes:
    """Parameter triples (r, s, t) and random tensor types for axiom checks."""

    triples: tuple[tuple[float, float, float], ...]
    types: tuple[tuple[int, int], ...] = DEFAULT_TYPES
    seed: int = 0

    @classmethod
    def random(cls, law: TransportLaw, count: int = 10, seed: int = 0, types=DEFAULT_TYPES) -> "Probes":
        rng = np.random.default_rng(seed)
        lo, hi = law.domain
        triples = tuple(tuple(float(x) for x in rng.uniform(lo, hi, 3)) for _ in range(count))
        return cls(triples, tuple(types), seed)


@dataclass
class AxiomReport:
    residuals: dict[str, float]
    tol: float
    step: float
    probes: int = 0

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v <= self.tol]

    def to_dict(self) -> dict:
        return {
            "residuals": dict(self.residuals),
            "tol": self.tol,
            "step": self.step,
            "probes": self.probes,
            "passed": self.passed,
        }


def _maxdiff(a, b) -> float:
    a = a.values if isinstance(a, TensorComponents) else np.asarray(a)
    b = b.values if isinstance(b, TensorComponents) else np.asarray(b)
    return float(np.max(np.abs(a - b))) if np.size(a) else 0.0


def verify_axioms(
    law: TransportLaw,
    probes: Optional[Probes] = None,
    tol: float = 1e-6,
    step: Optional[float] = None,
) -> AxiomReport:
    """Check the transport axioms numerically; failures are reported, never raised.

    Every residual is a max-norm over all probes.  ``composition`` compares
    H(r, t) H(t, s) with a direct integration of H(r, s) at the same step.
    """
    probes = probes or Probes.random(law)
    step = default_step(law) if step is None else step
    rng = np.random.default_rng(probes.seed)
    n = law.dim
    eye = np.eye(n)
    res = {k: 0.0 for k in AXIOMS}

    def bump(key, value):
        value = float(value)
        if not np.isfinite(value):
            value = math.inf
        res[key] = max(res[key], value)

    for r, s, t in probes.triples:
        try:
            h_ts = transport_matrix(law, s, t, step)
            h_rt = transport_matrix(law, t, r, step)
            h_rs = transport_matrix(law, s, r, step)
            h_ss = transport_matrix(law, s, s, step)
        except (ArithmeticError, ValueError):
            for k in AXIOMS:
                bump(k, math.inf)
            continue
        bump("composition", _maxdiff(h_rt.H @ h_ts.H, h_rs.H))
        bump("identity", _maxdiff(h_ss.H, eye))
        bump("inverse", max(h_ts.inverse_defect(), _maxdiff(h_ts.H_inv @ h_ts.H, eye)))

        lam = float(rng.uniform(-5, 5))
        bump("scalar", abs(transport_tensor(h_ts, TensorComponents.scalar(lam, n)).values - lam))

        for p, q in probes.types:
            a = TensorComponents.random(p, q, n, rng)
            b = TensorComponents.random(p, q, n, rng)
            lam, mu = rng.uniform(-2, 2, 2)
            lhs = transport_tensor(h_ts, lam * a + mu * b)
            rhs = lam * transport_tensor(h_ts, a) + mu * transport_tensor(h_ts, b)
            bump("linearity", _maxdiff(lhs, rhs))

            c = TensorComponents.random(1, 0 if p + q > 2 else 1, n, rng)
            bump(
                "product",
                _maxdiff(transport_tensor(h_ts, tensor_product(a, c)), tensor_product(transport_tensor(h_ts, a), transport_tensor(h_ts, c))),
            )
            if p >= 1 and q >= 1:
                for i in range(p):
                    for j in range(q):
                        bump(
                            "contraction",
                            _maxdiff(transport_tensor(h_ts, contract(a, i, j)), contract(transport_tensor(h_ts, a), i, j)),
                        )
            try:
                bump("derivation", derivation_of_transported(law, a, s, t, step, base=h_ts).max_abs())
            except (ArithmeticError, ValueError):
                bump("derivation", math.inf)

    return AxiomReport(res, tol, step, len(probes.triples))
