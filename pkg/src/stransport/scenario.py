"""Declarative scenario files: load, validate, run, and export traces.

See ``docs/scenario-format.md`` for the file grammar.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .engine import (
    AxiomReport,
    Probes,
    TransportMatrix,
    default_step,
    transport_matrix,
    transport_tensor,
    verify_axioms,
)
from .geometry import curves as curve_catalog
from .geometry.curves import Curve
from .geometry.holonomy import rotation_angle
from .geometry.metric import ConnectionField, Manifold, MetricField, manifold as lookup_manifold
from .geometry.transports import LAWS, VectorField, named_law
from .law import INTERPOLATIONS, TransportLaw
from .tensor import TensorComponents

SCHEMA_VERSION = 1
CLOSURE_TOL = 1e-9
FIELD_KINDS = ("affine", "radial", "rotation")


class ScenarioError(ValueError):
    """Invalid scenario input; ``issues`` holds (field path, message) pairs."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = list(issues)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.issues))


class ScenarioRunError(RuntimeError):
    """An engine failure while running a valid scenario."""


# -- schema -------------------------------------------------------------------

Number = float
Vector = list[float]
Matrix = list[list[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MetricSpec(_Strict):
    constant: Matrix


class CurveSpec(_Strict):
    kind: str
    domain: Optional[tuple[Number, Number]] = None
    start: Optional[Vector] = None
    direction: Optional[Vector] = None
    theta0: Optional[Number] = None
    turns: Optional[Number] = None
    alpha: Optional[Number] = None
    radius: Optional[Number] = None
    omega: Optional[Number] = None
    orbits: Optional[Number] = None
    s: Optional[Vector] = None
    coords: Optional[Matrix] = None


class LawSpec(_Strict):
    kind: str
    s: Optional[Vector] = None
    gamma: Optional[list[Matrix]] = None
    interpolation: Literal["linear", "cubic"] = "linear"


class FieldSpec(_Strict):
    kind: str = "affine"
    matrix: Optional[Matrix] = None
    offset: Optional[Vector] = None


class TensorSpec(_Strict):
    p: int = Field(ge=0)
    q: int = Field(ge=0)
    values: Union[Number, list[Any]]


class AxiomSpec(_Strict):
    enabled: bool = True
    tol: float = Field(default=1e-6, gt=0)
    probes: int = Field(default=10, ge=1)
    seed: int = 0


class IntegratorSpec(_Strict):
    step: Optional[float] = Field(default=None, gt=0)


class OutputSpec(_Strict):
    trace_resolution: Optional[int] = Field(default=None, ge=2)


class ScenarioSpec(_Strict):
    schema_: Literal[1] = Field(alias="schema")
    dim: int = Field(ge=1, le=8)
    manifold: str
    metric: Optional[MetricSpec] = None
    curve: Optional[CurveSpec] = None
    law: LawSpec
    field: Optional[FieldSpec] = None
    tensors: list[TensorSpec] = Field(default_factory=list)
    transport_pairs: list[tuple[Number, Number]] = Field(default_factory=list)
    axiom_check: Optional[AxiomSpec] = None
    integrator: IntegratorSpec = Field(default_factory=IntegratorSpec)
    outputs: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator("transport_pairs")
    @classmethod
    def _finite_pairs(cls, pairs):
        for s, t in pairs:
            if not (math.isfinite(s) and math.isfinite(t)):
                raise ValueError("transport pairs must be finite")
        return pairs


def _loc(parts) -> str:
    out = ""
    for p in parts:
        if isinstance(p, int):
            out += f"[{p}]"
        else:
            out += ("." if out else "") + str(p)
    return out or "<root>"


# -- resolved scenario --------------------------------------------------------


@dataclass
class Scenario:
    spec: ScenarioSpec
    law: TransportLaw
    tensors: list[TensorComponents]
    pairs: list[tuple[float, float]]
    step: float
    manifold: Optional[Manifold] = None
    metric: Optional[MetricField] = None
    curve: Optional[Curve] = None
    axioms: Optional[AxiomSpec] = None
    trace_resolution: Optional[int] = None
    sha256: str = ""
    source: Optional[str] = None

    @property
    def dim(self) -> int:
        return self.spec.dim

    def is_closed(self) -> bool:
        if self.curve is None:
            return False
        if self.manifold is not None:
            return self.manifold.same_point(self.curve.start, self.curve.end, CLOSURE_TOL)
        return bool(np.max(np.abs(self.curve.start - self.curve.end)) <= CLOSURE_TOL)


def _shape_issue(value, shape, path) -> Optional[tuple[str, str]]:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        return (path, f"expected numeric array of shape {shape}")
    if arr.shape != tuple(shape):
        return (path, f"expected shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        return (path, "non-finite entries")
    return None


def _increasing(values, path) -> Optional[tuple[str, str]]:
    arr = np.asarray(values, dtype=float)
    if len(arr) < 2:
        return (path, "need at least two samples")
    bad = np.nonzero(np.diff(arr) <= 0)[0]
    if len(bad):
        return (f"{path}[{bad[0] + 1}]", "grid not strictly increasing")
    return None


def _build_curve(spec: CurveSpec, n: int, issues: list) -> Optional[Curve]:
    kind = spec.kind
    required = {
        "line": ("start", "direction"),
        "latitude-circle": ("theta0",),
        "great-circle": (),
        "accelerated-worldline": (),
        "circular-worldline": ("radius", "omega"),
        "tabulated": ("s", "coords"),
    }
    if kind not in required:
        issues.append(("curve.kind", f"unknown catalog id {kind!r}"))
        return None
    missing = [k for k in required[kind] if getattr(spec, k) is None]
    for k in missing:
        issues.append((f"curve.{k}", f"required for curve {kind!r}"))
    if missing:
        return None
    allowed = set(required[kind]) | {"kind", "domain"} | {
        "latitude-circle": {"turns"},
        "great-circle": {"turns"},
        "accelerated-worldline": {"alpha"},
        "circular-worldline": {"orbits"},
    }.get(kind, set())
    for k in spec.model_fields_set - allowed:
        issues.append((f"curve.{k}", f"not a parameter of curve {kind!r}"))
    if spec.domain is not None and not spec.domain[0] < spec.domain[1]:
        issues.append(("curve.domain", "domain must satisfy lower < upper"))
    fixed_dims = {"latitude-circle": 2, "great-circle": 2, "circular-worldline": 3}
    if kind in fixed_dims and n != fixed_dims[kind]:
        issues.append(("dim", f"curve {kind!r} needs dim {fixed_dims[kind]}, got {n}"))
    if kind == "accelerated-worldline" and n < 2:
        issues.append(("dim", "accelerated-worldline needs dim >= 2"))
    if kind == "line":
        for key in ("start", "direction"):
            if len(getattr(spec, key)) != n:
                issues.append((f"curve.{key}", f"expected {n} components, got {len(getattr(spec, key))}"))
    if kind == "latitude-circle" and not 0 < spec.theta0 < math.pi:
        issues.append(("curve.theta0", "must lie strictly between 0 and pi"))
    if kind == "accelerated-worldline" and spec.alpha == 0:
        issues.append(("curve.alpha", "must be non-zero"))
    if kind == "circular-worldline" and not 0 < abs(spec.radius * spec.omega) < 1:
        issues.append(("curve.omega", "orbital speed radius*omega must lie in (0, 1)"))
    if kind == "tabulated":
        issue = _increasing(spec.s, "curve.s") or _shape_issue(spec.coords, (len(spec.s), n), "curve.coords")
        if issue:
            issues.append(issue)
    if issues:
        return None

    domain = tuple(spec.domain) if spec.domain is not None else None
    if kind == "line":
        return curve_catalog.line(spec.start, spec.direction, domain or (0.0, 1.0))
    if kind == "latitude-circle":
        return curve_catalog.latitude_circle(spec.theta0, spec.turns or 1.0)
    if kind == "great-circle":
        return curve_catalog.great_circle(spec.turns or 1.0)
    if kind == "accelerated-worldline":
        return curve_catalog.accelerated_worldline(spec.alpha if spec.alpha is not None else 1.0, domain or (0.0, 1.0), n)
    if kind == "circular-worldline":
        return curve_catalog.circular_worldline(spec.radius, spec.omega, spec.orbits or 1.0)
    return Curve.tabulated(spec.s, spec.coords)


def _build_field(spec: Optional[FieldSpec], n: int, issues: list) -> Optional[VectorField]:
    if spec is None:
        return None
    if spec.kind not in FIELD_KINDS:
        issues.append(("field.kind", f"unknown catalog id {spec.kind!r}"))
        return None
    if spec.kind == "radial":
        return VectorField.affine(np.eye(n))
    if spec.kind == "rotation":
        if n != 2:
            issues.append(("field.kind", "rotation field needs dim 2"))
            return None
        return VectorField.affine([[0.0, -1.0], [1.0, 0.0]])
    if spec.matrix is None:
        issues.append(("field.matrix", "required for affine field"))
        return None
    issue = _shape_issue(spec.matrix, (n, n), "field.matrix")
    if spec.offset is not None:
        issue = issue or _shape_issue(spec.offset, (n,), "field.offset")
    if issue:
        issues.append(issue)
        return None
    return VectorField.affine(spec.matrix, spec.offset)


def validate_spec(spec: ScenarioSpec, step: Optional[float] = None, tol: Optional[float] = None) -> Scenario:
    """Resolve catalog entries and cross-field constraints of a schema-valid spec."""
    issues: list[tuple[str, str]] = []
    n = spec.dim

    mani: Optional[Manifold] = None
    metric: Optional[MetricField] = None
    if spec.manifold == "custom":
        pass
    else:
        try:
            mani = lookup_manifold(spec.manifold, n)
        except KeyError:
            issues.append(("manifold", f"unknown catalog id {spec.manifold!r}"))
        except ValueError as exc:
            issues.append(("manifold", str(exc)))
        if mani is not None:
            metric = mani.metric
            if mani.dim != n:
                issues.append(("dim", f"manifold {spec.manifold!r} has dimension {mani.dim}, scenario says {n}"))
    if spec.metric is not None:
        if spec.manifold != "custom":
            issues.append(("metric", "inline metric is only allowed with manifold 'custom'"))
        else:
            issue = _shape_issue(spec.metric.constant, (n, n), "metric.constant")
            if issue:
                issues.append(issue)
            else:
                try:
                    metric = MetricField.constant(spec.metric.constant)
                except ValueError as exc:
                    issues.append(("metric.constant", str(exc)))

    curve = _build_curve(spec.curve, n, issues) if spec.curve is not None else None

    law_kind = spec.law.kind
    vfield = _build_field(spec.field, n, issues)
    law: Optional[TransportLaw] = None
    if law_kind == "custom-gamma":
        for key in ("s", "gamma"):
            if getattr(spec.law, key) is None:
                issues.append((f"law.{key}", "required for law 'custom-gamma'"))
        if spec.law.s is not None and spec.law.gamma is not None:
            issue = _increasing(spec.law.s, "law.s") or _shape_issue(spec.law.gamma, (len(spec.law.s), n, n), "law.gamma")
            if issue:
                issues.append(issue)
            else:
                law = TransportLaw.tabulated(spec.law.s, spec.law.gamma, spec.law.interpolation)
                if curve is not None and not np.allclose(curve.domain, law.domain):
                    issues.append(("law.s", f"sample range {law.domain} differs from curve domain {curve.domain}"))
    elif law_kind in LAWS:
        if spec.law.s is not None or spec.law.gamma is not None:
            issues.append(("law", f"samples are only accepted for 'custom-gamma', not {law_kind!r}"))
        if curve is None and spec.curve is None:
            issues.append(("curve", f"required for law {law_kind!r}"))
        if metric is None and spec.manifold == "custom" and spec.metric is None:
            issues.append(("metric", f"required for manifold 'custom' with law {law_kind!r}"))
        if law_kind in ("truesdell", "jaumann") and spec.field is None:
            issues.append(("field", f"required for law {law_kind!r}"))
        if curve is not None and metric is not None and not issues:
            try:
                law = named_law(law_kind, curve, metric, vfield, ConnectionField.levi_civita(metric))
            except (ValueError, KeyError) as exc:
                issues.append(("law.kind", str(exc)))
    else:
        issues.append(("law.kind", f"unknown catalog id {law_kind!r}"))

    tensors = []
    for i, t in enumerate(spec.tensors):
        expected = n ** (t.p + t.q)
        arr = np.asarray(t.values, dtype=object)
        try:
            flat = np.asarray(t.values, dtype=float).reshape(-1)
        except (TypeError, ValueError):
            issues.append((f"tensors[{i}].values", "values must be numeric"))
            continue
        if flat.size != expected:
            issues.append((f"tensors[{i}].values", f"expected {expected} components for type ({t.p},{t.q}) in dim {n}, got {flat.size}"))
            continue
        if arr.ndim > 1 and arr.shape != (n,) * (t.p + t.q):
            issues.append((f"tensors[{i}].values", f"nested shape {arr.shape} does not match type ({t.p},{t.q}) in dim {n}"))
            continue
        if not np.all(np.isfinite(flat)):
            issues.append((f"tensors[{i}].values", "non-finite entries"))
            continue
        tensors.append(TensorComponents(t.p, t.q, n, flat))

    pairs = [(float(s), float(t)) for s, t in spec.transport_pairs]
    if law is not None:
        for i, (s, t) in enumerate(pairs):
            for j, v in enumerate((s, t)):
                if not law.contains(v):
                    issues.append((f"transport_pairs[{i}][{j}]", f"{v} outside domain {list(law.domain)}"))

    if issues:
        raise ScenarioError(issues)

    assert law is not None
    axioms = spec.axiom_check if spec.axiom_check is not None and spec.axiom_check.enabled else None
    if tol is not None:
        axioms = (axioms or AxiomSpec()).model_copy(update={"tol": tol})
    use_step = step if step is not None else spec.integrator.step
    return Scenario(
        spec=spec,
        law=law,
        tensors=tensors,
        pairs=pairs,
        step=use_step if use_step is not None else default_step(law),
        manifold=mani,
        metric=metric,
        curve=curve,
        axioms=axioms,
        trace_resolution=spec.outputs.trace_resolution,
    )


def parse_scenario(text: str, step: Optional[float] = None, tol: Optional[float] = None, source: Optional[str] = None) -> Scenario:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark is not None else "<file>"
        raise ScenarioError([(where, f"parse error: {getattr(exc, 'problem', None) or exc}")]) from exc
    if not isinstance(raw, dict):
        raise ScenarioError([("<root>", "scenario must be a mapping")])
    try:
        spec = ScenarioSpec.model_validate(raw)
    except ValidationError as exc:
        issues = []
        for err in exc.errors():
            loc = ["schema" if p == "schema_" else p for p in err["loc"]]
            # unions report the branch name as an extra path element
            loc = [p for p in loc if not (isinstance(p, str) and p.startswith(("float", "list[", "constrained")))]
            issues.append((_loc(loc), err["msg"]))
        raise ScenarioError(issues) from exc
    if step is not None and not step > 0:
        raise ScenarioError([("--step", "must be positive")])
    if tol is not None and not tol > 0:
        raise ScenarioError([("--tol", "must be positive")])
    sc = validate_spec(spec, step, tol)
    sc.sha256 = hashlib.sha256(text.encode("utf-8")).hexdigest()
    sc.source = source
    return sc


def load_scenario(path, step: Optional[float] = None, tol: Optional[float] = None) -> Scenario:
    """Read, parse and validate a scenario file; ``step``/``tol`` override the file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError([("<file>", f"cannot read {p}: {exc.strerror or exc}")]) from exc
    return parse_scenario(text, step, tol, str(p))


# -- running ------------------------------------------------------------------


@dataclass
class PairResult:
    s: float
    t: float
    matrix: TransportMatrix
    transported: list[TensorComponents]

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "t": self.t,
            "H": self.matrix.H.tolist(),
            "H_inv": self.matrix.H_inv.tolist(),
            "inverse_defect": self.matrix.inverse_defect(),
            "transported": [{"p": x.p, "q": x.q, "values": x.flat.tolist()} for x in self.transported],
        }


@dataclass
class RunReport:
    pairs: list[PairResult]
    axioms: Optional[AxiomReport]
    holonomy: Optional[dict]
    provenance: dict
    trace: Optional[tuple[list[str], list[list[float]]]] = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.axioms is None or self.axioms.passed

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"provenance": self.provenance, "pairs": [p.to_dict() for p in self.pairs]}
        if self.axioms is not None:
            out["axioms"] = self.axioms.to_dict()
        if self.holonomy is not None:
            out["holonomy"] = self.holonomy
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _holonomy(sc: Scenario) -> dict:
    lo, hi = sc.law.domain
    tm = transport_matrix(sc.law, lo, hi, sc.step)
    block = {
        "s_min": lo,
        "s_max": hi,
        "H": tm.H.tolist(),
        "deviation": float(np.max(np.abs(tm.H - np.eye(sc.dim)))),
    }
    if sc.dim == 2:
        g = sc.metric.at(sc.curve.start) if sc.metric is not None else None
        block["rotation_angle"] = rotation_angle(tm.H, g)
    return block


def _trace(sc: Scenario) -> tuple[list[str], list[list[float]]]:
    n = sc.dim
    header = ["s", "t"] + [f"H_{i}_{j}" for i in range(n) for j in range(n)]
    for k, T in enumerate(sc.tensors):
        if T.rank == 0:
            header.append(f"T{k}")
        else:
            header += [f"T{k}_" + "_".join(map(str, idx)) for idx in np.ndindex(*T.values.shape)]
    rows = []
    for s, t in sc.pairs:
        for tau in np.linspace(s, t, sc.trace_resolution):
            tm = transport_matrix(sc.law, s, float(tau), sc.step)
            row = [s, float(tau)] + tm.H.reshape(-1).tolist()
            for T in sc.tensors:
                row += transport_tensor(tm, T).flat.tolist()
            rows.append(row)
    return header, rows


def run_scenario(sc: Scenario, *, axioms: bool = True, pairs: bool = True) -> RunReport:
    """Compute every requested pair, the axiom report and, for closed curves, the holonomy."""
    results = []
    if pairs:
        for i, (s, t) in enumerate(sc.pairs):
            try:
                tm = transport_matrix(sc.law, s, t, sc.step)
            except (ArithmeticError, ValueError) as exc:
                raise ScenarioRunError(f"transport_pairs[{i}] (s={s}, t={t}): {exc}") from exc
            results.append(PairResult(s, t, tm, [transport_tensor(tm, T) for T in sc.tensors]))
    report_axioms = None
    if axioms and sc.axioms is not None:
        probes = Probes.random(sc.law, sc.axioms.probes, sc.axioms.seed)
        report_axioms = verify_axioms(sc.law, probes, sc.axioms.tol, sc.step)
    holonomy = None
    if pairs and sc.is_closed():
        try:
            holonomy = _holonomy(sc)
        except (ArithmeticError, ValueError) as exc:
            raise ScenarioRunError(f"holonomy: {exc}") from exc
    trace = None
    if pairs and sc.trace_resolution is not None:
        try:
            trace = _trace(sc)
        except (ArithmeticError, ValueError) as exc:
            raise ScenarioRunError(f"trace: {exc}") from exc
    provenance = {"schema": SCHEMA_VERSION, "scenario_sha256": sc.sha256, "step": sc.step}
    return RunReport(results, report_axioms, holonomy, provenance, trace)


def format_trace(report: RunReport) -> str:
    if report.trace is None:
        raise ValueError("report has no trace; set outputs.trace_resolution >= 2")
    header, rows = report.trace
    lines = [",".join(header)]
    lines += [",".join(format(float(v), ".17g") for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def export_trace(r: RunReport, path) -> Path:
    """Write the trace as comma-separated text with LF line endings."""
    text = format_trace(r)
    p = Path(path)
    try:
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write trace to {p}: {exc.strerror or exc}") from exc
    return p
