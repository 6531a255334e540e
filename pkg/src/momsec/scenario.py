"""Declarative scenario files, the check runner and report emission.

A scenario is a TOML file declaring a chart, a Poisson matrix, optionally an
algebroid, a connection, a momentum section and auxiliary data, a sampling
spec, tolerances, the list of checks to run and the expected outcome of each
check.  ``run_checks`` executes the checks in declaration order; a failing
check is a result, not an abort.  Only evaluation errors (a domain error at
a sample point, a schema violation discovered late) abort a check, and they
are recorded per check.

Reports are deterministic for a fixed scenario and seed: two runs produce
byte-identical JSON apart from the wall-time field.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Optional

import numpy as np

from . import toml_io
from .algebroid import (
    LieAlgebroid,
    SectionA,
    SectionAStar,
    anchor_morphism_residual,
    jacobiator_residual,
    make_action_algebroid,
    make_cotangent_algebroid,
    make_lie_algebra_bundle,
    make_tangent_algebroid,
)
from .connection import Connection
from .dualspace import bivector_map_residual, theorem41_check
from .errors import InsufficientJetOrderError, MomsecError, SchemaError
from .fields import BivectorField, Chart, OneForm, PoissonChart, ScalarField, VectorField
from .hamiltonian import (
    CheckReport,
    HamiltonianInstance,
    check_H1,
    check_H2,
    check_H3,
    classify_connection,
    coisotropy_witness,
    invariance_residual,
    liouville_residual,
    make_report,
    momentum_builder_report,
    pointwise_checks,
    symplectic_suite,
)

TOOL_VERSION = "0.1.0"
DEFAULT_JET_ORDER = 2
DEFAULT_TOLERANCE = 1e-9
DEFAULT_SEED = 42
DEFAULT_COUNT = 25

KNOWN_CHECKS = (
    "jacobi",
    "algebroid",
    "H1",
    "H2",
    "H3",
    "liouville",
    "pointwise",
    "momentum_builder",
    "invariance",
    "coisotropy",
    "theorem41",
    "bivector_map",
    "symplectic_suite",
    "classify_connection",
)


@dataclass
class Scenario:
    """A parsed and validated scenario with all defaults resolved."""

    name: str
    data: dict
    source_text: str
    chart: Chart
    poisson_matrix: list
    seed: int
    jet_order: int
    box: tuple
    count: int
    explicit_points: list
    checks: list
    expect: dict
    tolerances: dict

    def digest(self) -> str:
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()[:16]

    def tolerance_for(self, check: str) -> float:
        return float(self.tolerances.get(check, self.tolerances.get("default", DEFAULT_TOLERANCE)))


def _require(data: dict, key: str, context: str = ""):
    if key not in data:
        raise SchemaError("missing required section or key", field=f"{context}{key}")
    return data[key]


def _as_str_list(value, field: str) -> list:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise SchemaError("expected a list of strings", field=field)
    return value


def loads_scenario(text: str, name: Optional[str] = None) -> Scenario:
    """Parse scenario TOML text; expressions are parsed eagerly."""
    data = toml_io.loads(text)
    sname = data.get("name", name or "unnamed")
    chart_tbl = _require(data, "chart")
    coords = _as_str_list(_require(chart_tbl, "coordinates", "chart."), "chart.coordinates")
    chart = Chart(tuple(coords))
    n = chart.dim

    poisson_tbl = _require(data, "poisson")
    matrix = _require(poisson_tbl, "matrix", "poisson.")
    if not isinstance(matrix, list) or len(matrix) != n or any(
        not isinstance(r, list) or len(r) != n for r in matrix
    ):
        raise SchemaError(f"matrix must be {n}x{n}", field="poisson.matrix")

    sampling = data.get("sampling", {})
    seed = int(sampling.get("seed", DEFAULT_SEED))
    count = int(sampling.get("count", DEFAULT_COUNT))
    box_raw = sampling.get("box")
    if box_raw is None:
        box = tuple((-1.0, 1.0) for _ in range(n))
    else:
        if len(box_raw) != n:
            raise SchemaError("box must have one [lo, hi] pair per coordinate", field="sampling.box")
        box = tuple((float(b[0]), float(b[1])) for b in box_raw)
    explicit = [tuple(float(x) for x in p) for p in sampling.get("points", [])]
    for p in explicit:
        if len(p) != n:
            raise SchemaError("explicit point dimension mismatch", field="sampling.points")

    checks_tbl = data.get("checks", {})
    checks = checks_tbl.get("run", [])
    if not isinstance(checks, list):
        raise SchemaError("expected a list of check names", field="checks.run")
    for c in checks:
        if c not in KNOWN_CHECKS:
            raise SchemaError(f"unknown check {c!r}; known: {', '.join(KNOWN_CHECKS)}", field="checks.run")

    expect = dict(data.get("expect", {}))
    for key, val in expect.items():
        if val not in ("pass", "fail"):
            raise SchemaError("expected value must be 'pass' or 'fail'", field=f"expect.{key}")

    tolerances = dict(data.get("tolerances", {}))

    scenario = Scenario(
        name=sname,
        data=data,
        source_text=text,
        chart=chart,
        poisson_matrix=matrix,
        seed=seed,
        jet_order=int(data.get("jet_order", DEFAULT_JET_ORDER)),
        box=box,
        count=count,
        explicit_points=explicit,
        checks=list(checks),
        expect=expect,
        tolerances=tolerances,
    )
    # parse every expression eagerly so syntax errors carry scenario context
    _Runtime(scenario).parse_all()
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return loads_scenario(text)


class _Runtime:
    """Lazily builds and caches the geometric objects a scenario declares."""

    def __init__(self, scenario: Scenario):
        self.s = scenario
        self._cache: dict = {}

    def parse_all(self):
        s = self.s
        for row in s.poisson_matrix:
            for src in row:
                ScalarField.parse(str(src), s.chart)
        for tbl, key in (("momentum", "components"), ("eta", "components"),
                         ("eta_bar", "components"), ("vector_n", "components")):
            if tbl in s.data:
                comps = _require(s.data[tbl], key, f"{tbl}.")
                if len(comps) not in (s.chart.dim, self._declared_rank()):
                    pass  # length checked on use, rank may not be derivable yet
                for src in comps:
                    ScalarField.parse(str(src), s.chart)
        conn = s.data.get("connection", {})
        for block in conn.get("coefficients", []):
            for row in block:
                for src in row:
                    ScalarField.parse(str(src), s.chart)
        alg = s.data.get("algebroid", {})
        for row in alg.get("anchor", []):
            for src in row:
                ScalarField.parse(str(src), s.chart)
        if alg.get("kind") in ("lie_algebra_bundle", "custom"):
            for block in alg.get("structure", []):
                for row in block:
                    for src in row:
                        ScalarField.parse(str(src), s.chart)

    def _declared_rank(self) -> int:
        alg = self.s.data.get("algebroid", {})
        kind = alg.get("kind")
        if kind in ("cotangent", "tangent") or kind is None:
            return self.s.chart.dim
        if "rank" in alg:
            return int(alg["rank"])
        if "anchor" in alg:
            return len(alg["anchor"])
        if "structure" in alg:
            return len(alg["structure"])
        return self.s.chart.dim

    # -- cached builders -------------------------------------------------

    def poisson_chart(self) -> PoissonChart:
        if "pchart" not in self._cache:
            s = self.s
            pi = BivectorField.from_full_matrix(
                [[str(x) for x in row] for row in s.poisson_matrix],
                s.chart,
                probe_points=self._probe_points(),
            )
            self._cache["pchart"] = PoissonChart(s.chart, pi, box=s.box, seed=s.seed)
        return self._cache["pchart"]

    def _probe_points(self):
        rng = np.random.default_rng(self.s.seed)
        lo = np.array([b[0] for b in self.s.box])
        hi = np.array([b[1] for b in self.s.box])
        return [tuple(row) for row in rng.uniform(lo, hi, size=(4, self.s.chart.dim))]

    def points(self) -> list:
        if "points" not in self._cache:
            pts = self.poisson_chart().sample_points(self.s.count)
            self._cache["points"] = list(self.s.explicit_points) + pts
        return self._cache["points"]

    def algebroid(self) -> LieAlgebroid:
        if "algebroid" in self._cache:
            return self._cache["algebroid"]
        s = self.s
        alg = s.data.get("algebroid")
        if alg is None:
            raise SchemaError("this check needs an [algebroid] section", field="algebroid")
        kind = _require(alg, "kind", "algebroid.")
        P = self.poisson_chart()
        pts = self.points()[: min(6, len(self.points()))]
        if kind == "cotangent":
            A = make_cotangent_algebroid(P, points=pts)
        elif kind == "tangent":
            A = make_tangent_algebroid(P)
        elif kind == "action":
            structure = _require(alg, "structure", "algebroid.")
            anchors = [
                VectorField.parse([str(x) for x in row], s.chart)
                for row in _require(alg, "anchor", "algebroid.")
            ]
            A = make_action_algebroid(
                P, structure, anchors, frame=alg.get("frame"), points=pts
            )
        elif kind == "lie_algebra_bundle":
            A = make_lie_algebra_bundle(
                P, _require(alg, "structure", "algebroid."), frame=alg.get("frame"), points=pts
            )
        elif kind == "custom":
            rank = int(_require(alg, "rank", "algebroid."))
            anchors = [
                VectorField.parse([str(x) for x in row], s.chart)
                for row in _require(alg, "anchor", "algebroid.")
            ]
            structure_src = _require(alg, "structure", "algebroid.")
            structure = {}
            for al in range(rank):
                for be in range(al + 1, rank):
                    comps = tuple(
                        ScalarField.parse(str(structure_src[al][be][g]), s.chart)
                        for g in range(rank)
                    )
                    structure[(al, be)] = comps
            frame = tuple(alg.get("frame", tuple(f"e{i+1}" for i in range(rank))))
            A = LieAlgebroid(P, rank, frame, tuple(anchors), structure, kind="custom")
        else:
            raise SchemaError(f"unknown algebroid kind {kind!r}", field="algebroid.kind")
        self._cache["algebroid"] = A
        return A

    def connection(self) -> Connection:
        if "connection" in self._cache:
            return self._cache["connection"]
        s = self.s
        conn = s.data.get("connection", {"kind": "trivial"})
        kind = conn.get("kind", "trivial")
        rank = self._declared_rank()
        if kind == "trivial":
            D = Connection.trivial(s.chart, rank)
        elif kind == "coefficients":
            D = Connection.parse(_require(conn, "coefficients", "connection."), s.chart, rank)
        else:
            raise SchemaError(f"unknown connection kind {kind!r}", field="connection.kind")
        self._cache["connection"] = D
        return D

    def momentum(self) -> SectionAStar:
        s = self.s
        if "momentum" not in s.data:
            raise SchemaError("this check needs a [momentum] section", field="momentum")
        comps = _require(s.data["momentum"], "components", "momentum.")
        return SectionAStar.parse([str(x) for x in comps], s.chart)

    def one_form(self, table: str) -> Optional[OneForm]:
        if table not in self.s.data:
            return None
        comps = _require(self.s.data[table], "components", f"{table}.")
        return OneForm.parse([str(x) for x in comps], self.s.chart)

    def vector_n(self) -> VectorField:
        if "vector_n" not in self.s.data:
            raise SchemaError("this check needs a [vector_n] section", field="vector_n")
        comps = _require(self.s.data["vector_n"], "components", "vector_n.")
        return VectorField.parse([str(x) for x in comps], self.s.chart)

    def instance(self, need_mu: bool = True) -> HamiltonianInstance:
        mu = self.momentum() if (need_mu or "momentum" in self.s.data) else None
        return HamiltonianInstance(
            self.algebroid(),
            self.connection(),
            mu,
            points=self.points(),
            jet_order=self.s.jet_order,
            tolerance=self.s.tolerance_for("default"),
            seed=self.s.seed,
        )


# -- check dispatch --------------------------------------------------------------


def _run_jacobi(rt: _Runtime, tol: float) -> list[CheckReport]:
    P = rt.poisson_chart()
    rows = []
    from .fields import schouten_bb

    for p in rt.points():
        tv = schouten_bb(P.pi, P.pi, p)
        scale = max(1.0, max((abs(v.value) for v in P.pi.matrix_jets(p, 0)[0]), default=1.0))
        rows.append((p, tv.max_abs(), scale))
    return [make_report("jacobi", rows, tol, rt.s.seed)]


def _run_algebroid(rt: _Runtime, tol: float) -> list[CheckReport]:
    A = rt.algebroid()
    pts = rt.points()
    jres, jworst = jacobiator_residual(A, pts)
    ares, aworst = anchor_morphism_residual(A, pts)
    rows = [(jworst, jres, 1.0), (aworst, ares, 1.0)]
    details = {"jacobiator": jres, "anchor_morphism": ares}
    return [make_report("algebroid", rows, tol, rt.s.seed, details)]


def _run_h1(rt: _Runtime, tol: float) -> list[CheckReport]:
    inst = rt.instance(need_mu=False)
    inst.tolerance = tol
    return [check_H1(inst)]


def _run_h2(rt: _Runtime, tol: float) -> list[CheckReport]:
    inst = rt.instance()
    inst.tolerance = tol
    return [check_H2(inst)]


def _run_h3(rt: _Runtime, tol: float) -> list[CheckReport]:
    inst = rt.instance()
    inst.tolerance = tol
    return [check_H3(inst)]


def _run_liouville(rt: _Runtime, tol: float) -> list[CheckReport]:
    s = rt.s
    if "momentum" not in s.data:
        raise SchemaError("liouville needs [momentum] with vector-field components", field="momentum")
    comps = _require(s.data["momentum"], "components", "momentum.")
    mu_vf = VectorField.parse([str(x) for x in comps], s.chart)
    eta = rt.one_form("eta")
    return [
        liouville_residual(
            rt.poisson_chart(), mu_vf, eta, points=rt.points(), tolerance=tol, seed=s.seed
        )
    ]


def _run_pointwise(rt: _Runtime, tol: float) -> list[CheckReport]:
    inst = rt.instance(need_mu=False)
    inst.tolerance = tol
    tbl = rt.s.data.get("pointwise", {})
    count = int(tbl.get("count", 5))
    pts = rt.points()[:count]
    worst = None
    agree = True
    rows = []
    for m in pts:
        rep = pointwise_checks(inst, m)
        rows.append((m, rep.max_residual, rep.scale))
        agree = agree and all(
            v for k, v in rep.details.items() if k.endswith("_agrees")
        )
        if worst is None or rep.max_residual > worst.max_residual:
            worst = rep
    details = dict(worst.details if worst else {})
    details["all_points_agree_with_tensor_checks"] = agree
    return [make_report("pointwise", rows, tol, rt.s.seed, details)]


def _run_momentum_builder(rt: _Runtime, tol: float) -> list[CheckReport]:
    eta = rt.one_form("eta")
    if eta is None:
        raise SchemaError("momentum_builder needs an [eta] section", field="eta")
    return [
        momentum_builder_report(
            rt.poisson_chart(),
            rt.connection(),
            eta,
            rt.one_form("eta_bar"),
            points=rt.points(),
            tolerance=tol,
            seed=rt.s.seed,
        )
    ]


def _run_invariance(rt: _Runtime, tol: float) -> list[CheckReport]:
    inst = rt.instance()
    inst.tolerance = tol
    A = inst.algebroid
    tbl = rt.s.data.get("invariance", {})
    if "a" in tbl and "b" in tbl:
        a = SectionA.parse([str(x) for x in tbl["a"]], rt.s.chart)
        b = SectionA.parse([str(x) for x in tbl["b"]], rt.s.chart)
    else:
        if A.rank < 2:
            raise SchemaError("default invariance sections need rank >= 2", field="invariance")
        a, b = A.frame_section(0), A.frame_section(1)
    return [invariance_residual(inst, a, b, points=rt.points())]


def _run_coisotropy(rt: _Runtime, tol: float) -> list[CheckReport]:
    tbl = rt.s.data.get("coisotropy")
    if tbl is None or "point" not in tbl:
        raise SchemaError("coisotropy needs [coisotropy] with a point", field="coisotropy.point")
    inst = rt.instance()
    inst.tolerance = tol
    m = tuple(float(x) for x in tbl["point"])
    return [coisotropy_witness(inst, m, delta=float(tbl.get("delta", 1e-6)))]


def _run_theorem41(rt: _Runtime, tol: float) -> list[CheckReport]:
    if rt.s.jet_order < 2:
        raise InsufficientJetOrderError("theorem41 needs jet_order >= 2")
    tbl = rt.s.data.get("theorem41", {})
    x_count = int(tbl.get("x_count", 5))
    return [
        theorem41_check(
            rt.algebroid(),
            rt.connection(),
            x_points=rt.points()[:x_count],
            tolerance=tol,
            seed=rt.s.seed,
            jet_order=rt.s.jet_order,
        )
    ]


def _run_bivector_map(rt: _Runtime, tol: float) -> list[CheckReport]:
    return [
        bivector_map_residual(
            rt.algebroid(), rt.connection(), rt.momentum(),
            points=rt.points(), tolerance=tol, seed=rt.s.seed,
        )
    ]


def _run_symplectic_suite(rt: _Runtime, tol: float) -> list[CheckReport]:
    return symplectic_suite(
        rt.poisson_chart(), rt.connection(), rt.vector_n(),
        points=rt.points(), tolerance=tol, seed=rt.s.seed,
    )


def _run_classify(rt: _Runtime, tol: float) -> list[CheckReport]:
    tbl = rt.s.data.get("classify", {})
    bundle = tbl.get("bundle", "tangent")
    return [
        classify_connection(
            rt.poisson_chart(), rt.connection(), bundle,
            points=rt.points(), tolerance=tol, seed=rt.s.seed,
        )
    ]


_DISPATCH: dict[str, Callable] = {
    "jacobi": _run_jacobi,
    "algebroid": _run_algebroid,
    "H1": _run_h1,
    "H2": _run_h2,
    "H3": _run_h3,
    "liouville": _run_liouville,
    "pointwise": _run_pointwise,
    "momentum_builder": _run_momentum_builder,
    "invariance": _run_invariance,
    "coisotropy": _run_coisotropy,
    "theorem41": _run_theorem41,
    "bivector_map": _run_bivector_map,
    "symplectic_suite": _run_symplectic_suite,
    "classify_connection": _run_classify,
}


@dataclass
class Report:
    """Results of one scenario run."""

    scenario: str
    digest: str
    seed: int
    jet_order: int
    tool_version: str
    checks: list
    verdict: str
    had_errors: bool
    wall_time_s: float

    def as_dict(self) -> dict:
        return {
            "schema_version": 1,
            "scenario": self.scenario,
            "digest": self.digest,
            "seed": self.seed,
            "jet_order": self.jet_order,
            "tool_version": self.tool_version,
            "checks": self.checks,
            "verdict": self.verdict,
            "had_errors": self.had_errors,
            "wall_time_s": self.wall_time_s,
        }


def run_checks(scenario: Scenario) -> Report:
    """Execute the scenario's checks in declaration order."""
    t0 = time.perf_counter()
    rt = _Runtime(scenario)
    entries = []
    had_errors = False
    all_as_expected = True
    for check in scenario.checks:
        tol = scenario.tolerance_for(check)
        try:
            reports = _DISPATCH[check](rt, tol)
        except MomsecError as exc:
            had_errors = True
            all_as_expected = False
            entries.append(
                {
                    "name": check,
                    "error": f"{type(exc).__name__}: {exc}",
                    "pass": False,
                    "expected": scenario.expect.get(check, "pass"),
                    "as_expected": False,
                }
            )
            continue
        for rep in reports:
            expected = scenario.expect.get(rep.name, scenario.expect.get(check, "pass"))
            as_expected = rep.passed == (expected == "pass")
            all_as_expected = all_as_expected and as_expected
            entry = rep.as_dict()
            entry["expected"] = expected
            entry["as_expected"] = as_expected
            entry["seed"] = rep.seed
            details = {
                k: v
                for k, v in rep.details.items()
                if isinstance(v, (bool, int, float, str))
            }
            if details:
                entry["details"] = details
            entries.append(entry)
    verdict = "pass" if all_as_expected else "fail"
    return Report(
        scenario=scenario.name,
        digest=scenario.digest(),
        seed=scenario.seed,
        jet_order=scenario.jet_order,
        tool_version=TOOL_VERSION,
        checks=entries,
        verdict=verdict,
        had_errors=had_errors,
        wall_time_s=round(time.perf_counter() - t0, 6),
    )


def emit_report(report: Report, format: str = "text") -> str:
    """Serialize a report; JSON schema documented in the README."""
    if format == "json":
        return json.dumps(report.as_dict(), indent=2)
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    lines = [
        f"scenario: {report.scenario}  (digest {report.digest}, seed {report.seed}, "
        f"jet order {report.jet_order})"
    ]
    for entry in report.checks:
        if "error" in entry:
            lines.append(f"  {entry['name']:<28} ERROR  {entry['error']}")
            continue
        status = "PASS" if entry["pass"] else "FAIL"
        marker = "" if entry["as_expected"] else "  [UNEXPECTED]"
        lines.append(
            f"  {entry['name']:<28} {status}  max_residual={entry['max_residual']:.3e} "
            f"tol={entry['tolerance']:.3e}{marker}"
        )
    lines.append(f"verdict: {report.verdict.upper()}")
    return "\n".join(lines)


def exit_code(report: Report) -> int:
    """0 if every check matched its expectation, 2 on errors, else 1."""
    if report.had_errors:
        return 2
    return 0 if report.verdict == "pass" else 1
