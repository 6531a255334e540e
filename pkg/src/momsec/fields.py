"""Tensor calculus on a coordinate chart.

Scalar, vector, covector and bivector fields with Lie brackets, Lie
derivatives, Schouten brackets, exterior derivatives and the musical map
associated with a bivector.  All pointwise evaluations go through jets, so
derivatives are exact up to roundoff.

Sign conventions (locked by the invariant tests):

* interior product: iota_alpha(u ^ v) = <alpha,u> v - <alpha,v> u
* bivector components: Pi = (1/2) Pi^{ij} d_i ^ d_j, stored strict-upper
* sharp map: (Pi# alpha)^j = alpha_i Pi^{ij}, hence <alpha, Pi# beta> = -Pi(alpha, beta)
* pairing: Pi(alpha, beta) = alpha_i Pi^{ij} beta_j, {f,g} = Pi(df,dg)
* hamiltonian field: X_f = -Pi# df, so X_f . g = {g,f}
* Schouten bracket normalized by [P,Q](df,dg,dh) = C(f,g,h) with
  C(f,g,h) = {f,{g,h}_Q}_P + {f,{g,h}_P}_Q + cyclic; thus [Pi,Pi] applied to
  (df,dg,dh) is twice the Jacobiator of {.,.}_Pi.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import exprcore
from .errors import ChartMismatchError, ValidationError
from .exprcore import Expr, jet_eval, parse_expr, to_source
from .jets import Jet, jet_space

Point = tuple[float, ...]


def as_point(p: Sequence[float]) -> Point:
    return tuple(float(x) for x in p)


@dataclass(frozen=True)
class Chart:
    """An ordered tuple of coordinate names."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) < 1:
            raise ValueError("chart needs at least one coordinate")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate coordinate names in {self.names}")

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def check_point(self, p: Sequence[float]) -> Point:
        p = as_point(p)
        if len(p) != self.dim:
            raise ChartMismatchError(
                f"point {p} has dimension {len(p)}, chart has {self.dim}"
            )
        return p


def _require_same_chart(*objs):
    charts = {obj.chart for obj in objs}
    if len(charts) > 1:
        raise ChartMismatchError(f"objects live on different charts: {charts}")


class ScalarField:
    """A function on a chart, evaluable to a Taylor jet at any point.

    Usually backed by a parsed expression; derived coefficients (for example
    connection coefficients produced by a constructive theorem) may instead be
    backed by a callable (point, order) -> Jet.
    """

    __slots__ = ("chart", "_fn", "expr")

    def __init__(self, chart: Chart, fn: Callable[[Point, int], Jet], expr: Optional[Expr] = None):
        self.chart = chart
        self._fn = fn
        self.expr = expr

    @classmethod
    def parse(cls, source: str, chart: Chart) -> "ScalarField":
        return cls.from_expr(parse_expr(source, chart.names), chart)

    @classmethod
    def from_expr(cls, expr: Expr, chart: Chart) -> "ScalarField":
        def fn(p: Point, order: int) -> Jet:
            return jet_eval(expr, chart.names, p, order)

        return cls(chart, fn, expr)

    @classmethod
    def constant(cls, value: float, chart: Chart) -> "ScalarField":
        return cls.from_expr(exprcore.const(value), chart)

    @classmethod
    def from_callable(cls, fn: Callable[[Point, int], Jet], chart: Chart) -> "ScalarField":
        return cls(chart, fn)

    def jet(self, p: Sequence[float], order: int) -> Jet:
        return self._fn(self.chart.check_point(p), order)

    def value(self, p: Sequence[float]) -> float:
        return self.jet(p, 0).value

    def __neg__(self) -> "ScalarField":
        if self.expr is not None:
            return ScalarField.from_expr(exprcore.neg(self.expr), self.chart)
        fn = self._fn
        return ScalarField(self.chart, lambda p, k: -fn(p, k))

    def source(self) -> str:
        if self.expr is None:
            return "<derived>"
        return to_source(self.expr)

    def __repr__(self):
        return f"ScalarField({self.source()!r})"


def zero_field(chart: Chart) -> ScalarField:
    return ScalarField.constant(0.0, chart)


class _Components:
    """Common container for fields with one chart-indexed component list."""

    __slots__ = ("chart", "components")

    def __init__(self, components: Sequence[ScalarField]):
        charts = {c.chart for c in components}
        if len(charts) != 1:
            raise ChartMismatchError("components bound to different charts")
        self.chart = components[0].chart
        self.components = tuple(components)
        if len(self.components) != self.chart.dim:
            raise ChartMismatchError(
                f"{type(self).__name__} needs {self.chart.dim} components, got {len(self.components)}"
            )

    @classmethod
    def parse(cls, sources: Sequence[str], chart: Chart):
        return cls([ScalarField.parse(s, chart) for s in sources])

    @classmethod
    def zero(cls, chart: Chart):
        return cls([zero_field(chart)] * chart.dim)

    def jets(self, p: Sequence[float], order: int) -> list[Jet]:
        return [c.jet(p, order) for c in self.components]

    def values(self, p: Sequence[float]) -> np.ndarray:
        return np.array([c.value(p) for c in self.components])


class VectorField(_Components):
    """v = v^i d_i with ScalarField components."""


class OneForm(_Components):
    """alpha = alpha_i dx^i with ScalarField components."""


def coordinate_vector_field(chart: Chart, i: int) -> VectorField:
    comps = [ScalarField.constant(1.0 if j == i else 0.0, chart) for j in range(chart.dim)]
    return VectorField(comps)


def coordinate_one_form(chart: Chart, i: int) -> OneForm:
    comps = [ScalarField.constant(1.0 if j == i else 0.0, chart) for j in range(chart.dim)]
    return OneForm(comps)


class BivectorField:
    """P = (1/2) P^{ij} d_i ^ d_j, with the strict upper triangle stored.

    Antisymmetry is structural: P^{ji} is produced from P^{ij} on access, so
    it cannot be violated by construction.
    """

    __slots__ = ("chart", "upper")

    def __init__(self, chart: Chart, upper: dict[tuple[int, int], ScalarField]):
        for (i, j), f in upper.items():
            if not (0 <= i < j < chart.dim):
                raise ValueError(f"upper-triangle index {(i, j)} out of range")
            if f.chart != chart:
                raise ChartMismatchError("bivector component on a different chart")
        self.chart = chart
        self.upper = dict(upper)

    @classmethod
    def parse_upper(cls, entries: dict[tuple[int, int], str], chart: Chart) -> "BivectorField":
        return cls(chart, {ij: ScalarField.parse(s, chart) for ij, s in entries.items()})

    @classmethod
    def from_full_matrix(
        cls,
        rows: Sequence[Sequence[str]],
        chart: Chart,
        probe_points: Iterable[Sequence[float]],
        tol: float = 1e-12,
    ) -> "BivectorField":
        """Build from a full component matrix, verifying antisymmetry.

        The upper triangle is stored; the lower triangle and diagonal are
        checked against it numerically at the probe points and then dropped.
        """
        n = chart.dim
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValidationError(f"bivector matrix must be {n}x{n}")
        fields = [[ScalarField.parse(s, chart) for s in row] for row in rows]
        for p in probe_points:
            for i in range(n):
                for j in range(i, n):
                    s = fields[i][j].value(p) + fields[j][i].value(p)
                    if abs(s) > tol * max(1.0, abs(fields[i][j].value(p))):
                        raise ValidationError(
                            f"bivector matrix not antisymmetric in entry ({i},{j})",
                            point=p,
                            residual=s,
                        )
        upper = {
            (i, j): fields[i][j]
            for i in range(n)
            for j in range(i + 1, n)
        }
        return cls(chart, upper)

    @classmethod
    def zero(cls, chart: Chart) -> "BivectorField":
        return cls(chart, {})

    def entry_field(self, i: int, j: int) -> ScalarField:
        """The component P^{ij} as a ScalarField (signed, zero off support)."""
        if i == j:
            return zero_field(self.chart)
        if i < j:
            return self.upper.get((i, j), zero_field(self.chart))
        f = self.upper.get((j, i))
        return -f if f is not None else zero_field(self.chart)

    def matrix_jets(self, p: Sequence[float], order: int) -> list[list[Jet]]:
        n = self.chart.dim
        space = jet_space(n, order)
        zero = Jet.constant(space, 0.0)
        mat = [[zero for _ in range(n)] for _ in range(n)]
        for (i, j), f in self.upper.items():
            v = f.jet(p, order)
            mat[i][j] = v
            mat[j][i] = -v
        return mat

    def matrix_values(self, p: Sequence[float]) -> np.ndarray:
        n = self.chart.dim
        out = np.zeros((n, n))
        for (i, j), f in self.upper.items():
            v = f.value(p)
            out[i, j] = v
            out[j, i] = -v
        return out


class TrivectorValue:
    """A totally antisymmetric rank-3 table of jets at one point."""

    __slots__ = ("dim", "entries")

    def __init__(self, dim: int, entries: dict[tuple[int, int, int], Jet]):
        for ijk in entries:
            i, j, k = ijk
            if not (0 <= i < j < k < dim):
                raise ValueError(f"trivector index {ijk} not strictly increasing")
        self.dim = dim
        self.entries = entries

    @staticmethod
    def _sign(perm: tuple[int, int, int]) -> int:
        i, j, k = perm
        if i == j or j == k or i == k:
            return 0
        sign = 1
        seq = [i, j, k]
        for a in range(3):
            for b in range(a + 1, 3):
                if seq[a] > seq[b]:
                    sign = -sign
        return sign

    def get(self, i: int, j: int, k: int):
        s = self._sign((i, j, k))
        if s == 0:
            return 0.0
        key = tuple(sorted((i, j, k)))
        v = self.entries.get(key)
        if v is None:
            return 0.0
        return v * s

    def get_value(self, i: int, j: int, k: int) -> float:
        v = self.get(i, j, k)
        return v.value if isinstance(v, Jet) else float(v)

    def max_abs(self) -> float:
        if not self.entries:
            return 0.0
        return max(abs(v.value) for v in self.entries.values())

    def apply(self, a: Sequence[Jet], b: Sequence[Jet], c: Sequence[Jet]) -> Jet:
        """Contract with three one-forms given as component jet lists."""
        if not self.entries:
            space = a[0].space
            return Jet.constant(space, 0.0)
        space = next(iter(self.entries.values())).space
        total = Jet.constant(space, 0.0)
        for (i, j, k), v in self.entries.items():
            for perm in itertools.permutations((i, j, k)):
                s = self._sign(perm)
                total = total + v * s * a[perm[0]] * b[perm[1]] * c[perm[2]]
        return total


# -- jet-level kernels --------------------------------------------------------
#
# Kernels take component jets of uniform order k and return jets of order k-1
# where a derivative is consumed (k where not).  `_lo` drops one order so that
# differentiated and undifferentiated factors live in the same space.


def _lo(j: Jet) -> Jet:
    return j.truncate(j.order - 1)


def lie_bracket_jets(vj: Sequence[Jet], wj: Sequence[Jet]) -> list[Jet]:
    n = len(vj)
    out = []
    for i in range(n):
        acc = Jet.constant(jet_space(vj[0].dim, vj[0].order - 1), 0.0)
        for l in range(n):
            acc = acc + _lo(vj[l]) * wj[i].deriv(l) - _lo(wj[l]) * vj[i].deriv(l)
        out.append(acc)
    return out


def lie_derivative_bivector_jets(vj: Sequence[Jet], Pj: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    n = len(vj)
    zero = Jet.constant(jet_space(vj[0].dim, vj[0].order - 1), 0.0)
    out = [[zero for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            acc = zero
            for l in range(n):
                acc = (
                    acc
                    + _lo(vj[l]) * Pj[i][j].deriv(l)
                    - _lo(Pj[l][j]) * vj[i].deriv(l)
                    - _lo(Pj[i][l]) * vj[j].deriv(l)
                )
            out[i][j] = acc
            out[j][i] = -acc
    return out


def lie_derivative_oneform_jets(vj: Sequence[Jet], aj: Sequence[Jet]) -> list[Jet]:
    n = len(vj)
    out = []
    for k in range(n):
        acc = Jet.constant(jet_space(vj[0].dim, vj[0].order - 1), 0.0)
        for l in range(n):
            acc = acc + _lo(vj[l]) * aj[k].deriv(l) + _lo(aj[l]) * vj[l].deriv(k)
        out.append(acc)
    return out


def pi_sharp_jets(Pj: Sequence[Sequence[Jet]], aj: Sequence[Jet]) -> list[Jet]:
    n = len(aj)
    out = []
    for j in range(n):
        acc = Jet.constant(aj[0].space, 0.0)
        for i in range(n):
            acc = acc + aj[i] * Pj[i][j]
        out.append(acc)
    return out


def bivector_apply_jets(Pj, aj, bj) -> Jet:
    n = len(aj)
    acc = Jet.constant(aj[0].space, 0.0)
    for i in range(n):
        for j in range(n):
            acc = acc + aj[i] * Pj[i][j] * bj[j]
    return acc


def grad_jets(fj: Jet) -> list[Jet]:
    return [fj.deriv(i) for i in range(fj.dim)]


def schouten_jets(Pj, Qj) -> dict[tuple[int, int, int], Jet]:
    n = len(Pj)
    lower = jet_space(Pj[0][0].dim, Pj[0][0].order - 1)
    zero = Jet.constant(lower, 0.0)
    Plo = [[_lo(Pj[i][j]) for j in range(n)] for i in range(n)]
    Qlo = [[_lo(Qj[i][j]) for j in range(n)] for i in range(n)]
    dP = [[[Pj[i][j].deriv(l) if not Pj[i][j].is_zero() else zero for l in range(n)]
           for j in range(n)] for i in range(n)]
    dQ = [[[Qj[i][j].deriv(l) if not Qj[i][j].is_zero() else zero for l in range(n)]
           for j in range(n)] for i in range(n)]
    entries = {}
    for p in range(n):
        for q in range(p + 1, n):
            for r in range(q + 1, n):
                acc = zero
                for a, b, c in ((p, q, r), (q, r, p), (r, p, q)):
                    for j in range(n):
                        acc = acc + Plo[a][j] * dQ[b][c][j]
                        acc = acc + Qlo[a][j] * dP[b][c][j]
                entries[(p, q, r)] = acc
    return entries


# -- field-level operations ---------------------------------------------------


def lie_bracket_vf(v: VectorField, w: VectorField, p: Sequence[float], order: int = 0) -> list[Jet]:
    """[v,w]^i = v^l d_l w^i - w^l d_l v^i as jets at p."""
    _require_same_chart(v, w)
    return lie_bracket_jets(v.jets(p, order + 1), w.jets(p, order + 1))


def schouten_bb(P: BivectorField, Q: BivectorField, p: Sequence[float], order: int = 0) -> TrivectorValue:
    """Schouten bracket [P,Q] at p, normalized so [P,Q](df,dg,dh) = C(f,g,h)."""
    _require_same_chart(P, Q)
    Pj = P.matrix_jets(p, order + 1)
    Qj = Q.matrix_jets(p, order + 1)
    return TrivectorValue(P.chart.dim, schouten_jets(Pj, Qj))


def lie_derivative_bivector(v: VectorField, P: BivectorField, p: Sequence[float], order: int = 0):
    """(L_v P)^{ij} = v^l d_l P^{ij} - P^{lj} d_l v^i - P^{il} d_l v^j."""
    _require_same_chart(v, P)
    return lie_derivative_bivector_jets(v.jets(p, order + 1), P.matrix_jets(p, order + 1))


def pi_sharp(P: BivectorField, alpha: OneForm, p: Sequence[float], order: int = 0) -> list[Jet]:
    """(P# alpha)^j = alpha_i P^{ij}."""
    _require_same_chart(P, alpha)
    return pi_sharp_jets(P.matrix_jets(p, order), alpha.jets(p, order))


def exterior_derivative(obj, p: Sequence[float], order: int = 0):
    """df for a ScalarField, d(alpha) for a OneForm."""
    if isinstance(obj, ScalarField):
        return grad_jets(obj.jet(p, order + 1))
    if isinstance(obj, OneForm):
        aj = obj.jets(p, order + 1)
        n = len(aj)
        return [[aj[j].deriv(i) - aj[i].deriv(j) for j in range(n)] for i in range(n)]
    raise TypeError(f"exterior_derivative expects ScalarField or OneForm, got {type(obj)}")


def poisson_bracket(P: BivectorField, f: ScalarField, g: ScalarField, p: Sequence[float], order: int = 0) -> Jet:
    """{f,g} = P(df, dg)."""
    _require_same_chart(P, f, g)
    df = grad_jets(f.jet(p, order + 1))
    dg = grad_jets(g.jet(p, order + 1))
    return bivector_apply_jets(P.matrix_jets(p, order), df, dg)


def hamiltonian_vf(P: BivectorField, f: ScalarField, p: Sequence[float], order: int = 0) -> list[Jet]:
    """X_f = -P# df, so that X_f . g = {g,f}."""
    _require_same_chart(P, f)
    df = grad_jets(f.jet(p, order + 1))
    return [-u for u in pi_sharp_jets(P.matrix_jets(p, order), df)]


# -- Poisson charts -------------------------------------------------------------


DEFAULT_SEED = 42
DEFAULT_SAMPLE_COUNT = 25


@dataclass
class PoissonChart:
    """A chart with a bivector, a sampling region and a seed.

    The Jacobi identity is a checked invariant, not an assumption: call
    ``validate_jacobi`` (constructors of derived structures do this) to test
    the Schouten bracket [Pi,Pi] at the sample points.
    """

    chart: Chart
    pi: BivectorField
    box: tuple[tuple[float, float], ...] = ()
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.pi.chart != self.chart:
            raise ChartMismatchError("bivector bound to a different chart")
        if not self.box:
            self.box = tuple((-1.0, 1.0) for _ in range(self.chart.dim))
        if len(self.box) != self.chart.dim:
            raise ChartMismatchError("sampling box dimension mismatch")

    def sample_points(self, count: int = DEFAULT_SAMPLE_COUNT) -> list[Point]:
        rng = np.random.default_rng(self.seed)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        pts = rng.uniform(lo, hi, size=(count, self.chart.dim))
        return [as_point(row) for row in pts]

    def jacobi_residual(self, points: Optional[Iterable[Point]] = None):
        """Max |[Pi,Pi]| over the points; returns (residual, worst_point)."""
        if points is None:
            points = self.sample_points()
        worst, worst_point = 0.0, None
        for p in points:
            r = schouten_bb(self.pi, self.pi, p).max_abs()
            if r > worst or worst_point is None:
                worst, worst_point = r, p
        return worst, worst_point

    def validate_jacobi(self, points: Optional[Iterable[Point]] = None, tol: float = 1e-9):
        res, worst = self.jacobi_residual(points)
        if res > tol:
            raise ValidationError(
                "bivector fails the Jacobi identity", point=worst, residual=res
            )
        return res

    def nondegenerate_at(self, p: Sequence[float], cutoff: float = 1e-12) -> bool:
        m = self.matrix_values(p)
        return abs(np.linalg.det(m)) > cutoff

    def matrix_values(self, p: Sequence[float]) -> np.ndarray:
        return self.pi.matrix_values(p)
