"""Lie algebroids over a Poisson chart.

An algebroid is presented in a frame: anchor components rho(e_alpha) and
structure functions c^gamma_{alpha beta} (stored strict-upper in alpha,beta so
antisymmetry is structural).  Brackets of general sections are derived from
the frame data via the Leibniz rule.  Validators are sampling-based: they
check the Jacobiator and the anchor-morphism identity at the sample points,
never claiming a global proof.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ChartMismatchError, ValidationError
from .fields import (
    BivectorField,
    Chart,
    PoissonChart,
    ScalarField,
    VectorField,
    coordinate_vector_field,
    lie_bracket_vf,
    lie_derivative_oneform_jets,
    zero_field,
)
from .jets import Jet, jet_space

VALIDATION_TOL = 1e-9


class _RankComponents:
    """Component container for sections of A or A* in the frame."""

    __slots__ = ("chart", "components")

    def __init__(self, components: Sequence[ScalarField]):
        charts = {c.chart for c in components}
        if len(charts) != 1:
            raise ChartMismatchError("section components bound to different charts")
        self.chart = components[0].chart
        self.components = tuple(components)

    @classmethod
    def parse(cls, sources: Sequence[str], chart: Chart):
        return cls([ScalarField.parse(s, chart) for s in sources])

    @classmethod
    def zero(cls, chart: Chart, rank: int):
        return cls([zero_field(chart)] * rank)

    @property
    def rank(self) -> int:
        return len(self.components)

    def jets(self, p, order: int) -> list[Jet]:
        return [c.jet(p, order) for c in self.components]

    def values(self, p) -> np.ndarray:
        return np.array([c.value(p) for c in self.components])


class SectionA(_RankComponents):
    """a = a^alpha e_alpha."""


class SectionAStar(_RankComponents):
    """mu = mu_alpha e^alpha."""


@dataclass
class LieAlgebroid:
    """(A, rho, [.,.]) over a PoissonChart, presented in a frame."""

    base: PoissonChart
    rank: int
    frame: tuple[str, ...]
    anchor: tuple[VectorField, ...]
    structure: dict[tuple[int, int], tuple[ScalarField, ...]]
    kind: str = "custom"

    def __post_init__(self):
        if len(self.frame) != self.rank or len(self.anchor) != self.rank:
            raise ChartMismatchError("frame/anchor size does not match rank")
        for vf in self.anchor:
            if vf.chart != self.base.chart:
                raise ChartMismatchError("anchor field on a different chart")
        for (a, b), comps in self.structure.items():
            if not (0 <= a < b < self.rank):
                raise ValueError(f"structure index {(a, b)} not strict upper")
            if len(comps) != self.rank:
                raise ValueError("structure entry has wrong number of components")

    @property
    def chart(self) -> Chart:
        return self.base.chart

    @property
    def dim(self) -> int:
        return self.base.chart.dim

    # -- frame data access ---------------------------------------------------

    def c_field(self, alpha: int, beta: int, gamma: int) -> ScalarField:
        """c^gamma_{alpha beta} as a ScalarField (signed access)."""
        if alpha == beta:
            return zero_field(self.chart)
        if alpha < beta:
            entry = self.structure.get((alpha, beta))
            return entry[gamma] if entry is not None else zero_field(self.chart)
        entry = self.structure.get((beta, alpha))
        return -entry[gamma] if entry is not None else zero_field(self.chart)

    def c_jets(self, p, order: int):
        """c[alpha][beta][gamma] jets, antisymmetry filled in."""
        r = self.rank
        zero = Jet.constant(jet_space(self.dim, order), 0.0)
        out = [[[zero for _ in range(r)] for _ in range(r)] for _ in range(r)]
        for (a, b), comps in self.structure.items():
            for g in range(r):
                v = comps[g].jet(p, order)
                out[a][b][g] = v
                out[b][a][g] = -v
        return out

    def anchor_jets(self, p, order: int):
        """rho[alpha][i] jets."""
        return [vf.jets(p, order) for vf in self.anchor]

    def frame_section(self, alpha: int) -> SectionA:
        comps = [
            ScalarField.constant(1.0 if g == alpha else 0.0, self.chart)
            for g in range(self.rank)
        ]
        return SectionA(comps)

    def bracket_of_frame(self, alpha: int, beta: int) -> SectionA:
        """[e_alpha, e_beta] as a section (components c^gamma_{alpha beta})."""
        return SectionA([self.c_field(alpha, beta, g) for g in range(self.rank)])

    def check_section(self, a: _RankComponents):
        if a.chart != self.chart:
            raise ChartMismatchError("section bound to a different chart")
        if a.rank != self.rank:
            raise ChartMismatchError(
                f"section has {a.rank} components, algebroid rank is {self.rank}"
            )


# -- operations ---------------------------------------------------------------


def anchor_apply(A: LieAlgebroid, a: SectionA, p, order: int = 0) -> list[Jet]:
    """(rho a)^i = rho^i_alpha a^alpha."""
    A.check_section(a)
    aj = a.jets(p, order)
    rho = A.anchor_jets(p, order)
    n = A.dim
    out = []
    for i in range(n):
        acc = Jet.constant(aj[0].space, 0.0)
        for al in range(A.rank):
            acc = acc + aj[al] * rho[al][i]
        out.append(acc)
    return out


def anchor_field(A: LieAlgebroid, a: SectionA) -> VectorField:
    """rho(a) packaged as a vector field with derived components."""

    def comp(i: int):
        def fn(p, order: int) -> Jet:
            return anchor_apply(A, a, p, order)[i]

        return fn

    return VectorField([ScalarField.from_callable(comp(i), A.chart) for i in range(A.dim)])


def algebroid_bracket(A: LieAlgebroid, a: SectionA, b: SectionA, p, order: int = 0) -> list[Jet]:
    """[a,b]^g = a^al b^be c^g_{al be} + (rho a).b^g - (rho b).a^g."""
    A.check_section(a)
    A.check_section(b)
    r, n = A.rank, A.dim
    aj = a.jets(p, order + 1)
    bj = b.jets(p, order + 1)
    cj = A.c_jets(p, order)
    rho = A.anchor_jets(p, order)
    lo = lambda j: j.truncate(order)
    out = []
    for g in range(r):
        acc = Jet.constant(jet_space(n, order), 0.0)
        for al in range(r):
            for be in range(r):
                if al == be:
                    continue
                acc = acc + lo(aj[al]) * lo(bj[be]) * cj[al][be][g]
        for i in range(n):
            rho_a_i = Jet.constant(jet_space(n, order), 0.0)
            rho_b_i = Jet.constant(jet_space(n, order), 0.0)
            for al in range(r):
                rho_a_i = rho_a_i + lo(aj[al]) * rho[al][i]
                rho_b_i = rho_b_i + lo(bj[al]) * rho[al][i]
            acc = acc + rho_a_i * bj[g].deriv(i) - rho_b_i * aj[g].deriv(i)
        out.append(acc)
    return out


def d_A_one_section(A: LieAlgebroid, mu: SectionAStar, a: SectionA, b: SectionA, p, order: int = 0) -> Jet:
    """(d_A mu)(a,b) = rho a . <mu,b> - rho b . <mu,a> - <mu,[a,b]>."""
    A.check_section(mu)
    A.check_section(a)
    A.check_section(b)
    r = A.rank
    muj1 = mu.jets(p, order + 1)
    aj1 = a.jets(p, order + 1)
    bj1 = b.jets(p, order + 1)
    space = jet_space(A.dim, order)
    # scalars <mu,a>, <mu,b> one order up, then differentiated along anchors
    mu_b = sum((muj1[g] * bj1[g] for g in range(r)), Jet.constant(muj1[0].space, 0.0))
    mu_a = sum((muj1[g] * aj1[g] for g in range(r)), Jet.constant(muj1[0].space, 0.0))
    rho_a = anchor_apply(A, a, p, order)
    rho_b = anchor_apply(A, b, p, order)
    acc = Jet.constant(space, 0.0)
    for i in range(A.dim):
        acc = acc + rho_a[i] * mu_b.deriv(i) - rho_b[i] * mu_a.deriv(i)
    br = algebroid_bracket(A, a, b, p, order)
    muj = mu.jets(p, order)
    for g in range(r):
        acc = acc - muj[g] * br[g]
    return acc


def jacobiator_residual(A: LieAlgebroid, points: Iterable) -> tuple[float, Optional[tuple]]:
    """Max over points and frame triples of |[[e_a,e_b],e_c] + cyclic|."""
    worst, worst_point = 0.0, None
    r = A.rank
    for p in points:
        for al in range(r):
            for be in range(al + 1, r):
                for ga in range(be + 1, r):
                    total = None
                    for x, y, z in ((al, be, ga), (be, ga, al), (ga, al, be)):
                        inner = A.bracket_of_frame(x, y)
                        term = algebroid_bracket(A, inner, A.frame_section(z), p)
                        total = term if total is None else [t + s for t, s in zip(total, term)]
                    res = max(abs(t.value) for t in total)
                    if res > worst or worst_point is None:
                        worst, worst_point = res, p
    return worst, worst_point


def anchor_morphism_residual(A: LieAlgebroid, points: Iterable) -> tuple[float, Optional[tuple]]:
    """Max over points and frame pairs of |rho[e_a,e_b] - [rho e_a, rho e_b]|."""
    worst, worst_point = 0.0, None
    for p in points:
        for al in range(A.rank):
            for be in range(al + 1, A.rank):
                lhs = anchor_apply(A, A.bracket_of_frame(al, be), p)
                rhs = lie_bracket_vf(A.anchor[al], A.anchor[be], p)
                res = max(abs(l.value - r.value) for l, r in zip(lhs, rhs))
                if res > worst or worst_point is None:
                    worst, worst_point = res, p
    return worst, worst_point


def validate_algebroid(A: LieAlgebroid, points: Optional[Iterable] = None, tol: float = VALIDATION_TOL):
    if points is None:
        points = A.base.sample_points()
    points = list(points)
    res, worst = jacobiator_residual(A, points)
    if res > tol:
        raise ValidationError("algebroid Jacobiator fails", point=worst, residual=res)
    res, worst = anchor_morphism_residual(A, points)
    if res > tol:
        raise ValidationError(
            "anchor is not a morphism of brackets", point=worst, residual=res
        )
    return A


# -- constructors ---------------------------------------------------------------


def make_action_algebroid(
    base: PoissonChart,
    structure_constants,
    action_fields: Sequence[VectorField],
    frame: Optional[Sequence[str]] = None,
    validate: bool = True,
    points: Optional[Iterable] = None,
    tol: float = VALIDATION_TOL,
) -> LieAlgebroid:
    """Action algebroid g x M: constant structure functions, given anchor.

    ``structure_constants[al][be][ga]`` is c^ga_{al be}; validators pass iff
    the constants satisfy Jacobi and the fields realize a g-action.
    """
    sc = np.asarray(structure_constants, dtype=float)
    r = len(action_fields)
    if sc.shape != (r, r, r):
        raise ValidationError(f"structure constants must be {r}x{r}x{r}")
    if np.max(np.abs(sc + np.swapaxes(sc, 0, 1))) > 0:
        raise ValidationError("structure constants must be antisymmetric in the lower pair")
    chart = base.chart
    structure = {}
    for al in range(r):
        for be in range(al + 1, r):
            comps = tuple(ScalarField.constant(float(sc[al, be, g]), chart) for g in range(r))
            if any(abs(sc[al, be, g]) > 0 for g in range(r)):
                structure[(al, be)] = comps
    names = tuple(frame) if frame is not None else tuple(f"e{i+1}" for i in range(r))
    A = LieAlgebroid(base, r, names, tuple(action_fields), structure, kind="action")
    if validate:
        validate_algebroid(A, points, tol)
    return A


def make_cotangent_algebroid(
    P: PoissonChart,
    validate: bool = True,
    points: Optional[Iterable] = None,
    tol: float = VALIDATION_TOL,
) -> LieAlgebroid:
    """Cotangent algebroid of a Poisson chart: A = T*M, rho = -Pi#.

    Structure functions on the coordinate coframe are computed by evaluating
    the bracket of 1-forms term by term (two Lie derivatives plus the exterior
    derivative of Pi(alpha,beta)), not from a pre-simplified formula.
    """
    if validate:
        P.validate_jacobi(points, tol)
    chart = P.chart
    n = chart.dim
    anchor = tuple(
        VectorField([-P.pi.entry_field(al, j) for j in range(n)]) for al in range(n)
    )

    def c_fn(alpha: int, beta: int, gamma: int) -> Callable:
        def fn(p, order: int) -> Jet:
            Pj = P.pi.matrix_jets(p, order + 1)
            space = Pj[0][0].space
            sharp_a = Pj[alpha]  # (Pi# dx^alpha)^j = Pi^{alpha j}
            sharp_b = Pj[beta]
            coframe_a = [Jet.constant(space, 1.0 if l == alpha else 0.0) for l in range(n)]
            coframe_b = [Jet.constant(space, 1.0 if l == beta else 0.0) for l in range(n)]
            lie_ab = lie_derivative_oneform_jets(sharp_a, coframe_b)
            lie_ba = lie_derivative_oneform_jets(sharp_b, coframe_a)
            d_pi = Pj[alpha][beta].deriv(gamma)
            return -lie_ab[gamma] + lie_ba[gamma] + d_pi

        return fn

    structure = {}
    for al in range(n):
        for be in range(al + 1, n):
            structure[(al, be)] = tuple(
                ScalarField.from_callable(c_fn(al, be, g), chart) for g in range(n)
            )
    names = tuple(f"d{name}" for name in chart.names)
    A = LieAlgebroid(P, n, names, anchor, structure, kind="cotangent")
    if validate:
        validate_algebroid(A, points, tol)
    return A


def make_tangent_algebroid(P: PoissonChart) -> LieAlgebroid:
    """Tangent algebroid TM: identity anchor, vanishing structure functions."""
    chart = P.chart
    anchor = tuple(coordinate_vector_field(chart, i) for i in range(chart.dim))
    names = tuple(f"e_{name}" for name in chart.names)
    return LieAlgebroid(P, chart.dim, names, anchor, {}, kind="tangent")


def make_lie_algebra_bundle(
    base: PoissonChart,
    structure_sources,
    frame: Optional[Sequence[str]] = None,
    validate: bool = True,
    points: Optional[Iterable] = None,
    tol: float = VALIDATION_TOL,
) -> LieAlgebroid:
    """Bundle of Lie algebras: zero anchor, x-dependent structure functions.

    ``structure_sources[al][be][ga]`` are expression strings (or ScalarFields)
    for c^ga_{al be}; pointwise Jacobi is validated at the sample points and a
    failure reports the offending point.
    """
    chart = base.chart
    r = len(structure_sources)
    fields = [
        [
            [
                s if isinstance(s, ScalarField) else ScalarField.parse(str(s), chart)
                for s in row
            ]
            for row in block
        ]
        for block in structure_sources
    ]
    if points is None:
        points = base.sample_points()
    points = list(points)
    for p in points:
        for al in range(r):
            for be in range(r):
                for g in range(r):
                    s = fields[al][be][g].value(p) + fields[be][al][g].value(p)
                    if abs(s) > 1e-12:
                        raise ValidationError(
                            f"structure functions not antisymmetric in c^{g}_{{{al},{be}}}",
                            point=p,
                            residual=s,
                        )
    structure = {
        (al, be): tuple(fields[al][be][g] for g in range(r))
        for al in range(r)
        for be in range(al + 1, r)
    }
    names = tuple(frame) if frame is not None else tuple(f"e{i+1}" for i in range(r))
    zero = VectorField.zero(chart)
    A = LieAlgebroid(base, r, names, tuple(zero for _ in range(r)), structure, kind="lie_algebra_bundle")
    if validate:
        res, worst = jacobiator_residual(A, points)
        if res > tol:
            raise ValidationError(
                "fiberwise Jacobi identity fails", point=worst, residual=res
            )
    return A


SO3_STRUCTURE = [
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
    [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
]
"""so(3) structure constants c^g_{al be} = epsilon_{al be g}."""
