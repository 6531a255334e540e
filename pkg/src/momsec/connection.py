"""Linear connections on algebroid bundles and their derived operators.

One representation serves A-connections for every algebroid: coefficients
Gamma^gamma_{i beta} with D_{d_i} e_beta = Gamma^gamma_{i beta} e_gamma.
Connections on TM and T*M are the rank-n special cases with the coordinate
frame respectively coframe; dual connections are derived views computed on
the fly, never stored, so the pairing Leibniz rule cannot drift.

The covariant derivative induced on bivectors by a TM connection is
(D_v P)^{jk} = v^i (d_i P^{jk} + G^j_{il} P^{lk} + G^k_{il} P^{jl}).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .algebroid import LieAlgebroid, SectionA, SectionAStar, algebroid_bracket, anchor_apply
from .errors import ChartMismatchError
from .fields import (
    BivectorField,
    Chart,
    OneForm,
    PoissonChart,
    ScalarField,
    VectorField,
    lie_bracket_jets,
    lie_derivative_oneform_jets,
    pi_sharp_jets,
    zero_field,
)
from .jets import Jet, jet_space


@dataclass
class Connection:
    """Coefficients Gamma^gamma_{i beta}: D_{d_i} e_beta = Gamma^gamma_{i beta} e_gamma."""

    chart: Chart
    rank: int
    coeffs: tuple  # coeffs[gamma][i][beta] -> ScalarField

    def __post_init__(self):
        if len(self.coeffs) != self.rank:
            raise ChartMismatchError("coefficient table has wrong gamma extent")
        for block in self.coeffs:
            if len(block) != self.chart.dim:
                raise ChartMismatchError("coefficient table has wrong i extent")
            for row in block:
                if len(row) != self.rank:
                    raise ChartMismatchError("coefficient table has wrong beta extent")

    @classmethod
    def parse(cls, sources, chart: Chart, rank: int) -> "Connection":
        coeffs = tuple(
            tuple(tuple(ScalarField.parse(str(s), chart) for s in row) for row in block)
            for block in sources
        )
        return cls(chart, rank, coeffs)

    @classmethod
    def trivial(cls, chart: Chart, rank: int) -> "Connection":
        z = zero_field(chart)
        coeffs = tuple(
            tuple(tuple(z for _ in range(rank)) for _ in range(chart.dim))
            for _ in range(rank)
        )
        return cls(chart, rank, coeffs)

    @classmethod
    def from_callables(cls, fns, chart: Chart, rank: int) -> "Connection":
        coeffs = tuple(
            tuple(
                tuple(ScalarField.from_callable(fns(g, i, b), chart) for b in range(rank))
                for i in range(chart.dim)
            )
            for g in range(rank)
        )
        return cls(chart, rank, coeffs)

    def gamma_jets(self, p, order: int):
        """G[gamma][i][beta] jets."""
        return [
            [[f.jet(p, order) for f in row] for row in block] for block in self.coeffs
        ]

    def is_square(self) -> bool:
        return self.rank == self.chart.dim

    def dual(self) -> "Connection":
        """The dual connection (on A*), same representation.

        Defined by the pairing Leibniz rule, which in coefficients is
        Gamma*^gamma_{i beta} = -Gamma^beta_{i gamma}; self-inverse.
        """
        coeffs = tuple(
            tuple(
                tuple(-self.coeffs[b][i][g] for b in range(self.rank))
                for i in range(self.chart.dim)
            )
            for g in range(self.rank)
        )
        return Connection(self.chart, self.rank, coeffs)


def _zero(space):
    return Jet.constant(space, 0.0)


def _check_tm(D: Connection):
    if not D.is_square():
        raise ChartMismatchError(
            f"need a rank-{D.chart.dim} (tangent/cotangent) connection, got rank {D.rank}"
        )


# -- covariant derivatives ---------------------------------------------------


def cov_deriv_section_jets(Gj, dir_jets: Sequence[Jet], a_jets: Sequence[Jet]) -> list[Jet]:
    """(D_v a)^g = v^i (d_i a^g + G^g_{i b} a^b); a_jets one order above output."""
    n = len(dir_jets)
    r = len(a_jets)
    order = dir_jets[0].order
    space = dir_jets[0].space
    lo = lambda j: j.truncate(order)
    out = []
    for g in range(r):
        acc = _zero(space)
        for i in range(n):
            term = a_jets[g].deriv(i)
            for b in range(r):
                term = term + Gj[g][i][b] * lo(a_jets[b])
            acc = acc + dir_jets[i] * term
        out.append(acc)
    return out


def cov_deriv_dual_jets(Gj, dir_jets: Sequence[Jet], mu_jets: Sequence[Jet]) -> list[Jet]:
    """(D_v mu)_b = v^i (d_i mu_b - G^g_{i b} mu_g)."""
    n = len(dir_jets)
    r = len(mu_jets)
    order = dir_jets[0].order
    space = dir_jets[0].space
    lo = lambda j: j.truncate(order)
    out = []
    for b in range(r):
        acc = _zero(space)
        for i in range(n):
            term = mu_jets[b].deriv(i)
            for g in range(r):
                term = term - Gj[g][i][b] * lo(mu_jets[g])
            acc = acc + dir_jets[i] * term
        out.append(acc)
    return out


def cov_deriv_A(D: Connection, v: VectorField, a: SectionA, p, order: int = 0) -> list[Jet]:
    """(D_v a)^g = v^i (d_i a^g + G^g_{i b} a^b)."""
    Gj = D.gamma_jets(p, order)
    return cov_deriv_section_jets(Gj, v.jets(p, order), a.jets(p, order + 1))


def cov_deriv_Astar(D: Connection, v: VectorField, mu: SectionAStar, p, order: int = 0) -> list[Jet]:
    """Dual covariant derivative: v.<mu,a> = <D_v mu, a> + <mu, D_v a>."""
    Gj = D.gamma_jets(p, order)
    return cov_deriv_dual_jets(Gj, v.jets(p, order), mu.jets(p, order + 1))


def dmu_pairing_jets(D: Connection, mu: SectionAStar, a: SectionA, p, order: int = 0) -> list[Jet]:
    """The one-form <D mu, a>: component i is <D_{d_i} mu, a>."""
    n = D.chart.dim
    space = jet_space(n, order)
    Gj = D.gamma_jets(p, order)
    muj = mu.jets(p, order + 1)
    aj = a.jets(p, order)
    lo = lambda j: j.truncate(order)
    out = []
    for i in range(n):
        acc = _zero(space)
        for b in range(D.rank):
            term = muj[b].deriv(i)
            for g in range(D.rank):
                term = term - Gj[g][i][b] * lo(muj[g])
            acc = acc + term * aj[b]
        out.append(acc)
    return out


def cov_deriv_bivector(D: Connection, v_jets: Sequence[Jet], P: BivectorField, p, order: int = 0):
    """Tensor derivative of a bivector under a TM connection (see module doc)."""
    _check_tm(D)
    n = D.chart.dim
    Gj = D.gamma_jets(p, order)
    Pj = P.matrix_jets(p, order + 1)
    space = jet_space(n, order)
    lo = lambda jj: jj.truncate(order)
    out = [[_zero(space) for _ in range(n)] for _ in range(n)]
    for j in range(n):
        for k in range(j + 1, n):
            acc = _zero(space)
            for i in range(n):
                term = Pj[j][k].deriv(i)
                for l in range(n):
                    term = term + Gj[j][i][l] * lo(Pj[l][k]) + Gj[k][i][l] * lo(Pj[j][l])
                acc = acc + v_jets[i] * term
            out[j][k] = acc
            out[k][j] = -acc
    return out


# -- opposite connections -----------------------------------------------------


def opposite_TM(A: LieAlgebroid, D: Connection, a: SectionA, v: VectorField, p, order: int = 0) -> list[Jet]:
    """Dcheck_a v = [rho a, v] + rho(D_v a)."""
    rho_a = _anchor_jets_of_section(A, a, p, order + 1)
    vj = v.jets(p, order + 1)
    bracket = lie_bracket_jets(rho_a, vj)
    Gj = D.gamma_jets(p, order)
    Dva = cov_deriv_section_jets(Gj, [j.truncate(order) for j in vj], a.jets(p, order + 1))
    rho = A.anchor_jets(p, order)
    out = []
    for i in range(A.dim):
        acc = bracket[i]
        for g in range(A.rank):
            acc = acc + rho[g][i] * Dva[g]
        out.append(acc)
    return out


def _anchor_jets_of_section(A: LieAlgebroid, a: SectionA, p, order: int) -> list[Jet]:
    aj = a.jets(p, order)
    rho = A.anchor_jets(p, order)
    out = []
    for i in range(A.dim):
        acc = _zero(aj[0].space)
        for g in range(A.rank):
            acc = acc + aj[g] * rho[g][i]
        out.append(acc)
    return out


def opposite_TM_coordinate_frame(A: LieAlgebroid, D: Connection, a: SectionA, p, order: int = 0):
    """Matrix W[k][j] = (Dcheck_a d_k)^j for the coordinate frame d_k."""
    n = A.dim
    rho_a = _anchor_jets_of_section(A, a, p, order + 1)
    Gj = D.gamma_jets(p, order)
    aj = a.jets(p, order + 1)
    rho = A.anchor_jets(p, order)
    lo = lambda j: j.truncate(order)
    space = jet_space(n, order)
    out = []
    for k in range(n):
        row = []
        # [rho a, d_k]^j = -d_k (rho a)^j
        for j in range(n):
            acc = -rho_a[j].deriv(k)
            # rho(D_{d_k} a)^j with (D_{d_k} a)^g = d_k a^g + G^g_{k b} a^b
            for g in range(A.rank):
                term = aj[g].deriv(k)
                for b in range(A.rank):
                    term = term + Gj[g][k][b] * lo(aj[b])
                acc = acc + rho[g][j] * term
            row.append(acc)
        out.append(row)
    return out


def opposite_TstarM(A: LieAlgebroid, D: Connection, a: SectionA, beta: OneForm, p, order: int = 0) -> list[Jet]:
    """The one-form Dcheck_a beta defined by the pairing rule
    rho a . <beta, v> = <Dcheck_a beta, v> + <beta, Dcheck_a v>."""
    n = A.dim
    W = opposite_TM_coordinate_frame(A, D, a, p, order)
    rho_a = _anchor_jets_of_section(A, a, p, order)
    bj = beta.jets(p, order + 1)
    lo = lambda j: j.truncate(order)
    out = []
    for k in range(n):
        acc = _zero(jet_space(n, order))
        for l in range(n):
            acc = acc + rho_a[l] * bj[k].deriv(l)
        for j in range(n):
            acc = acc - lo(bj[j]) * W[k][j]
        out.append(acc)
    return out


def dcheck_bivector(A: LieAlgebroid, D: Connection, a: SectionA, P: BivectorField, p, order: int = 0):
    """(Dcheck_a P)^{ij} on the coordinate coframe.

    (Dcheck_a P)(al, be) = rho a . P(al,be) - P(Dcheck_a al, be) - P(al, Dcheck_a be),
    with <Dcheck_a dx^i, d_k> = -(Dcheck_a d_k)^i for the constant coframe.
    """
    n = A.dim
    W = opposite_TM_coordinate_frame(A, D, a, p, order)
    rho_a = _anchor_jets_of_section(A, a, p, order + 1)
    Pj = P.matrix_jets(p, order + 1)
    lo = lambda j: j.truncate(order)
    space = jet_space(n, order)
    out = [[_zero(space) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            acc = _zero(space)
            for l in range(n):
                acc = acc + lo(rho_a[l]) * Pj[i][j].deriv(l)
                acc = acc + W[l][i] * lo(Pj[l][j]) + lo(Pj[i][l]) * W[l][j]
            out[i][j] = acc
            out[j][i] = -acc
    return out


def dcheck_twoform(A: LieAlgebroid, D: Connection, a: SectionA, omega_jets, p, order: int = 0):
    """(Dcheck_a w)_{ij} for a 2-form given as component jets (order+1)."""
    n = A.dim
    W = opposite_TM_coordinate_frame(A, D, a, p, order)
    rho_a = _anchor_jets_of_section(A, a, p, order)
    lo = lambda j: j.truncate(order)
    space = jet_space(n, order)
    out = [[_zero(space) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            acc = _zero(space)
            for l in range(n):
                acc = acc + rho_a[l] * omega_jets[i][j].deriv(l)
                acc = acc - W[i][l] * lo(omega_jets[l][j]) - lo(omega_jets[i][l]) * W[j][l]
            out[i][j] = acc
            out[j][i] = -acc
    return out


# -- torsions and curvature ----------------------------------------------------


def torsion_A(A: LieAlgebroid, D: Connection, a: SectionA, b: SectionA, p, order: int = 0) -> list[Jet]:
    """T_A(a,b) = D_{rho a} b - D_{rho b} a - [a,b]."""
    Gj = D.gamma_jets(p, order)
    rho_a = _anchor_jets_of_section(A, a, p, order)
    rho_b = _anchor_jets_of_section(A, b, p, order)
    t1 = cov_deriv_section_jets(Gj, rho_a, b.jets(p, order + 1))
    t2 = cov_deriv_section_jets(Gj, rho_b, a.jets(p, order + 1))
    br = algebroid_bracket(A, a, b, p, order)
    return [x - y - z for x, y, z in zip(t1, t2, br)]


def torsion_A_section(A: LieAlgebroid, D: Connection, a: SectionA, b: SectionA) -> SectionA:
    """T_A(a,b) packaged as a section, for covariant differentiation."""

    def comp(g: int) -> Callable:
        def fn(p, order: int) -> Jet:
            return torsion_A(A, D, a, b, p, order)[g]

        return fn

    return SectionA([ScalarField.from_callable(comp(g), A.chart) for g in range(A.rank)])


def torsion_TM(D: Connection, v: VectorField, w: VectorField, p, order: int = 0) -> list[Jet]:
    """T_TM(v,w) = D_v w - D_w v - [v,w] for a TM connection."""
    _check_tm(D)
    Gj = D.gamma_jets(p, order)
    vj = v.jets(p, order + 1)
    wj = w.jets(p, order + 1)
    lo = lambda j: j.truncate(order)
    t1 = cov_deriv_section_jets(Gj, [lo(j) for j in vj], wj)
    t2 = cov_deriv_section_jets(Gj, [lo(j) for j in wj], vj)
    br = lie_bracket_jets(vj, wj)
    return [x - y - z for x, y, z in zip(t1, t2, br)]


def torsion_TM_coordinate_jets(D: Connection, p, order: int = 0):
    """T[i][j][k] = coefficient of d_k in T_TM(d_i, d_j) = G^k_{ij} - G^k_{ji}."""
    _check_tm(D)
    Gj = D.gamma_jets(p, order)
    n = D.chart.dim
    return [
        [[Gj[k][i][j] - Gj[k][j][i] for k in range(n)] for j in range(n)]
        for i in range(n)
    ]


def cotangent_bracket_jets(P: PoissonChart, alpha_jets, beta_jets, p, order: int = 0) -> list[Jet]:
    """[al, be] = -L_{Pi# al} be + L_{Pi# be} al + d Pi(al, be), as jets.

    alpha_jets and beta_jets must be component jets of order ``order + 1``.
    """
    n = P.chart.dim
    Pj = P.pi.matrix_jets(p, order + 1)
    sharp_a = pi_sharp_jets(Pj, alpha_jets)
    sharp_b = pi_sharp_jets(Pj, beta_jets)
    t1 = lie_derivative_oneform_jets(sharp_a, beta_jets)
    t2 = lie_derivative_oneform_jets(sharp_b, alpha_jets)
    pairing = _zero(alpha_jets[0].space)
    for i in range(n):
        for j in range(n):
            pairing = pairing + alpha_jets[i] * Pj[i][j] * beta_jets[j]
    return [-t1[k] + t2[k] + pairing.deriv(k) for k in range(n)]


def torsion_TstarM(P: PoissonChart, D: Connection, alpha: OneForm, beta: OneForm, p, order: int = 0) -> list[Jet]:
    """T_{T*M}(al,be) = -D_{Pi# al} be + D_{Pi# be} al - [al,be], cotangent bracket."""
    _check_tm(D)
    n = P.chart.dim
    aj = alpha.jets(p, order + 1)
    bj = beta.jets(p, order + 1)
    Pj = P.pi.matrix_jets(p, order)
    lo = lambda j: j.truncate(order)
    sharp_a = pi_sharp_jets(Pj, [lo(j) for j in aj])
    sharp_b = pi_sharp_jets(Pj, [lo(j) for j in bj])
    Gj = D.gamma_jets(p, order)
    # 1-forms are sections of the bundle D lives on (A = T*M)
    t1 = cov_deriv_section_jets(Gj, sharp_a, bj)
    t2 = cov_deriv_section_jets(Gj, sharp_b, aj)
    br = cotangent_bracket_jets(P, aj, bj, p, order)
    return [-x + y - z for x, y, z in zip(t1, t2, br)]


def curvature(D: Connection, v: VectorField, w: VectorField, a: SectionA, p, order: int = 0) -> list[Jet]:
    """R(v,w)a = D_v D_w a - D_w D_v a - D_{[v,w]} a, from Gamma and dGamma.

    Requires one derivative of the coefficients; with too low a jet order the
    engine raises InsufficientJetOrderError rather than differencing.
    """
    n, r = D.chart.dim, D.rank
    Gj = D.gamma_jets(p, order + 1)
    vj = v.jets(p, order)
    wj = w.jets(p, order)
    aj = a.jets(p, order)
    space = jet_space(n, order)
    lo = lambda j: j.truncate(order)
    out = []
    for g in range(r):
        acc = _zero(space)
        for i in range(n):
            for j in range(n):
                for b in range(r):
                    term = Gj[g][j][b].deriv(i) - Gj[g][i][b].deriv(j)
                    for d in range(r):
                        term = term + lo(Gj[g][i][d]) * lo(Gj[d][j][b]) - lo(Gj[g][j][d]) * lo(Gj[d][i][b])
                    acc = acc + vj[i] * wj[j] * term * aj[b]
        out.append(acc)
    return out


def cov_deriv_section_field(D: Connection, v: VectorField, a: SectionA) -> SectionA:
    """D_v a packaged as a section, for use inside tensor derivatives."""

    def comp(g: int) -> Callable:
        def fn(p, order: int) -> Jet:
            return cov_deriv_A(D, v, a, p, order)[g]

        return fn

    return SectionA([ScalarField.from_callable(comp(g), a.chart) for g in range(D.rank)])


def cov_deriv_A_torsion(
    A: LieAlgebroid, D: Connection, v: VectorField, a: SectionA, b: SectionA, p, order: int = 0
) -> list[Jet]:
    """(D_v T_A)(a,b) = D_v(T_A(a,b)) - T_A(D_v a, b) - T_A(a, D_v b)."""
    T_ab = torsion_A_section(A, D, a, b)
    Gj = D.gamma_jets(p, order)
    term1 = cov_deriv_section_jets(Gj, v.jets(p, order), T_ab.jets(p, order + 1))
    term2 = torsion_A(A, D, cov_deriv_section_field(D, v, a), b, p, order)
    term3 = torsion_A(A, D, a, cov_deriv_section_field(D, v, b), p, order)
    return [t1 - t2 - t3 for t1, t2, t3 in zip(term1, term2, term3)]
