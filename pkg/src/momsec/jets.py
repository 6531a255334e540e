"""Truncated multivariate Taylor jets.

A jet of order ``k`` at a base point carries the value of a function together
with all partial derivatives of total order <= k.  Arithmetic is exact
truncated-Taylor arithmetic: for polynomial inputs of degree <= k the stored
coefficients equal the analytic partial derivatives up to floating-point
roundoff.  Derivatives are never approximated by finite differences.

Internally coefficients are stored Taylor-normalized (partial derivative
divided by the factorial of the multi-index), which turns multiplication into
a truncated convolution over multi-indices.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EvaluationDomainError,
    InsufficientJetOrderError,
    JetMismatchError,
)

MAX_ORDER = 4


def _multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices of total degree <= order, graded lexicographic."""
    out = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            idx = [0] * dim
            for i in combo:
                idx[i] += 1
            out.append(tuple(idx))
    # combinations_with_replacement already yields each degree once, but the
    # per-degree order depends on dim; sort for a stable canonical layout.
    return sorted(set(out), key=lambda t: (sum(t), t))


@lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> "JetSpace":
    return JetSpace(dim, order)


class JetSpace:
    """Shared layout and multiplication table for jets of fixed (dim, order)."""

    def __init__(self, dim: int, order: int):
        if dim < 1:
            raise ValueError("jet dimension must be >= 1")
        if order < 0 or order > MAX_ORDER:
            raise ValueError(f"jet order must be in [0, {MAX_ORDER}], got {order}")
        self.dim = dim
        self.order = order
        self.indices = _multi_indices(dim, order)
        self.size = len(self.indices)
        self.position = {idx: i for i, idx in enumerate(self.indices)}
        self._degrees = np.array([sum(idx) for idx in self.indices])
        self._factorials = np.array(
            [math.prod(math.factorial(e) for e in idx) for idx in self.indices],
            dtype=float,
        )
        self._mul_table = None
        self._deriv_tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- lazily built tables ------------------------------------------------

    @property
    def mul_table(self):
        if self._mul_table is None:
            ia, ib, ic = [], [], []
            for pa, a in enumerate(self.indices):
                da = sum(a)
                for pb, b in enumerate(self.indices):
                    if da + sum(b) > self.order:
                        continue
                    ia.append(pa)
                    ib.append(pb)
                    ic.append(self.position[tuple(x + y for x, y in zip(a, b))])
            self._mul_table = (
                np.array(ia, dtype=np.intp),
                np.array(ib, dtype=np.intp),
                np.array(ic, dtype=np.intp),
            )
        return self._mul_table

    def deriv_table(self, i: int):
        """(source positions, factors) mapping coefficients of f to d_i f."""
        if i not in self._deriv_tables:
            lower = jet_space(self.dim, self.order - 1)
            src = np.empty(lower.size, dtype=np.intp)
            fac = np.empty(lower.size, dtype=float)
            for pos, idx in enumerate(lower.indices):
                shifted = list(idx)
                shifted[i] += 1
                src[pos] = self.position[tuple(shifted)]
                fac[pos] = shifted[i]
            self._deriv_tables[i] = (src, fac)
        return self._deriv_tables[i]

    def __repr__(self):
        return f"JetSpace(dim={self.dim}, order={self.order})"


def _coerce(other, space: JetSpace):
    if isinstance(other, Jet):
        if other.space is not space:
            raise JetMismatchError(
                f"jet spaces differ: {other.space} vs {space}"
            )
        return other
    if isinstance(other, (int, float, np.integer, np.floating)):
        return Jet.constant(space, float(other))
    return NotImplemented


class Jet:
    """Value plus partial derivatives up to a fixed order at one point."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, space: JetSpace, value: float) -> "Jet":
        c = np.zeros(space.size)
        c[0] = value
        return cls(space, c)

    @classmethod
    def variable(cls, space: JetSpace, i: int, value: float) -> "Jet":
        if space.order < 1:
            raise InsufficientJetOrderError("variable jets need order >= 1")
        c = np.zeros(space.size)
        c[0] = value
        unit = tuple(1 if j == i else 0 for j in range(space.dim))
        c[space.position[unit]] = 1.0
        return cls(space, c)

    @classmethod
    def variables(cls, point: Sequence[float], order: int) -> list["Jet"]:
        space = jet_space(len(point), order)
        return [cls.variable(space, i, float(x)) for i, x in enumerate(point)]

    # -- accessors ------------------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def dim(self) -> int:
        return self.space.dim

    def partial(self, *vars: int) -> float:
        """Raw partial derivative d_{i1} d_{i2} ... f, any index order."""
        idx = [0] * self.space.dim
        for v in vars:
            idx[v] += 1
        return self.partial_multi(tuple(idx))

    def partial_multi(self, idx: tuple[int, ...]) -> float:
        pos = self.space.position.get(tuple(idx))
        if pos is None:
            raise InsufficientJetOrderError(
                f"partial {idx} exceeds jet order {self.space.order}"
            )
        return float(self.coeffs[pos] * self.space._factorials[pos])

    def gradient(self) -> np.ndarray:
        return np.array([self.partial(i) for i in range(self.space.dim)])

    def deriv(self, i: int) -> "Jet":
        """The jet of d_i f, one order lower."""
        if self.space.order == 0:
            raise InsufficientJetOrderError(
                "cannot differentiate an order-0 jet; raise the jet order"
            )
        src, fac = self.space.deriv_table(i)
        lower = jet_space(self.space.dim, self.space.order - 1)
        return Jet(lower, self.coeffs[src] * fac)

    def truncate(self, order: int) -> "Jet":
        if order == self.space.order:
            return self
        if order > self.space.order:
            raise InsufficientJetOrderError(
                f"cannot extend order {self.space.order} jet to {order}"
            )
        lower = jet_space(self.space.dim, order)
        return Jet(lower, self.coeffs[: lower.size].copy())

    def lift(self, space: JetSpace) -> "Jet":
        """Embed into a space with more variables (this jet's variables first)."""
        if space.order != self.space.order or space.dim < self.space.dim:
            raise JetMismatchError(f"cannot lift {self.space} into {space}")
        pad = space.dim - self.space.dim
        c = np.zeros(space.size)
        for pos, idx in enumerate(self.space.indices):
            c[space.position[idx + (0,) * pad]] = self.coeffs[pos]
        return Jet(space, c)

    # -- arithmetic -------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def __add__(self, other):
        other = _coerce(other, self.space)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        return Jet(self.space, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other, self.space)
        if other is NotImplemented:
            return NotImplemented
        return Jet(self.space, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = _coerce(other, self.space)
        if other is NotImplemented:
            return NotImplemented
        return Jet(self.space, other.coeffs - self.coeffs)

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Jet(self.space, self.coeffs * float(other))
        other = _coerce(other, self.space)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero():
            return self
        if other.is_zero():
            return other
        ia, ib, ic = self.space.mul_table
        prod = self.coeffs[ia] * other.coeffs[ib]
        return Jet(self.space, np.bincount(ic, weights=prod, minlength=self.space.size))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            if other == 0:
                raise EvaluationDomainError("division by zero")
            return Jet(self.space, self.coeffs / float(other))
        other = _coerce(other, self.space)
        if other is NotImplemented:
            return NotImplemented
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        rec = self.reciprocal()
        if isinstance(other, (int, float, np.integer, np.floating)):
            return rec * float(other)
        return _coerce(other, self.space) * rec

    def reciprocal(self) -> "Jet":
        if self.value == 0.0:
            raise EvaluationDomainError("division by a jet with zero value")
        return compose_elementary(self, "_recip")

    def pow_int(self, n: int) -> "Jet":
        if n < 0:
            return self.reciprocal().pow_int(-n)
        result = Jet.constant(self.space, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)):
            return self.pow_int(int(n))
        return NotImplemented

    def __repr__(self):
        return f"Jet(dim={self.space.dim}, order={self.space.order}, value={self.value})"


# -- elementary functions ---------------------------------------------------


def _derivs_exp(u0, k):
    e = math.exp(u0)
    return [e] * (k + 1)


def _derivs_sin(u0, k):
    cyc = [math.sin(u0), math.cos(u0), -math.sin(u0), -math.cos(u0)]
    return [cyc[m % 4] for m in range(k + 1)]


def _derivs_cos(u0, k):
    cyc = [math.cos(u0), -math.sin(u0), -math.cos(u0), math.sin(u0)]
    return [cyc[m % 4] for m in range(k + 1)]


def _derivs_log(u0, k):
    if u0 <= 0.0:
        raise EvaluationDomainError(f"log of non-positive value {u0}")
    out = [math.log(u0)]
    for m in range(1, k + 1):
        out.append((-1.0) ** (m - 1) * math.factorial(m - 1) / u0**m)
    return out


def _derivs_sqrt(u0, k):
    if u0 <= 0.0:
        raise EvaluationDomainError(f"sqrt of non-positive value {u0}")
    out = [math.sqrt(u0)]
    coeff = 1.0
    for m in range(1, k + 1):
        coeff *= 0.5 - (m - 1)
        out.append(coeff * u0 ** (0.5 - m))
    return out


def _derivs_tanh(u0, k):
    t = math.tanh(u0)
    d = [t, 1.0 - t * t]
    # d tanh = 1 - tanh^2; further orders by differentiating that identity.
    if k >= 2:
        d.append(-2.0 * t * d[1])
    if k >= 3:
        d.append(-2.0 * (d[1] * d[1] + t * d[2]))
    if k >= 4:
        d.append(-2.0 * (3.0 * d[1] * d[2] + t * d[3]))
    return d[: k + 1]


def _derivs_recip(u0, k):
    if u0 == 0.0:
        raise EvaluationDomainError("division by a jet with zero value")
    out = []
    for m in range(k + 1):
        out.append((-1.0) ** m * math.factorial(m) / u0 ** (m + 1))
    return out


_ELEMENTARY = {
    "exp": _derivs_exp,
    "sin": _derivs_sin,
    "cos": _derivs_cos,
    "log": _derivs_log,
    "sqrt": _derivs_sqrt,
    "tanh": _derivs_tanh,
    "_recip": _derivs_recip,
}

ELEMENTARY_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")


def compose_elementary(u: Jet, name: str) -> Jet:
    """f(u) for an elementary f, by truncated Taylor composition.

    With w = u - u(0) (no constant term), f(u) = sum_m f^(m)(u0)/m! * w^m,
    exact at the jet's order because w^m vanishes below total degree m.
    """
    rule = _ELEMENTARY.get(name)
    if rule is None:
        raise ValueError(f"unknown elementary function {name!r}")
    k = u.space.order
    derivs = rule(u.value, k)
    w = Jet(u.space, u.coeffs.copy())
    w.coeffs[0] = 0.0
    result = Jet.constant(u.space, derivs[0])
    wpow = None
    for m in range(1, k + 1):
        wpow = w if wpow is None else wpow * w
        result = result + wpow * (derivs[m] / math.factorial(m))
    return result


# -- jet-valued linear algebra helpers ---------------------------------------


def invert_jet_matrix(mat: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Inverse of a square jet-valued matrix by Newton iteration.

    Starting from the float inverse of the value part, each iteration
    X <- X(2I - MX) doubles the Taylor order to which X inverts M, so
    ceil(log2(order+1)) iterations are exact at the jet order.
    """
    n = len(mat)
    space = mat[0][0].space
    values = np.array([[mat[i][j].value for j in range(n)] for i in range(n)])
    try:
        inv0 = np.linalg.inv(values)
    except np.linalg.LinAlgError as exc:
        raise EvaluationDomainError(f"singular matrix: {exc}") from exc
    X = [[Jet.constant(space, inv0[i][j]) for j in range(n)] for i in range(n)]
    iterations = max(1, math.ceil(math.log2(space.order + 1)))
    for _ in range(iterations):
        # R = 2I - M X
        MX = [
            [sum((mat[i][k] * X[k][j] for k in range(n)), Jet.constant(space, 0.0)) for j in range(n)]
            for i in range(n)
        ]
        R = [
            [
                (Jet.constant(space, 2.0) if i == j else Jet.constant(space, 0.0)) - MX[i][j]
                for j in range(n)
            ]
            for i in range(n)
        ]
        X = [
            [sum((X[i][k] * R[k][j] for k in range(n)), Jet.constant(space, 0.0)) for j in range(n)]
            for i in range(n)
        ]
    return X
