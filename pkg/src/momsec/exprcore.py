"""Symbolic expressions over named coordinates, evaluated as Taylor jets.

Grammar (operator precedence, loosest to tightest):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative, integer exponent
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` parses as ``-(x^2)`` and
``x^2^3`` as ``x^(2^3)``.  Exponents must fold to integers at evaluation time.
The language is total on its grammar; log, sqrt and division fail at
evaluation time, not parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import EvaluationDomainError, ExprSyntaxError, UnknownIdentifierError
from .jets import ELEMENTARY_FUNCTIONS, Jet, compose_elementary, jet_space

# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Func:
    name: str  # one of ELEMENTARY_FUNCTIONS
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Func]

# -- tokenizer ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            at = len(source) - len(stripped)
            raise ExprSyntaxError(
                f"unexpected character {stripped[0]!r}", at, source
            )
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


# -- parser -----------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, coords: Sequence[str]):
        self.source = source
        self.coords = set(coords)
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", pos, self.source)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", pos, self.source)
        return e

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            nkind, ntext, _ = self.peek()
            if nkind == "op" and ntext == "(":
                if text not in ELEMENTARY_FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {text!r}", pos, self.source)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Func(text, arg)
            if text in ELEMENTARY_FUNCTIONS:
                raise ExprSyntaxError(
                    f"function {text!r} must be called with parentheses", pos, self.source
                )
            if text not in self.coords:
                raise UnknownIdentifierError(text, pos, self.source)
            return Var(text)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos, self.source)
        raise ExprSyntaxError(f"unexpected token {text!r}", pos, self.source)


def parse_expr(source: str, coords: Sequence[str]) -> Expr:
    """Parse ``source`` over the given coordinate names.

    Raises ExprSyntaxError with a position for malformed input and
    UnknownIdentifierError for identifiers not in ``coords``.
    """
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0, source if isinstance(source, str) else "")
    return _Parser(source, coords).parse()


# -- printer ------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e: Expr) -> int:
    if isinstance(e, (Num, Var, Func)):
        return _PREC["atom"]
    if isinstance(e, Neg):
        return _PREC["neg"]
    return _PREC[e.op]


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_source(e: Expr) -> str:
    """Canonical text form; parse(to_source(parse(s))) == parse(s)."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_source(e.arg)})"
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        if _prec(e.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    left, right = to_source(e.left), to_source(e.right)
    p = _PREC[e.op]
    if e.op == "^":
        # right-associative; numbers and atoms never need parens on the left
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < p:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    # +,-,*,/ are left-associative: a right child of equal precedence keeps
    # its parens so the reparse reproduces the tree shape
    if _prec(e.right) <= p:
        right = f"({right})"
    if e.op in "+-":
        return f"{left} {e.op} {right}"
    return f"{left}{e.op}{right}"


# -- evaluation ------------------------------------------------------------------------


def _const_value(e: Expr) -> float:
    """Fold a coordinate-free expression to a number (for ^ exponents)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        return -_const_value(e.arg)
    if isinstance(e, BinOp):
        l, r = _const_value(e.left), _const_value(e.right)
        if e.op == "+":
            return l + r
        if e.op == "-":
            return l - r
        if e.op == "*":
            return l * r
        if e.op == "/":
            if r == 0:
                raise EvaluationDomainError("division by zero in constant exponent")
            return l / r
        return l**r
    raise EvaluationDomainError(
        "exponent of ^ must be a constant integer expression"
    )


def eval_expr_jet(e: Expr, var_jets: Sequence[Jet], names: Sequence[str], point=None) -> Jet:
    """Evaluate an expression to a jet, given jets for each coordinate."""
    space = var_jets[0].space
    index = {n: i for i, n in enumerate(names)}

    def rec(node: Expr) -> Jet:
        if isinstance(node, Num):
            return Jet.constant(space, node.value)
        if isinstance(node, Var):
            return var_jets[index[node.name]]
        if isinstance(node, Neg):
            return -rec(node.arg)
        if isinstance(node, Func):
            try:
                return compose_elementary(rec(node.arg), node.name)
            except EvaluationDomainError as exc:
                raise EvaluationDomainError(str(exc.args[0]), point) from exc
        l = rec(node.left)
        if node.op == "^":
            exponent = _const_value(node.right)
            n = round(exponent)
            if abs(exponent - n) > 1e-12:
                raise EvaluationDomainError(
                    f"non-integer exponent {exponent} in ^", point
                )
            try:
                return l.pow_int(int(n))
            except EvaluationDomainError as exc:
                raise EvaluationDomainError(str(exc.args[0]), point) from exc
        r = rec(node.right)
        if node.op == "+":
            return l + r
        if node.op == "-":
            return l - r
        if node.op == "*":
            return l * r
        try:
            return l / r
        except EvaluationDomainError as exc:
            raise EvaluationDomainError(str(exc.args[0]), point) from exc

    return rec(e)


def jet_eval(e: Expr, names: Sequence[str], point: Sequence[float], order: int) -> Jet:
    """Degree-``order`` Taylor jet of the expression at ``point``."""
    if len(point) != len(names):
        raise ExprSyntaxError(
            f"point dimension {len(point)} does not match chart dimension {len(names)}"
        )
    if order < 0:
        raise ValueError("jet order must be >= 0")
    if order == 0:
        # order-0 jets carry just the value; evaluate in an order-1 space and
        # truncate so elementary composition stays uniform
        return jet_eval(e, names, point, 1).truncate(0)
    var_jets = Jet.variables([float(x) for x in point], order)
    return eval_expr_jet(e, var_jets, names, tuple(point))


# -- programmatic construction helpers -------------------------------------------------


def const(v: float) -> Expr:
    return Num(float(v))


def var(name: str) -> Expr:
    return Var(name)


def add(*terms: Expr) -> Expr:
    terms = [t for t in terms if not (isinstance(t, Num) and t.value == 0.0)]
    if not terms:
        return Num(0.0)
    node = terms[0]
    for t in terms[1:]:
        node = BinOp("+", node, t)
    return node


def mul(*factors: Expr) -> Expr:
    for f in factors:
        if isinstance(f, Num) and f.value == 0.0:
            return Num(0.0)
    factors = [f for f in factors if not (isinstance(f, Num) and f.value == 1.0)]
    if not factors:
        return Num(1.0)
    node = factors[0]
    for f in factors[1:]:
        node = BinOp("*", node, f)
    return node


def neg(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(-e.value)
    return Neg(e)
