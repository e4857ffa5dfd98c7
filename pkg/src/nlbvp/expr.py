"""Single-variable arithmetic expressions for the coefficient a(t) and nonlinearity f(u).

Grammar (whitespace ignored, no implicit multiplication)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

NAME is the declared variable, one of the constants ``e``/``pi``, or a
function name from ``FUNCTIONS``.  A fraction such as ``5/32`` is ordinary
division.  ASTs are immutable; evaluation works on scalars and on numpy
arrays with identical semantics.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = ("exp", "log", "sqrt", "abs", "sin", "cos")
CONSTANTS = {"e": math.e, "pi": math.pi}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name: str, position: int, source: str = ""):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", position, source)


class ExprEvalError(ExprError):
    """Raised when evaluation leaves the real domain or overflows."""

    def __init__(self, message: str, value: float | None = None):
        self.value = value
        if value is not None:
            message = f"{message} (at {value!r})"
        super().__init__(message)


class DomainError(ExprEvalError):
    pass


class NonFiniteError(ExprEvalError):
    pass


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]


@dataclass(frozen=True)
class Expr:
    """A parsed expression together with its source text and variable name."""

    root: Node
    variable: str
    source: str = ""

    def __call__(self, value):
        return evaluate(self, value)

    def __str__(self) -> str:
        return self.source or to_source(self.root)


# -- lexer / parser ----------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, variable: str):
        self.source = source
        self.variable = variable
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        kind, text, pos = self.peek()
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"expected {expected}, found {found}", pos, self.source)

    def expect_op(self, op: str):
        kind, text, _ = self.peek()
        if kind != "op" or text != op:
            self.fail(repr(op))
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "num":
            self.advance()
            value = float(text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"numeric literal {text!r} overflows", pos, self.source)
            return Num(value)
        if kind == "name":
            self.advance()
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text == self.variable:
                return Var(text)
            if text in CONSTANTS:
                return Const(text)
            raise UnknownIdentifierError(text, pos, self.source)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail("number, name or '('")


def parse(source: str, variable_name: str) -> Expr:
    """Parse ``source`` as an expression in the single variable ``variable_name``."""
    if variable_name in FUNCTIONS or variable_name in CONSTANTS:
        raise ValueError(f"variable name {variable_name!r} collides with a builtin")
    root = _Parser(source, variable_name).parse()
    return Expr(root, variable_name, source.strip())


# -- printing ----------------------------------------------------------------


def to_source(node: Node) -> str:
    """Fully parenthesized text that reparses to a structurally equal tree."""
    if isinstance(node, Expr):
        node = node.root
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# -- evaluation --------------------------------------------------------------


def _first_bad(mask, x):
    mask = np.asarray(mask)
    shape = np.broadcast_shapes(mask.shape, np.shape(x))
    xs = np.broadcast_to(x, shape)
    return float(xs[np.broadcast_to(mask, shape)][0]) if shape else float(xs)


def _check(result, x, what):
    bad = ~np.isfinite(result)
    if np.any(bad):
        raise NonFiniteError(f"non-finite result in {what}", _first_bad(bad, x))
    return result


def _eval(node: Node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, Call):
        arg = _eval(node.arg, x)
        name = node.func
        if name == "sqrt":
            bad = np.asarray(arg) < 0
            if np.any(bad):
                raise DomainError("sqrt of negative number", _first_bad(bad, x))
            return np.sqrt(arg)
        if name == "log":
            bad = np.asarray(arg) <= 0
            if np.any(bad):
                raise DomainError("log of nonpositive number", _first_bad(bad, x))
            return np.log(arg)
        if name == "exp":
            return _check(np.exp(arg), x, "exp")
        return {"abs": np.abs, "sin": np.sin, "cos": np.cos}[name](arg)

    left = _eval(node.left, x)
    right = _eval(node.right, x)
    op = node.op
    if op == "+":
        return _check(np.add(left, right), x, "+")
    if op == "-":
        return _check(np.subtract(left, right), x, "-")
    if op == "*":
        return _check(np.multiply(left, right), x, "*")
    if op == "/":
        return _check(np.divide(left, right), x, "/")
    # op == "^"
    base = np.asarray(left, dtype=float)
    expo = np.asarray(right, dtype=float)
    zero_neg = (base == 0) & (expo < 0)
    if np.any(zero_neg):
        raise DomainError("zero raised to a negative power", _first_bad(zero_neg, x))
    frac_neg = (base < 0) & (np.floor(expo) != expo)
    if np.any(frac_neg):
        raise DomainError("negative base with non-integer exponent", _first_bad(frac_neg, x))
    return _check(np.power(base, expo), x, "^")


def evaluate(expr: Expr | Node, value):
    """Evaluate at a scalar (returns float) or an array (returns ndarray).

    Raises DomainError or NonFiniteError instead of returning nan/inf.
    """
    root = expr.root if isinstance(expr, Expr) else expr
    x = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("non-finite input", _first_bad(~np.isfinite(x), x))
    with np.errstate(all="ignore"):
        out = _eval(root, x)
        out = _check(np.asarray(out, dtype=float), x, "result")
    if out.shape != x.shape:
        out = np.full(x.shape, out)
    if out.ndim == 0:
        return float(out)
    return out


def scaled(expr: Expr, factor: float) -> Expr:
    """Return the expression ``factor * (expr)``."""
    root = BinOp("*", Num(float(factor)), expr.root)
    return Expr(root, expr.variable, to_source(root))
