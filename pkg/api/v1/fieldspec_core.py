"""
Expression language for periodic coordinate functions on the torus

Pure Python/numpy logic with no Flask or database dependencies.
Parses the arithmetic grammar used by system files, prints expressions back
to canonical text, and evaluates value/gradient/Hessian jets on point arrays.

Grammar (x1..xn are 1-based coordinates, sinp(u) = sin(2*pi*u)):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' ['-'] int)?
    atom   := number | 'x' int | 'pi' | func '(' expr ')' | '(' expr ')'
    func   := sin | cos | exp | sinp | cosp
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

TWO_PI = 2.0 * math.pi
FUNCTIONS = ("sin", "cos", "exp", "sinp", "cosp")


class ExpressionError(ValueError):
    """Syntax or semantic error inside an expression, with a 1-based position."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class EvaluationError(ZeroDivisionError):
    """Division by zero (or a zero base under a negative power) at an evaluation point."""


# ---------------------- AST ----------------------
@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based coordinate index


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    argument: "Expression"


Expression = Union[Num, Var, Const, Neg, BinOp, Pow, Call]

CONSTANTS = {"pi": math.pi}


# ---------------------- Tokenizer ----------------------
class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<ws>[ \t\r]+)"
    r"|(?P<nl>\n)"
)


def tokenize(source):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        column = pos - line_start + 1
        if m is None:
            raise ExpressionError(f"unexpected character {source[pos]!r}", line, column)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, column))
        pos = m.end()
    tokens.append(Token("end", "", line, pos - line_start + 1))
    return tokens


# ---------------------- Parser ----------------------
class _Parser:
    def __init__(self, source, dim):
        self.tokens = tokenize(source)
        self.pos = 0
        self.dim = dim

    @property
    def current(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.current
        if tok.kind == "end":
            message = f"{message}, got end of input"
        else:
            message = f"{message}, got {tok.text!r}"
        raise ExpressionError(message, tok.line, tok.column)

    def expect(self, text):
        if self.current.text != text or self.current.kind == "end":
            self.fail(f"expected {text!r}")
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.current.kind != "end":
            self.fail("unexpected token")
        return node

    def expr(self):
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            sign = 1
            if self.current.kind == "op" and self.current.text == "-":
                self.advance()
                sign = -1
            tok = self.current
            if tok.kind != "num" or not tok.text.isdigit():
                self.fail("expected integer exponent")
            self.advance()
            return Pow(base, sign * int(tok.text))
        return base

    def atom(self):
        tok = self.current
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            if name in CONSTANTS:
                return Const(name)
            m = re.fullmatch(r"x(\d+)", name)
            if m:
                index = int(m.group(1))
                if index < 1 or (self.dim is not None and index > self.dim):
                    raise ExpressionError(
                        f"coordinate {name} out of range", tok.line, tok.column
                    )
                return Var(index - 1)
            raise ExpressionError(f"unknown identifier {name!r}", tok.line, tok.column)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected number, coordinate, function or '('")


def parse(source, dim=None):
    """Parse an expression. When dim is given, coordinates above xdim are rejected."""
    return _Parser(source, dim).parse()


# ---------------------- Printer ----------------------
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _precedence(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 3
    return 4


def to_text(node):
    """Canonical text; parse(to_text(e)) == e for every parsed e."""
    if isinstance(node, Num):
        if node.value < 0:
            return f"(-{abs(node.value)!r})"
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.argument)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if _precedence(node.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if _precedence(node.base) < 4:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    prec = _PREC[node.op]
    left = to_text(node.left)
    if _precedence(node.left) < prec:
        left = f"({left})"
    right = to_text(node.right)
    if _precedence(node.right) <= prec:
        right = f"({right})"
    return f"{left}{node.op}{right}"


def variables(node):
    """Set of 0-based coordinate indices an expression reads."""
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, (Num, Const)):
        return set()
    if isinstance(node, (Neg, Call)):
        return variables(node.operand if isinstance(node, Neg) else node.argument)
    if isinstance(node, Pow):
        return variables(node.base)
    return variables(node.left) | variables(node.right)


# ---------------------- Jets ----------------------
class JetValue(NamedTuple):
    value: float
    grad: np.ndarray
    hess: np.ndarray


@dataclass
class Jet:
    """Truncated Taylor data of a function at P points in R^n.

    value has shape (P,), grad (P, n), hess (P, n, n) or None for order 1.
    """

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray | None

    @classmethod
    def constant(cls, c, count, dim, order):
        hess = np.zeros((count, dim, dim)) if order >= 2 else None
        return cls(np.full(count, float(c)), np.zeros((count, dim)), hess)

    @classmethod
    def coordinate(cls, index, points, order):
        count, dim = points.shape
        grad = np.zeros((count, dim))
        grad[:, index] = 1.0
        hess = np.zeros((count, dim, dim)) if order >= 2 else None
        return cls(points[:, index].astype(float), grad, hess)

    def __add__(self, other):
        hess = None if self.hess is None else self.hess + other.hess
        return Jet(self.value + other.value, self.grad + other.grad, hess)

    def __sub__(self, other):
        hess = None if self.hess is None else self.hess - other.hess
        return Jet(self.value - other.value, self.grad - other.grad, hess)

    def __neg__(self):
        hess = None if self.hess is None else -self.hess
        return Jet(-self.value, -self.grad, hess)

    def __mul__(self, other):
        a, b = self.value, other.value
        grad = self.grad * b[:, None] + other.grad * a[:, None]
        hess = None
        if self.hess is not None:
            cross = np.einsum("pi,pj->pij", self.grad, other.grad)
            hess = (
                self.hess * b[:, None, None]
                + other.hess * a[:, None, None]
                + cross
                + cross.transpose(0, 2, 1)
            )
        return Jet(a * b, grad, hess)

    def __truediv__(self, other):
        u = other.value
        return self * other.compose(1.0 / u, -1.0 / u**2, 2.0 / u**3)

    def compose(self, f0, f1, f2):
        """Chain rule for phi(self) given phi, phi', phi'' evaluated at self.value."""
        grad = f1[:, None] * self.grad
        hess = None
        if self.hess is not None:
            hess = f1[:, None, None] * self.hess + f2[:, None, None] * np.einsum(
                "pi,pj->pij", self.grad, self.grad
            )
        return Jet(f0, grad, hess)

    def power(self, k):
        order = 1 if self.hess is None else 2
        if k == 0:
            return Jet.constant(1.0, len(self.value), self.grad.shape[1], order)
        if k == 1:
            return self
        u = self.value
        with np.errstate(divide="ignore", invalid="ignore"):
            f0 = u**k
            f1 = k * u ** (k - 1)
            f2 = k * (k - 1) * u ** (k - 2)
        return self.compose(f0, f1, f2)


def _unary(name, u):
    v = u.value
    if name == "sin":
        return u.compose(np.sin(v), np.cos(v), -np.sin(v))
    if name == "cos":
        return u.compose(np.cos(v), -np.sin(v), -np.cos(v))
    if name == "exp":
        e = np.exp(v)
        return u.compose(e, e, e)
    if name == "sinp":
        s, c = np.sin(TWO_PI * v), np.cos(TWO_PI * v)
        return u.compose(s, TWO_PI * c, -(TWO_PI**2) * s)
    if name == "cosp":
        s, c = np.sin(TWO_PI * v), np.cos(TWO_PI * v)
        return u.compose(c, -TWO_PI * s, -(TWO_PI**2) * c)
    raise ValueError(f"unknown function {name}")


def jets(node, points, order=2):
    """Evaluate an expression jet at every row of points (shape (P, n))."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    count, dim = points.shape
    return _jets(node, points, count, dim, order)


def _jets(node, points, count, dim, order):
    if isinstance(node, Num):
        return Jet.constant(node.value, count, dim, order)
    if isinstance(node, Const):
        return Jet.constant(CONSTANTS[node.name], count, dim, order)
    if isinstance(node, Var):
        if node.index >= dim:
            raise ValueError(f"coordinate x{node.index + 1} used in dimension {dim}")
        return Jet.coordinate(node.index, points, order)
    if isinstance(node, Neg):
        return -_jets(node.operand, points, count, dim, order)
    if isinstance(node, Pow):
        return _jets(node.base, points, count, dim, order).power(node.exponent)
    if isinstance(node, Call):
        return _unary(node.name, _jets(node.argument, points, count, dim, order))
    left = _jets(node.left, points, count, dim, order)
    right = _jets(node.right, points, count, dim, order)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    with np.errstate(divide="ignore", invalid="ignore"):
        return left / right


def evaluate(node, points):
    """Values only, shape (P,)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return _values(node, points)


def _values(node, points):
    if isinstance(node, Num):
        return np.full(len(points), node.value)
    if isinstance(node, Const):
        return np.full(len(points), CONSTANTS[node.name])
    if isinstance(node, Var):
        return points[:, node.index].astype(float)
    if isinstance(node, Neg):
        return -_values(node.operand, points)
    if isinstance(node, Pow):
        with np.errstate(divide="ignore"):
            return _values(node.base, points) ** node.exponent
    if isinstance(node, Call):
        v = _values(node.argument, points)
        return {
            "sin": np.sin,
            "cos": np.cos,
            "exp": np.exp,
            "sinp": lambda u: np.sin(TWO_PI * u),
            "cosp": lambda u: np.cos(TWO_PI * u),
        }[node.name](v)
    a, b = _values(node.left, points), _values(node.right, points)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    with np.errstate(divide="ignore", invalid="ignore"):
        return a / b


def eval_jet(node, point):
    """Value, gradient and Hessian at a single point."""
    point = np.asarray(point, dtype=float)[None, :]
    if min_divisor(node, point) == 0.0:
        raise EvaluationError(f"division by zero in {to_text(node)} at {point[0].tolist()}")
    jet = jets(node, point, order=2)
    return JetValue(float(jet.value[0]), jet.grad[0], jet.hess[0])


def min_divisor(node, points):
    """Smallest |denominator| (or |base| of a negative power) over the points.

    Returns inf when the expression divides by nothing.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(node, (Num, Const, Var)):
        return math.inf
    if isinstance(node, Neg):
        return min_divisor(node.operand, points)
    if isinstance(node, Call):
        return min_divisor(node.argument, points)
    if isinstance(node, Pow):
        inner = min_divisor(node.base, points)
        if node.exponent < 0:
            inner = min(inner, float(np.min(np.abs(_values(node.base, points)))))
        return inner
    best = min(min_divisor(node.left, points), min_divisor(node.right, points))
    if node.op == "/":
        best = min(best, float(np.min(np.abs(_values(node.right, points)))))
    return best


def sample_grid(dim, samples):
    """Tensor grid of samples^dim points covering [0,1)^dim."""
    axis = np.arange(samples) / samples
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def periodicity_defect(node, dim, samples=17):
    """max |f(p) - f(p + e_i)| over a samples^dim grid and all unit shifts."""
    points = sample_grid(dim, samples) + 0.5 / samples
    base = _values(node, points)
    worst = 0.0
    for i in range(dim):
        shifted = points.copy()
        shifted[:, i] += 1.0
        worst = max(worst, float(np.max(np.abs(_values(node, shifted) - base))))
    return worst
