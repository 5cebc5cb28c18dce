"""Closed-form scalar expressions over chart coordinates.

A tiny language for tensor components: coordinates ``x0 .. x(n-1)``, declared
parameter symbols, the four arithmetic operators, ``^`` with a constant
rational exponent, unary minus, and ``sin cos tan exp log sqrt``.  Expressions
are parsed into an immutable tree that can be evaluated, printed back to
source, and differentiated symbolically.

Precedence, loosest to tightest::

    + -        (binary, left associative)
    * /        (binary, left associative)
    -          (unary)
    ^          (left associative, constant exponent)
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Sequence, Union

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


class ExpressionError(ValueError):
    """Base class for every error raised by this module."""


class ParseError(ExpressionError):
    def __init__(self, message: str, source: str = "", position: int = -1):
        self.source = source
        self.position = position
        if position >= 0:
            message = f"{message} at position {position}"
            if source:
                message += f"\n  {source}\n  {' ' * position}^"
        super().__init__(message)


class DomainError(ExpressionError, ArithmeticError):
    """Evaluation left the domain of a function, e.g. ``log`` of a non-positive value."""

    def __init__(self, message: str, subexpression: "Node"):
        self.subexpression = subexpression
        super().__init__(f"{message} in `{to_source(subexpression)}`")


# --------------------------------------------------------------------------
# tree nodes

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Coord:
    index: int


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Div:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: Fraction


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Coord, Param, Add, Sub, Mul, Div, Neg, Pow, Call]

ZERO = Const(0.0)
ONE = Const(1.0)


# --------------------------------------------------------------------------
# simplifying constructors, used by differentiation and by tensor code that
# assembles expressions symbolically

def _is_const(node: Node, value: float | None = None) -> bool:
    return isinstance(node, Const) and (value is None or node.value == value)


def add(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(b, Neg):
        return Sub(a, b.operand)
    return Add(a, b)


def sub(a: Node, b: Node) -> Node:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if isinstance(b, Neg):
        return Add(a, b.operand)
    return Sub(a, b)


def mul(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    return Mul(a, b)


def div(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(base: Node, exponent: Fraction | int) -> Node:
    exponent = Fraction(exponent)
    if exponent == 1:
        return base
    if exponent == 0:
        return ONE
    return Pow(base, exponent)


def call(func: str, arg: Node) -> Node:
    if func not in FUNCTIONS:
        raise ExpressionError(f"unknown function {func!r}")
    return Call(func, arg)


# --------------------------------------------------------------------------
# evaluation

def _eval(node: Node, point: Sequence[float], params: Mapping[str, float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Coord):
        return float(point[node.index])
    if isinstance(node, Param):
        try:
            return float(params[node.name])
        except KeyError:
            raise ExpressionError(f"parameter {node.name!r} is unbound") from None
    if isinstance(node, Add):
        return _eval(node.left, point, params) + _eval(node.right, point, params)
    if isinstance(node, Sub):
        return _eval(node.left, point, params) - _eval(node.right, point, params)
    if isinstance(node, Mul):
        return _eval(node.left, point, params) * _eval(node.right, point, params)
    if isinstance(node, Div):
        num = _eval(node.left, point, params)
        den = _eval(node.right, point, params)
        if den == 0.0:
            raise DomainError("division by zero", node)
        return num / den
    if isinstance(node, Neg):
        return -_eval(node.operand, point, params)
    if isinstance(node, Pow):
        base = _eval(node.base, point, params)
        q = node.exponent
        if q.denominator == 1:
            if base == 0.0 and q < 0:
                raise DomainError("division by zero", node)
            try:
                return base ** int(q)
            except OverflowError:
                raise DomainError("overflow", node) from None
        if base < 0.0:
            raise DomainError("fractional power of a negative value", node)
        if base == 0.0 and q < 0:
            raise DomainError("division by zero", node)
        return base ** float(q)
    if isinstance(node, Call):
        x = _eval(node.arg, point, params)
        f = node.func
        if f == "sin":
            return math.sin(x)
        if f == "cos":
            return math.cos(x)
        if f == "tan":
            return math.tan(x)
        if f == "exp":
            try:
                return math.exp(x)
            except OverflowError:
                raise DomainError("overflow", node) from None
        if f == "log":
            if x <= 0.0:
                raise DomainError("log of a non-positive value", node)
            return math.log(x)
        if f == "sqrt":
            if x < 0.0:
                raise DomainError("sqrt of a negative value", node)
            return math.sqrt(x)
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# differentiation

def _diff(node: Node, i: int) -> Node:
    if isinstance(node, (Const, Param)):
        return ZERO
    if isinstance(node, Coord):
        return ONE if node.index == i else ZERO
    if isinstance(node, Add):
        return add(_diff(node.left, i), _diff(node.right, i))
    if isinstance(node, Sub):
        return sub(_diff(node.left, i), _diff(node.right, i))
    if isinstance(node, Mul):
        a, b = node.left, node.right
        return add(mul(_diff(a, i), b), mul(a, _diff(b, i)))
    if isinstance(node, Div):
        a, b = node.left, node.right
        da, db = _diff(a, i), _diff(b, i)
        if _is_const(db, 0.0):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if isinstance(node, Neg):
        return neg(_diff(node.operand, i))
    if isinstance(node, Pow):
        q = node.exponent
        inner = mul(Const(float(q)), power(node.base, q - 1))
        return mul(inner, _diff(node.base, i))
    if isinstance(node, Call):
        a = node.arg
        da = _diff(a, i)
        if _is_const(da, 0.0):
            return ZERO
        f = node.func
        if f == "sin":
            return mul(Call("cos", a), da)
        if f == "cos":
            return mul(neg(Call("sin", a)), da)
        if f == "tan":
            return div(da, power(Call("cos", a), 2))
        if f == "exp":
            return mul(node, da)
        if f == "log":
            return div(da, a)
        if f == "sqrt":
            return div(da, mul(Const(2.0), node))
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _fmt_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _fmt_exponent(q: Fraction) -> str:
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    return f"({q})"


def _prec(node: Node) -> int:
    if isinstance(node, Const) and (node.value < 0 or math.copysign(1.0, node.value) < 0):
        return 3
    return _PREC.get(type(node), 5)


def _wrap(node: Node, min_prec: int) -> str:
    text = to_source(node)
    return f"({text})" if _prec(node) < min_prec else text


def to_source(node: Node) -> str:
    """Print ``node`` in the input syntax; parsing the result gives back the same tree."""
    if isinstance(node, Const):
        if node.value < 0 or math.copysign(1.0, node.value) < 0:
            return "-" + _fmt_number(-node.value)
        return _fmt_number(node.value)
    if isinstance(node, Coord):
        return f"x{node.index}"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, (Add, Sub, Mul, Div)):
        p = _PREC[type(node)]
        op = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}[type(node)]
        # right operand of equal precedence is bracketed to keep the tree shape
        return _wrap(node.left, p) + op + _wrap(node.right, p + 1)
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, 3)
    if isinstance(node, Pow):
        return _wrap(node.base, 5) + "^" + _fmt_exponent(node.exponent)
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)
_COORD = re.compile(r"x(\d+)")


@dataclass
class _Token:
    kind: str  # "number" | "ident" | "op" | "end"
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            start = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ParseError(f"unexpected character {source[start]!r}", source, start)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, dimension: int, parameters: Mapping[str, float]):
        self.source = source
        self.dimension = dimension
        self.parameters = parameters
        self.tokens = _tokenize(source)
        self.k = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.k]

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, self.source, tok.pos)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.k += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Node:
        node = self.sum()
        if self.tok.kind != "end":
            raise self.error(f"expected operator or end of input, found {self.tok.text!r}")
        return node

    def sum(self) -> Node:
        node = self.product()
        while True:
            if self.accept("+"):
                node = Add(node, self.product())
            elif self.accept("-"):
                node = Sub(node, self.product())
            else:
                return node

    def product(self) -> Node:
        node = self.unary()
        while True:
            if self.accept("*"):
                node = Mul(node, self.unary())
            elif self.accept("/"):
                node = Div(node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Node:
        node = self.primary()
        while self.accept("^"):
            node = Pow(node, self.exponent())
        return node

    def exponent(self) -> Fraction:
        # NUMBER | "-" NUMBER | "(" ["-"] NUMBER ["/" NUMBER] ")"
        if self.accept("("):
            sign = -1 if self.accept("-") else 1
            q = self.number_fraction()
            if self.accept("/"):
                den = self.number_fraction()
                if den == 0:
                    raise self.error("zero denominator in exponent")
                q = q / den
            self.expect(")")
            return sign * q
        sign = -1 if self.accept("-") else 1
        return sign * self.number_fraction()

    def number_fraction(self) -> Fraction:
        tok = self.tok
        if tok.kind != "number":
            raise self.error("expected a constant exponent (integer or rational)")
        self.k += 1
        return Fraction(tok.text)

    def primary(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.k += 1
            return Const(float(tok.text))
        if tok.kind == "ident":
            self.k += 1
            name = tok.text
            if name in FUNCTIONS:
                if not (self.tok.kind == "op" and self.tok.text == "("):
                    raise self.error(f"expected '(' after function {name!r}")
                self.k += 1
                arg = self.sum()
                self.expect(")")
                return Call(name, arg)
            m = _COORD.fullmatch(name)
            if m:
                index = int(m.group(1))
                if index >= self.dimension:
                    raise ParseError(
                        f"coordinate index out of range: {name} in dimension {self.dimension}",
                        self.source, tok.pos)
                return Coord(index)
            if name in self.parameters:
                return Param(name)
            raise ParseError(f"unknown identifier {name!r}", self.source, tok.pos)
        if self.accept("("):
            node = self.sum()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise self.error(f"expected number, identifier or '(', found {found!r}")


# --------------------------------------------------------------------------
# public wrapper

@dataclass(frozen=True)
class ScalarExpression:
    """An immutable expression tree bound to a chart dimension and parameter values."""

    ast: Node
    dimension: int
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise ExpressionError("dimension must be positive")
        object.__setattr__(self, "parameters", MappingProxyType(dict(self.parameters)))
        bad = [i for i in _coordinates(self.ast) if i >= self.dimension]
        if bad:
            raise ExpressionError(f"coordinate index {max(bad)} out of range for dimension {self.dimension}")

    def __hash__(self):
        return hash((self.ast, self.dimension, tuple(sorted(self.parameters.items()))))

    def __eq__(self, other):
        if not isinstance(other, ScalarExpression):
            return NotImplemented
        return (self.ast == other.ast and self.dimension == other.dimension
                and dict(self.parameters) == dict(other.parameters))

    def __str__(self) -> str:
        return to_source(self.ast)

    def evaluate(self, point: Sequence[float]) -> float:
        if len(point) != self.dimension:
            raise ExpressionError(f"point has length {len(point)}, expected {self.dimension}")
        return _eval(self.ast, point, self.parameters)

    def differentiate(self, i: int) -> "ScalarExpression":
        if not 0 <= i < self.dimension:
            raise ExpressionError(f"coordinate index {i} out of range for dimension {self.dimension}")
        return ScalarExpression(_diff(self.ast, i), self.dimension, self.parameters)

    def bind(self, **values: float) -> "ScalarExpression":
        return ScalarExpression(self.ast, self.dimension, {**self.parameters, **values})

    @property
    def is_constant(self) -> bool:
        return isinstance(self.ast, Const)


def _coordinates(node: Node):
    if isinstance(node, Coord):
        yield node.index
    elif isinstance(node, (Add, Sub, Mul, Div)):
        yield from _coordinates(node.left)
        yield from _coordinates(node.right)
    elif isinstance(node, Neg):
        yield from _coordinates(node.operand)
    elif isinstance(node, Pow):
        yield from _coordinates(node.base)
    elif isinstance(node, Call):
        yield from _coordinates(node.arg)


def parse_expression(source: str, dimension: int,
                     parameters: Mapping[str, float] | None = None) -> ScalarExpression:
    """Parse ``source`` into an expression on an ``dimension``-dimensional chart.

    Identifiers other than ``x<k>`` and the known function names must appear in
    ``parameters``.
    """
    if not isinstance(source, str) or not source.strip():
        raise ParseError("empty expression")
    if dimension < 1:
        raise ExpressionError("dimension must be positive")
    parameters = dict(parameters or {})
    ast = _Parser(source, dimension, parameters).parse()
    return ScalarExpression(ast, dimension, parameters)


def evaluate(e: ScalarExpression, point: Sequence[float]) -> float:
    return e.evaluate(point)


def differentiate(e: ScalarExpression, i: int) -> ScalarExpression:
    return e.differentiate(i)


def constant(value: float, dimension: int) -> ScalarExpression:
    return ScalarExpression(Const(float(value)), dimension)
