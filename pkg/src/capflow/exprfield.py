"""Tiny arithmetic expression language for scalar fields on the torus.

Grammar (usual precedence, ^ binds tightest and is right associative):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'pi' | VARIABLE | FUNC '(' expr ')' | '(' expr ')'

Variables are x1..xd, functions are sin, cos, exp, log.  Compiled fields
evaluate with numpy, so they accept scalars or arrays of grid
coordinates.  Expressions can also be differentiated symbolically, which
the landscape module uses to verify drift conditions without finite
difference error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionSyntaxError, UnknownIdentifier

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log}

_NUM_RE = re.compile(r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass
class _Tok:
    kind: str        # num | ident | op | end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        m = _NUM_RE.match(text, pos)
        if m:
            toks.append(_Tok("num", m.group(0), pos))
            pos = m.end()
            continue
        m = _IDENT_RE.match(text, pos)
        if m:
            toks.append(_Tok("ident", m.group(0), pos))
            pos = m.end()
            continue
        if ch in "+-*/^()":
            toks.append(_Tok("op", ch, pos))
            pos += 1
            continue
        raise ExpressionSyntaxError(f"unexpected character {ch!r}", pos)
    toks.append(_Tok("end", "", len(text)))
    return toks


# AST nodes are small frozen tuples via dataclasses

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int       # 0-based coordinate index


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


class _Parser:
    def __init__(self, text: str, d: int):
        self.text = text
        self.d = d
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, op: str):
        t = self.next()
        if t.kind != "op" or t.text != op:
            raise ExpressionSyntaxError(
                f"found {t.text!r}" if t.kind != "end" else "unexpected end of input",
                t.pos, expected=repr(op))

    def parse(self):
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ExpressionSyntaxError(f"trailing input {t.text!r}", t.pos,
                                        expected="end of expression")
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.next()
            node = self.unary()
            return node if t.text == "+" else Neg(node)
        return self.power()

    def power(self):
        base = self.atom()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            self.next()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        t = self.next()
        if t.kind == "num":
            return Num(float(t.text))
        if t.kind == "ident":
            name = t.text
            if name == "pi":
                return Num(np.pi)
            if name in _FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(name, arg)
            m = re.fullmatch(r"x(\d+)", name)
            if m:
                k = int(m.group(1))
                if 1 <= k <= self.d:
                    return Var(k - 1)
                raise UnknownIdentifier(
                    f"variable {name!r} out of range for dimension {self.d}")
            raise UnknownIdentifier(f"unknown identifier {name!r} at position {t.pos}")
        if t.kind == "op" and t.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if t.kind == "end":
            raise ExpressionSyntaxError("unexpected end of input", t.pos,
                                        expected="number, variable or '('")
        raise ExpressionSyntaxError(f"found {t.text!r}", t.pos,
                                    expected="number, variable or '('")


def _evaluate(node, coords):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return coords[node.index]
    if isinstance(node, Neg):
        return -_evaluate(node.arg, coords)
    if isinstance(node, Call):
        return _FUNCS[node.func](_evaluate(node.arg, coords))
    a = _evaluate(node.left, coords)
    b = _evaluate(node.right, coords)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return np.power(a, b)


def _derivative(node, var: int):
    zero, one = Num(0.0), Num(1.0)
    if isinstance(node, Num):
        return zero
    if isinstance(node, Var):
        return one if node.index == var else zero
    if isinstance(node, Neg):
        return Neg(_derivative(node.arg, var))
    if isinstance(node, Call):
        du = _derivative(node.arg, var)
        if node.func == "sin":
            outer = Call("cos", node.arg)
        elif node.func == "cos":
            outer = Neg(Call("sin", node.arg))
        elif node.func == "exp":
            outer = node
        else:  # log
            return Bin("/", du, node.arg)
        return Bin("*", outer, du)
    a, b = node.left, node.right
    da, db = _derivative(a, var), _derivative(b, var)
    if node.op == "+":
        return Bin("+", da, db)
    if node.op == "-":
        return Bin("-", da, db)
    if node.op == "*":
        return Bin("+", Bin("*", da, b), Bin("*", a, db))
    if node.op == "/":
        return Bin("/", Bin("-", Bin("*", da, b), Bin("*", a, db)), Bin("*", b, b))
    # a^b: constant exponents cover every field used in practice
    if isinstance(b, Num):
        return Bin("*", Bin("*", b, Bin("^", a, Num(b.value - 1.0))), da)
    # general case via a^b = exp(b log a)
    inner = Bin("+", Bin("*", db, Call("log", a)), Bin("*", b, Bin("/", da, a)))
    return Bin("*", node, inner)


def _simplify(node):
    """Constant folding; keeps derivative trees small."""
    if isinstance(node, (Num, Var)):
        return node
    if isinstance(node, Neg):
        a = _simplify(node.arg)
        if isinstance(a, Num):
            return Num(-a.value)
        return Neg(a)
    if isinstance(node, Call):
        a = _simplify(node.arg)
        if isinstance(a, Num):
            return Num(float(_FUNCS[node.func](a.value)))
        return Call(node.func, a)
    a = _simplify(node.left)
    b = _simplify(node.right)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(float(_evaluate(Bin(node.op, a, b), ())))
    if node.op == "*":
        if (isinstance(a, Num) and a.value == 0.0) or (isinstance(b, Num) and b.value == 0.0):
            return Num(0.0)
        if isinstance(a, Num) and a.value == 1.0:
            return b
        if isinstance(b, Num) and b.value == 1.0:
            return a
    if node.op == "+":
        if isinstance(a, Num) and a.value == 0.0:
            return b
        if isinstance(b, Num) and b.value == 0.0:
            return a
    if node.op == "-" and isinstance(b, Num) and b.value == 0.0:
        return a
    return Bin(node.op, a, b)


class ScalarField:
    """A parsed scalar field: callable on d coordinate arrays."""

    def __init__(self, ast, d: int, expression: str | None = None):
        self.ast = ast
        self.d = d
        self.expression = expression

    def __call__(self, *coords):
        if len(coords) != self.d:
            raise ValueError(f"field of dimension {self.d} called with {len(coords)} coords")
        return _evaluate(self.ast, [np.asarray(c, dtype=float) for c in coords])

    def derivative(self, var: int) -> "ScalarField":
        return ScalarField(_simplify(_derivative(self.ast, var)), self.d)

    def gradient(self) -> list["ScalarField"]:
        return [self.derivative(k) for k in range(self.d)]


def parse_scalar_field(expr: str, d: int) -> ScalarField:
    """Parse an expression over x1..xd into an evaluable field."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    ast = _Parser(expr, d).parse()
    return ScalarField(ast, d, expression=expr)
