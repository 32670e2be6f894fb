"""
 Copyright 2026 Google LLC

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.

 Expression maps: a small arithmetic grammar, its syntax tree, and evaluation of
 the tree over floats, numpy arrays and dual numbers.

 Grammar:
   expr   := term (('+'|'-') term)*
   term   := factor (('*'|'/') factor)*
   factor := unary ('^' factor)?
   unary  := ('-')? atom
   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
 """

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import singledispatch
from typing import Any, Callable, Iterable, Mapping, Union

import numpy as np

from homcell.errors import (
    ExpressionSyntaxError,
    MapDomainError,
    UnknownFunctionError,
    UnknownIdentifierError,
)

VARIABLES = ("x", "y")
FUNCTIONS = ("sin", "cos", "exp", "sqrt", "neg")


class Dual(object):
    """Forward-mode dual number a + b*eps with eps^2 = 0.

    Both parts may be floats or numpy arrays of the same shape.
    """

    __slots__ = ("real", "dual")
    # Makes numpy scalars defer to the reflected Dual operators.
    __array_ufunc__ = None

    def __init__(self, real, dual=0.0):
        self.real = real
        self.dual = dual

    @staticmethod
    def lift(other) -> "Dual":
        if isinstance(other, Dual):
            return other
        return Dual(other, 0.0)

    def __add__(self, other):
        other = Dual.lift(other)
        return Dual(self.real + other.real, self.dual + other.dual)

    __radd__ = __add__

    def __sub__(self, other):
        other = Dual.lift(other)
        return Dual(self.real - other.real, self.dual - other.dual)

    def __rsub__(self, other):
        return Dual.lift(other) - self

    def __mul__(self, other):
        other = Dual.lift(other)
        return Dual(
            self.real * other.real, self.real * other.dual + self.dual * other.real
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Dual.lift(other)
        return Dual(
            self.real / other.real,
            (self.dual * other.real - self.real * other.dual) / (other.real**2),
        )

    def __rtruediv__(self, other):
        return Dual.lift(other) / self

    def __neg__(self):
        return Dual(-self.real, -self.dual)

    def int_pow(self, k: int) -> "Dual":
        if k == 0:
            return Dual(np.ones_like(self.real, dtype=float), 0.0 * self.dual)
        return Dual(self.real**k, k * self.real ** (k - 1) * self.dual)

    def sin(self):
        return Dual(np.sin(self.real), self.dual * np.cos(self.real))

    def cos(self):
        return Dual(np.cos(self.real), -self.dual * np.sin(self.real))

    def exp(self):
        e = np.exp(self.real)
        return Dual(e, e * self.dual)

    def log(self):
        return Dual(np.log(self.real), self.dual / self.real)

    def sqrt(self):
        s = np.sqrt(self.real)
        return Dual(s, 0.5 * self.dual / s)

    def __repr__(self):
        return f"Dual({self.real}, {self.dual})"


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "ExpressionAst"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "ExpressionAst"


@dataclass(frozen=True)
class Add:
    left: "ExpressionAst"
    right: "ExpressionAst"


@dataclass(frozen=True)
class Sub:
    left: "ExpressionAst"
    right: "ExpressionAst"


@dataclass(frozen=True)
class Mul:
    left: "ExpressionAst"
    right: "ExpressionAst"


@dataclass(frozen=True)
class Div:
    left: "ExpressionAst"
    right: "ExpressionAst"


@dataclass(frozen=True)
class Pow:
    left: "ExpressionAst"
    right: "ExpressionAst"


ExpressionAst = Union[Num, Var, Param, Neg, Call, Add, Sub, Mul, Div, Pow]

_BINARY_SYMBOLS = {Add: "+", Sub: "-", Mul: "*", Div: "/", Pow: "^"}
_PRECEDENCE = {Add: 1, Sub: 1, Mul: 2, Div: 2, Pow: 3}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[^\W\d]\w*)"
    r"|(?P<op>[-+*/^()]))",
    re.UNICODE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(source, pos)
        if not match:
            raise ExpressionSyntaxError(
                f"unexpected character {source[pos:].lstrip()[:1]!r}",
                _byte_offset(source, len(source) - len(source[pos:].lstrip())),
                frozenset({"number", "identifier", "operator"}),
            )
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(_Token(kind, match.group(kind), _byte_offset(source, start)))
        pos = match.end()
    tokens.append(_Token("end", "", _byte_offset(source, len(source))))
    return tokens


class _Parser(object):
    """Recursive descent parser following the grammar in the module docstring."""

    def __init__(self, source: str, params: frozenset[str]):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.params = params

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def at_op(self, *ops: str) -> bool:
        token = self.peek()
        return token.kind == "op" and token.text in ops

    def expect_op(self, op: str, expected: frozenset[str]) -> None:
        if not self.at_op(op):
            self.fail(expected)
        self.advance()

    def fail(self, expected: frozenset[str]):
        token = self.peek()
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ExpressionSyntaxError(f"unexpected {found}", token.offset, expected)

    def parse(self) -> ExpressionAst:
        node = self.expr()
        if self.peek().kind != "end":
            self.fail(frozenset({"+", "-", "*", "/", "^", "end of input"}))
        return node

    def expr(self) -> ExpressionAst:
        node = self.term()
        while self.at_op("+", "-"):
            op = self.advance().text
            right = self.term()
            node = Add(node, right) if op == "+" else Sub(node, right)
        return node

    def term(self) -> ExpressionAst:
        node = self.factor()
        while self.at_op("*", "/"):
            op = self.advance().text
            right = self.factor()
            node = Mul(node, right) if op == "*" else Div(node, right)
        return node

    def factor(self) -> ExpressionAst:
        node = self.unary()
        if self.at_op("^"):
            self.advance()
            return Pow(node, self.factor())
        return node

    def unary(self) -> ExpressionAst:
        if self.at_op("-"):
            self.advance()
            return Neg(self.atom())
        return self.atom()

    def atom(self) -> ExpressionAst:
        token = self.peek()
        if token.kind == "number":
            self.advance()
            return Num(float(token.text))
        if token.kind == "ident":
            self.advance()
            if self.at_op("("):
                if token.text not in FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {token.text!r} at byte offset {token.offset}; "
                        f"known functions are {list(FUNCTIONS)}",
                        offset=token.offset,
                    )
                self.advance()
                arg = self.expr()
                self.expect_op(")", frozenset({")", "+", "-", "*", "/", "^"}))
                if token.text == "neg":
                    return Neg(arg)
                return Call(token.text, arg)
            if token.text in VARIABLES:
                return Var(token.text)
            if token.text in self.params:
                return Param(token.text)
            raise UnknownIdentifierError(
                f"unknown identifier {token.text!r} at byte offset {token.offset}; "
                f"declare it as a parameter",
                offset=token.offset,
            )
        if self.at_op("("):
            self.advance()
            node = self.expr()
            self.expect_op(")", frozenset({")", "+", "-", "*", "/", "^"}))
            return node
        self.fail(frozenset({"number", "identifier", "(", "-"}))


def parse_map_expression(source: str, params: Iterable[str] = ()) -> ExpressionAst:
    """Parses one component of an expression map.

    Args:
      source: Expression text over the variables x, y and the declared parameters.
      params: Names of the parameters the expression may reference.

    Returns:
      The syntax tree of the expression.
    """
    return _Parser(source, frozenset(params)).parse()


def _needs_parens(child: ExpressionAst, parent_prec: int, right: bool) -> bool:
    prec = _PRECEDENCE.get(type(child))
    if prec is None:
        return False
    if right:
        return prec <= parent_prec if parent_prec < 3 else prec < 3
    return prec < parent_prec


def to_text(node: ExpressionAst) -> str:
    """Prints a syntax tree so that parsing the text yields the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if isinstance(node.operand, (Num, Var, Param, Call)):
            return f"-{inner}"
        return f"-({inner})"
    prec = _PRECEDENCE[type(node)]
    left = to_text(node.left)
    right = to_text(node.right)
    if isinstance(node, Pow):
        # The base of a power must be a unary expression.
        if not isinstance(node.left, (Num, Var, Param, Call, Neg)):
            left = f"({left})"
        if not isinstance(node.right, (Num, Var, Param, Call, Neg, Pow)):
            right = f"({right})"
    else:
        if _needs_parens(node.left, prec, right=False):
            left = f"({left})"
        if _needs_parens(node.right, prec, right=True):
            right = f"({right})"
    return f"{left} {_BINARY_SYMBOLS[type(node)]} {right}"


def constant_integer(node: ExpressionAst):
    """Returns the integer value of a constant integer node, else None."""
    if isinstance(node, Num) and float(node.value).is_integer():
        return int(node.value)
    if isinstance(node, Neg):
        inner = constant_integer(node.operand)
        return None if inner is None else -inner
    return None


def _real(v):
    return v.real if isinstance(v, Dual) else v


def _apply(name: str, v):
    if name == "sqrt":
        r = _real(v)
        if np.any(np.asarray(r) < 0):
            raise MapDomainError("sqrt of a negative number")
        if isinstance(v, Dual) and np.any(np.asarray(r) == 0):
            raise MapDomainError("sqrt is not differentiable at 0")
    if isinstance(v, Dual):
        return getattr(v, name)()
    return getattr(np, name)(v)


def _divide(a, b):
    if np.any(np.asarray(_real(b)) == 0):
        raise MapDomainError("division by zero")
    return a / b


def _power(base, exponent_node: ExpressionAst, exponent):
    k = constant_integer(exponent_node)
    r = np.asarray(_real(base))
    if k is not None:
        if k <= 0 and np.any(r == 0):
            raise MapDomainError("0 raised to a nonpositive power")
        if isinstance(base, Dual):
            return base.int_pow(k)
        return base**k if k >= 0 else 1.0 / base ** (-k)
    if np.any(r <= 0):
        raise MapDomainError("non-integer power of a nonpositive base")
    if isinstance(base, Dual) or isinstance(exponent, Dual):
        return (Dual.lift(exponent) * Dual.lift(base).log()).exp()
    return np.exp(exponent * np.log(base))


Evaluator = Callable[[Any, Any], Any]


@singledispatch
def _compile(node, params: Mapping[str, float]) -> Evaluator:
    raise TypeError(f"not an expression node: {node!r}")


@_compile.register(Num)
def _(node, params):
    value = float(node.value)
    return lambda x, y: value


@_compile.register(Var)
def _(node, params):
    if node.name == "x":
        return lambda x, y: x
    return lambda x, y: y


@_compile.register(Param)
def _(node, params):
    if node.name not in params:
        raise UnknownIdentifierError(f"parameter {node.name!r} has no value")
    value = float(params[node.name])
    return lambda x, y: value


@_compile.register(Neg)
def _(node, params):
    inner = _compile(node.operand, params)
    return lambda x, y: -inner(x, y)


@_compile.register(Call)
def _(node, params):
    inner = _compile(node.arg, params)
    func = node.func
    return lambda x, y: _apply(func, inner(x, y))


@_compile.register(Add)
def _(node, params):
    a, b = _compile(node.left, params), _compile(node.right, params)
    return lambda x, y: a(x, y) + b(x, y)


@_compile.register(Sub)
def _(node, params):
    a, b = _compile(node.left, params), _compile(node.right, params)
    return lambda x, y: a(x, y) - b(x, y)


@_compile.register(Mul)
def _(node, params):
    a, b = _compile(node.left, params), _compile(node.right, params)
    return lambda x, y: a(x, y) * b(x, y)


@_compile.register(Div)
def _(node, params):
    a, b = _compile(node.left, params), _compile(node.right, params)
    return lambda x, y: _divide(a(x, y), b(x, y))


@_compile.register(Pow)
def _(node, params):
    a, b = _compile(node.left, params), _compile(node.right, params)
    exponent_node = node.right
    return lambda x, y: _power(a(x, y), exponent_node, b(x, y))


def compile_expression(node: ExpressionAst, params: Mapping[str, float] = None) -> Evaluator:
    """Turns a syntax tree into a function of (x, y).

    The returned function accepts floats, numpy arrays or Dual numbers and raises
    MapDomainError at singularities of the formula.
    """
    return _compile(node, dict(params or {}))


def evaluate(node: ExpressionAst, x, y, params: Mapping[str, float] = None):
    return compile_expression(node, params)(x, y)


def gradient(func: Evaluator, x: float, y: float) -> tuple[float, float, float]:
    """Evaluates a compiled expression and its partial derivatives at (x, y).

    Returns:
      (value, d/dx, d/dy), computed with dual numbers.
    """
    dx = Dual.lift(func(Dual(x, 1.0), Dual(y, 0.0)))
    dy = Dual.lift(func(Dual(x, 0.0), Dual(y, 1.0)))
    return float(dx.real), float(dx.dual), float(dy.dual)
