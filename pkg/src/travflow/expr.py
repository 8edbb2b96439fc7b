"""Symbolic expressions over the variables x0, x1, ...

A small closed language: +, -, *, /, nonnegative integer powers, sin,
cos, exp, and numeric literals.  Expressions are immutable trees with
structural equality, the parser and printer round-trip, and derivatives
are exact.  Everything downstream (Lie derivative towers, compiled
evaluation programs) is built on these trees.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import EvalDomainError, ParseError


class Expression:
    """Common base class; concrete nodes are the dataclasses below."""

    __slots__ = ()


@dataclass(frozen=True)
class Constant(Expression):
    value: float


@dataclass(frozen=True)
class Variable(Expression):
    index: int


@dataclass(frozen=True)
class Add(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Sub(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Mul(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Div(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class IntPow(Expression):
    base: Expression
    exponent: int


@dataclass(frozen=True)
class Sin(Expression):
    arg: Expression


@dataclass(frozen=True)
class Cos(Expression):
    arg: Expression


@dataclass(frozen=True)
class Exp(Expression):
    arg: Expression


# Shared scalar helpers.  The pure Python kernel reuses these so that
# both evaluation backends agree bit for bit with C library semantics:
# powers are repeated multiplication, exp overflows to inf, sin/cos of
# a non-finite argument give nan instead of raising.

def pow_int(base, n):
    out = 1.0
    for _ in range(n):
        out *= base
    return out


def safe_exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def safe_sin(x):
    try:
        return math.sin(x)
    except ValueError:
        return math.nan


def safe_cos(x):
    try:
        return math.cos(x)
    except ValueError:
        return math.nan


def evaluate(expression, point):
    """Evaluate at a point (any indexable of floats).  Reference
    implementation; hot paths go through compiled programs instead."""
    if isinstance(expression, Constant):
        return expression.value
    if isinstance(expression, Variable):
        return float(point[expression.index])
    if isinstance(expression, Add):
        return evaluate(expression.left, point) + evaluate(expression.right, point)
    if isinstance(expression, Sub):
        return evaluate(expression.left, point) - evaluate(expression.right, point)
    if isinstance(expression, Mul):
        return evaluate(expression.left, point) * evaluate(expression.right, point)
    if isinstance(expression, Div):
        denominator = evaluate(expression.right, point)
        if denominator == 0.0:
            raise EvalDomainError("division by zero")
        return evaluate(expression.left, point) / denominator
    if isinstance(expression, IntPow):
        return pow_int(evaluate(expression.base, point), expression.exponent)
    if isinstance(expression, Sin):
        return safe_sin(evaluate(expression.arg, point))
    if isinstance(expression, Cos):
        return safe_cos(evaluate(expression.arg, point))
    if isinstance(expression, Exp):
        return safe_exp(evaluate(expression.arg, point))
    raise TypeError(f"not an expression node: {expression!r}")


def differentiate(expression, variable):
    """Exact partial derivative with respect to x<variable>."""
    if isinstance(expression, Constant):
        return Constant(0.0)
    if isinstance(expression, Variable):
        return Constant(1.0 if expression.index == variable else 0.0)
    if isinstance(expression, Add):
        return Add(differentiate(expression.left, variable),
                   differentiate(expression.right, variable))
    if isinstance(expression, Sub):
        return Sub(differentiate(expression.left, variable),
                   differentiate(expression.right, variable))
    if isinstance(expression, Mul):
        return Add(Mul(differentiate(expression.left, variable), expression.right),
                   Mul(expression.left, differentiate(expression.right, variable)))
    if isinstance(expression, Div):
        # (u/w)' = (u'w - uw') / w^2
        return Div(Sub(Mul(differentiate(expression.left, variable), expression.right),
                       Mul(expression.left, differentiate(expression.right, variable))),
                   IntPow(expression.right, 2))
    if isinstance(expression, IntPow):
        if expression.exponent == 0:
            return Constant(0.0)
        return Mul(Mul(Constant(float(expression.exponent)),
                       IntPow(expression.base, expression.exponent - 1)),
                   differentiate(expression.base, variable))
    if isinstance(expression, Sin):
        return Mul(Cos(expression.arg), differentiate(expression.arg, variable))
    if isinstance(expression, Cos):
        return Mul(Sub(Constant(0.0), Sin(expression.arg)),
                   differentiate(expression.arg, variable))
    if isinstance(expression, Exp):
        return Mul(Exp(expression.arg), differentiate(expression.arg, variable))
    raise TypeError(f"not an expression node: {expression!r}")


def _fold(expression):
    """Evaluate a node whose children are all constants, if safe."""
    try:
        return Constant(evaluate(expression, ()))
    except EvalDomainError:
        return expression


def simplify(expression):
    """Bottom-up constant folding plus the cheap algebraic identities.
    Keeps Sub(0, e) intact since that is the unary minus spelling."""
    if isinstance(expression, (Constant, Variable)):
        return expression
    if isinstance(expression, (Sin, Cos, Exp)):
        arg = simplify(expression.arg)
        node = type(expression)(arg)
        return _fold(node) if isinstance(arg, Constant) else node
    if isinstance(expression, IntPow):
        base = simplify(expression.base)
        if expression.exponent == 0:
            return Constant(1.0)
        if expression.exponent == 1:
            return base
        node = IntPow(base, expression.exponent)
        return _fold(node) if isinstance(base, Constant) else node

    left = simplify(expression.left)
    right = simplify(expression.right)
    node = type(expression)(left, right)
    if isinstance(left, Constant) and isinstance(right, Constant):
        return _fold(node)
    if isinstance(expression, Add):
        if left == Constant(0.0):
            return right
        if right == Constant(0.0):
            return left
    elif isinstance(expression, Sub):
        if right == Constant(0.0):
            return left
    elif isinstance(expression, Mul):
        if left == Constant(0.0) or right == Constant(0.0):
            return Constant(0.0)
        if left == Constant(1.0):
            return right
        if right == Constant(1.0):
            return left
    elif isinstance(expression, Div):
        if right == Constant(1.0):
            return left
        if left == Constant(0.0) and isinstance(right, Constant) and right.value != 0.0:
            return Constant(0.0)
    return node


def max_variable(expression):
    """Largest variable index appearing in the tree, -1 if none."""
    if isinstance(expression, Constant):
        return -1
    if isinstance(expression, Variable):
        return expression.index
    if isinstance(expression, (Sin, Cos, Exp)):
        return max_variable(expression.arg)
    if isinstance(expression, IntPow):
        return max_variable(expression.base)
    return max(max_variable(expression.left), max_variable(expression.right))


# Printing.  Precedence: additive 1, multiplicative 2, unary minus 3,
# power 4, atoms 5.  A child is parenthesized when its level is below
# what its position requires.

def _print(expression):
    if isinstance(expression, Constant):
        if expression.value < 0.0 or (expression.value == 0.0
                                      and math.copysign(1.0, expression.value) < 0.0):
            return f"-{_format_number(-expression.value)}", 3
        return _format_number(expression.value), 5
    if isinstance(expression, Variable):
        return f"x{expression.index}", 5
    if isinstance(expression, Sin):
        return f"sin({to_string(expression.arg)})", 5
    if isinstance(expression, Cos):
        return f"cos({to_string(expression.arg)})", 5
    if isinstance(expression, Exp):
        return f"exp({to_string(expression.arg)})", 5
    if isinstance(expression, IntPow):
        base_text, base_level = _print(expression.base)
        if base_level < 5:
            base_text = f"({base_text})"
        return f"{base_text}^{expression.exponent}", 4
    if isinstance(expression, Sub) and expression.left == Constant(0.0):
        inner_text, inner_level = _print(expression.right)
        if inner_level < 3:
            inner_text = f"({inner_text})"
        return f"-{inner_text}", 3

    symbol, level = {Add: ("+", 1), Sub: ("-", 1), Mul: ("*", 2), Div: ("/", 2)}[type(expression)]
    left_text, left_level = _print(expression.left)
    right_text, right_level = _print(expression.right)
    if left_level < level:
        left_text = f"({left_text})"
    # - and / do not associate, so the right child needs strict excess.
    if right_level < level or (right_level == level and type(expression) in (Sub, Div)):
        right_text = f"({right_text})"
    return f"{left_text} {symbol} {right_text}", level


def _format_number(value):
    if value == math.floor(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_string(expression):
    return _print(expression)[0]


# Parsing.

_TOKEN_RE = re.compile(r"""
    (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
  | (?P<space>\s+)
""", re.VERBOSE)

_FUNCTIONS = {"sin": Sin, "cos": Cos, "exp": Exp}


def _tokenize(text):
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN_RE.match(text, position)
        if match is None:
            raise ParseError(f"unexpected character {text[position]!r}", position)
        if match.lastgroup != "space":
            tokens.append((match.lastgroup, match.group(), position))
        position = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, dimension):
        self.tokens = _tokenize(text)
        self.cursor = 0
        self.dimension = dimension

    def peek(self):
        return self.tokens[self.cursor]

    def advance(self):
        token = self.tokens[self.cursor]
        self.cursor += 1
        return token

    def expect_op(self, symbol):
        kind, value, position = self.peek()
        if kind != "op" or value != symbol:
            raise ParseError(f"expected {symbol!r}", position)
        self.advance()

    def parse_expression(self):
        node = self.parse_term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                right = self.parse_term()
                node = Add(node, right) if value == "+" else Sub(node, right)
            else:
                return node

    def parse_term(self):
        node = self.parse_factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                right = self.parse_factor()
                node = Mul(node, right) if value == "*" else Div(node, right)
            else:
                return node

    def parse_factor(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Sub(Constant(0.0), self.parse_factor())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return IntPow(base, self.parse_exponent())
        return base

    def parse_exponent(self):
        kind, value, position = self.peek()
        if kind == "op" and value == "(":
            self.advance()
            exponent = self.parse_exponent()
            self.expect_op(")")
            return exponent
        if kind != "number":
            raise ParseError("exponent must be a nonnegative integer", position)
        self.advance()
        numeric = float(value)
        if numeric != math.floor(numeric) or numeric < 0:
            raise ParseError("exponent must be a nonnegative integer", position)
        return int(numeric)

    def parse_atom(self):
        kind, value, position = self.advance()
        if kind == "number":
            return Constant(float(value))
        if kind == "name":
            if value in _FUNCTIONS:
                self.expect_op("(")
                argument = self.parse_expression()
                self.expect_op(")")
                return _FUNCTIONS[value](argument)
            variable_match = re.fullmatch(r"x(\d+)", value)
            if variable_match is None:
                raise ParseError(f"unknown name {value!r}", position)
            index = int(variable_match.group(1))
            if index >= self.dimension:
                raise ParseError(
                    f"variable x{index} out of range for dimension {self.dimension}",
                    position)
            return Variable(index)
        if kind == "op" and value == "(":
            node = self.parse_expression()
            self.expect_op(")")
            return node
        raise ParseError(f"expected a value, found {value!r}" if value else "unexpected end of input",
                         position)


def parse(text, dimension):
    """Parse expression text with variables x0..x<dimension-1>."""
    parser = _Parser(text, dimension)
    node = parser.parse_expression()
    kind, value, position = parser.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing input {value!r}", position)
    return node
