# cr_app/expressions.py
"""
Expression grammar for series input and output.

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := '-' unary | power
    power  := atom ('^' INTEGER)?
    atom   := INTEGER ('/' INTEGER)? | 'i' | VARIABLE | '(' expr ')'

VARIABLE is one of z<k>, w<k>, zeta<k>, xi<k> with k >= 1. Implicit
multiplication is not part of the grammar, so `z1 w1` is a syntax error.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, List, Mapping, Optional, Tuple

from .exceptions import DegreeTooHigh, ExpressionSyntaxError, FrameConflict, UnknownVariable
from .series import (
    I,
    ONE,
    ZERO,
    FrameKind,
    GaussianRational,
    TruncatedSeries,
    VariableFrame,
    format_coefficient,
    format_monomial,
)

TOKEN_RE = re.compile(r'\s*(?:(?P<number>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))')
VARIABLE_RE = re.compile(r'^(zeta|xi|z|w)([1-9][0-9]*)$')


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    position = 0
    while position < len(text):
        if text[position:].strip() == '':
            break
        match = TOKEN_RE.match(text, position)
        if not match:
            offending = len(text[position:]) - len(text[position:].lstrip()) + position
            raise ExpressionSyntaxError(f'unexpected character {text[offending]!r}', offending)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(Token(kind, match.group(kind), start))
        position = match.end()
    tokens.append(Token('end', '', len(text)))
    return tokens


# AST

class Node:
    def variables(self) -> FrozenSet[str]:
        raise NotImplementedError

    def degree_bound(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Number(Node):
    value: GaussianRational

    def variables(self):
        return frozenset()

    def degree_bound(self):
        return 0


@dataclass(frozen=True)
class Variable(Node):
    name: str

    def variables(self):
        return frozenset([self.name])

    def degree_bound(self):
        return 1


@dataclass(frozen=True)
class Negate(Node):
    operand: Node

    def variables(self):
        return self.operand.variables()

    def degree_bound(self):
        return self.operand.degree_bound()


@dataclass(frozen=True)
class BinaryOp(Node):
    op: str
    left: Node
    right: Node

    def variables(self):
        return self.left.variables() | self.right.variables()

    def degree_bound(self):
        if self.op == '*':
            return self.left.degree_bound() + self.right.degree_bound()
        return max(self.left.degree_bound(), self.right.degree_bound())


@dataclass(frozen=True)
class Power(Node):
    base: Node
    exponent: int

    def variables(self):
        return self.base.variables()

    def degree_bound(self):
        return self.base.degree_bound() * self.exponent


class ExpressionParser:
    """Recursive descent parser producing an AST."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, kind, text=None) -> Token:
        token = self.current
        if token.kind != kind or (text is not None and token.text != text):
            wanted = text or kind
            found = token.text or 'end of input'
            raise ExpressionSyntaxError(f'expected {wanted}, found {found!r}', token.position)
        return self.advance()

    def parse(self) -> Node:
        if self.current.kind == 'end':
            raise ExpressionSyntaxError('empty expression', 0)
        node = self.parse_expr()
        if self.current.kind != 'end':
            token = self.current
            raise ExpressionSyntaxError(f'unexpected {token.text!r}', token.position)
        return node

    def parse_expr(self) -> Node:
        node = self.parse_term()
        while self.current.kind == 'op' and self.current.text in '+-':
            op = self.advance().text
            node = BinaryOp(op, node, self.parse_term())
        return node

    def parse_term(self) -> Node:
        node = self.parse_unary()
        while self.current.kind == 'op' and self.current.text == '*':
            self.advance()
            node = BinaryOp('*', node, self.parse_unary())
        return node

    def parse_unary(self) -> Node:
        if self.current.kind == 'op' and self.current.text == '-':
            self.advance()
            return Negate(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Node:
        node = self.parse_atom()
        if self.current.kind == 'op' and self.current.text == '^':
            self.advance()
            exponent = self.expect('number')
            node = Power(node, int(exponent.text))
        return node

    def parse_atom(self) -> Node:
        token = self.current
        if token.kind == 'number':
            self.advance()
            value = Fraction(int(token.text))
            if self.current.kind == 'op' and self.current.text == '/':
                self.advance()
                denominator = self.expect('number')
                if int(denominator.text) == 0:
                    raise ExpressionSyntaxError('zero denominator', denominator.position)
                value = value / int(denominator.text)
            return Number(GaussianRational(value))
        if token.kind == 'name':
            self.advance()
            if token.text == 'i':
                return Number(I)
            if not VARIABLE_RE.match(token.text):
                raise UnknownVariable(f'unknown variable {token.text!r} at position {token.position}')
            return Variable(token.text)
        if token.kind == 'op' and token.text == '(':
            self.advance()
            node = self.parse_expr()
            self.expect('op', ')')
            return node
        found = token.text or 'end of input'
        raise ExpressionSyntaxError(f'unexpected {found!r}', token.position)


def parse_ast(text: str) -> Node:
    return ExpressionParser(text).parse()


def infer_frame(node: Node, m: int, d: int, frame: Optional[VariableFrame] = None) -> VariableFrame:
    """Pick the frame from the variables used, or check them against an explicit frame."""
    families = set()
    for name in node.variables():
        family, index = VARIABLE_RE.match(name).groups()
        size = m if family in ('z', 'zeta') else d
        if int(index) > size:
            raise UnknownVariable(f'{name} does not exist when m={m}, d={d}')
        families.add(family)
    if frame is not None:
        missing = families - set(frame.families)
        if missing:
            raise FrameConflict(
                f"variables {', '.join(sorted(missing))} are not in frame {frame.kind.value}")
        return frame
    if families <= {'z', 'w'}:
        kind = FrameKind.T
    elif families <= {'zeta', 'xi'}:
        kind = FrameKind.TAU
    else:
        kind = FrameKind.FULL
    return VariableFrame(kind, m, d)


def to_series(node: Node, frame: VariableFrame, precision: int) -> TruncatedSeries:
    if isinstance(node, Number):
        return TruncatedSeries.constant(frame, precision, node.value)
    if isinstance(node, Variable):
        return TruncatedSeries.variable(frame, precision, node.name)
    if isinstance(node, Negate):
        return -to_series(node.operand, frame, precision)
    if isinstance(node, BinaryOp):
        left = to_series(node.left, frame, precision)
        right = to_series(node.right, frame, precision)
        if node.op == '+':
            return left + right
        if node.op == '-':
            return left - right
        return left * right
    if isinstance(node, Power):
        base = to_series(node.base, frame, precision)
        result = TruncatedSeries.constant(frame, precision)
        for _ in range(node.exponent):
            result = result * base
        return result
    raise TypeError(f'unknown node {node!r}')


def parse_expression(text: str, m: int, d: int, precision: int,
                     frame: Optional[VariableFrame] = None,
                     truncate: bool = False) -> TruncatedSeries:
    """Parse text into an exact series known mod degree `precision`."""
    node = parse_ast(text)
    frame = infer_frame(node, m, d, frame)
    exact = to_series(node, frame, max(precision, node.degree_bound() + 1))
    if not truncate and exact.degree is not None and exact.degree >= precision:
        raise DegreeTooHigh(
            f'{text!r} has degree {exact.degree}, the order only allows degree < {precision}')
    return exact.truncate(precision)


# Numeric evaluation, independent of the series code

Point = Mapping[str, GaussianRational]


def evaluate(node: Node, point: Point) -> GaussianRational:
    return evaluate_with_tangent(node, point, None)[0]


def evaluate_with_tangent(node: Node, point: Point,
                          direction: Optional[str]) -> Tuple[GaussianRational, GaussianRational]:
    """Value and directional derivative along one variable (forward mode)."""
    if isinstance(node, Number):
        return node.value, ZERO
    if isinstance(node, Variable):
        if node.name not in point:
            raise UnknownVariable(f'no value supplied for {node.name}')
        return point[node.name], (ONE if node.name == direction else ZERO)
    if isinstance(node, Negate):
        value, tangent = evaluate_with_tangent(node.operand, point, direction)
        return -value, -tangent
    if isinstance(node, BinaryOp):
        a, da = evaluate_with_tangent(node.left, point, direction)
        b, db = evaluate_with_tangent(node.right, point, direction)
        if node.op == '+':
            return a + b, da + db
        if node.op == '-':
            return a - b, da - db
        return a * b, da * b + a * db
    if isinstance(node, Power):
        a, da = evaluate_with_tangent(node.base, point, direction)
        if node.exponent == 0:
            return ONE, ZERO
        return a ** node.exponent, da * node.exponent * a ** (node.exponent - 1)
    raise TypeError(f'unknown node {node!r}')


# Printing

def format_series(series: TruncatedSeries) -> str:
    """Render a series in the input grammar, terms in graded lexicographic order."""
    if series.is_zero:
        return '0'
    parts = []
    for exponent, coeff in series.terms:
        negative = (coeff.im == 0 and coeff.re < 0) or (coeff.re == 0 and coeff.im < 0)
        magnitude = -coeff if negative else coeff
        monomial = format_monomial(series.frame, exponent)
        if monomial == '1':
            body = format_coefficient(magnitude)
        elif magnitude == ONE:
            body = monomial
        else:
            body = f'{format_coefficient(magnitude)}*{monomial}'
        if not parts:
            parts.append(f'-{body}' if negative else body)
        else:
            parts.append(f"{'-' if negative else '+'} {body}")
    return ' '.join(parts)

