# cr_app/series.py
"""
Exact sparse truncated power series in several variables.

Coefficients live in the Gaussian rationals Q(i). A series carries a
precision N: every coefficient of total degree < N is known exactly, and
nothing is known about degrees >= N. Tables are kept canonical (no zero
coefficient, no monomial of degree >= N, terms sorted in graded
lexicographic order) so equality of series is structural.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from .exceptions import (
    CancellationError,
    FrameMismatch,
    InsufficientPrecision,
    PrecisionUnderflow,
    SubstitutionError,
)

Exponent = Tuple[int, ...]


@dataclass(frozen=True)
class GaussianRational:
    """re + im*i with arbitrary-precision rational parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ('re', 'im'):
            value = getattr(self, name)
            if isinstance(value, float):
                raise TypeError('floating point coefficients are not accepted')
            object.__setattr__(self, name, Fraction(value))

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
            return cls(value)
        raise TypeError(f'cannot use {value!r} as a Gaussian rational')

    @property
    def is_zero(self):
        return self.re == 0 and self.im == 0

    @property
    def is_real(self):
        return self.im == 0

    def __bool__(self):
        return not self.is_zero

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __add__(self, other):
        other = self.coerce(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = self.coerce(other)
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return self.coerce(other) - self

    def __mul__(self, other):
        other = self.coerce(other)
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self.coerce(other)
        norm = other.re * other.re + other.im * other.im
        if norm == 0:
            raise ZeroDivisionError('division by zero in Q(i)')
        numerator = self * other.conjugate()
        return GaussianRational(numerator.re / norm, numerator.im / norm)

    def __rtruediv__(self, other):
        return self.coerce(other) / self

    def __pow__(self, exponent: int):
        if exponent < 0:
            return ONE / (self ** -exponent)
        result, base = ONE, self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __str__(self):
        return format_coefficient(self)


ZERO = GaussianRational()
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


def format_coefficient(value: GaussianRational) -> str:
    """Render a coefficient in the expression grammar."""
    if value.im == 0:
        return str(value.re)
    if value.re == 0:
        return _imaginary_text(value.im)
    sign = '-' if value.im < 0 else '+'
    return f'({value.re} {sign} {_imaginary_text(abs(value.im))})'


def _imaginary_text(im: Fraction) -> str:
    if im == 1:
        return 'i'
    if im == -1:
        return '-i'
    return f'{im}*i'


# Variable frames

class FrameKind(enum.Enum):
    T = 'T'
    TAU = 'TAU'
    M_INTRINSIC = 'M_INTRINSIC'
    FULL = 'FULL'


FAMILIES = {
    FrameKind.T: ('z', 'w'),
    FrameKind.TAU: ('zeta', 'xi'),
    FrameKind.M_INTRINSIC: ('z', 'w', 'zeta'),
    FrameKind.FULL: ('z', 'w', 'zeta', 'xi'),
}

# Families paired by the bar operator.
CONJUGATE_FAMILY = {'z': 'zeta', 'w': 'xi', 'zeta': 'z', 'xi': 'w'}


@dataclass(frozen=True)
class VariableFrame:
    """An ordered list of variables: z1..zm, w1..wd, zeta1..zetam, xi1..xid."""

    kind: FrameKind
    m: int
    d: int

    def family_size(self, family: str) -> int:
        return self.m if family in ('z', 'zeta') else self.d

    @cached_property
    def names(self) -> Tuple[str, ...]:
        return tuple(
            f'{family}{k}'
            for family in FAMILIES[self.kind]
            for k in range(1, self.family_size(family) + 1)
        )

    @property
    def arity(self) -> int:
        return len(self.names)

    @property
    def families(self) -> Tuple[str, ...]:
        return FAMILIES[self.kind]

    def offset(self, family: str) -> int:
        if family not in self.families:
            raise FrameMismatch(f'frame {self.kind.value} has no {family} variables')
        start = 0
        for name in self.families:
            if name == family:
                return start
            start += self.family_size(name)
        raise AssertionError('unreachable')

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise FrameMismatch(f'variable {name} is not in frame {self.kind.value}') from None

    def with_kind(self, kind: FrameKind) -> 'VariableFrame':
        return VariableFrame(kind, self.m, self.d)

    def __str__(self):
        return f'{self.kind.value}(m={self.m}, d={self.d})'


# Monomial order

def total_degree(exponent: Exponent) -> int:
    return sum(exponent)


def grlex_key(exponent: Exponent):
    """Sort key: total degree first, then earlier variables with larger powers first."""
    return (sum(exponent), tuple(-power for power in exponent))


def grlex_cmp(a: Exponent, b: Exponent) -> int:
    """-1, 0 or 1 as a precedes, equals or follows b in graded lexicographic order."""
    if len(a) != len(b):
        raise FrameMismatch(f'exponent arity mismatch: {len(a)} != {len(b)}')
    ka, kb = grlex_key(a), grlex_key(b)
    return (ka > kb) - (ka < kb)


def format_monomial(frame: VariableFrame, exponent: Exponent) -> str:
    factors = []
    for name, power in zip(frame.names, exponent):
        if power == 1:
            factors.append(name)
        elif power > 1:
            factors.append(f'{name}^{power}')
    return '*'.join(factors) if factors else '1'


# Series

Scalar = Union[GaussianRational, int, Fraction]


@dataclass(frozen=True)
class TruncatedSeries:
    frame: VariableFrame
    precision: int
    terms: Tuple[Tuple[Exponent, GaussianRational], ...] = ()

    def __post_init__(self):
        if self.precision < 1:
            raise PrecisionUnderflow()
        previous = None
        for exponent, coeff in self.terms:
            if len(exponent) != self.frame.arity:
                raise FrameMismatch('exponent arity does not match the frame')
            if sum(exponent) >= self.precision:
                raise ValueError('stored monomial has degree beyond the precision')
            if coeff.is_zero:
                raise ValueError('stored coefficient is zero')
            key = grlex_key(exponent)
            if previous is not None and key <= previous:
                raise ValueError('terms are not in strict graded lexicographic order')
            previous = key

    # Construction

    @classmethod
    def from_dict(cls, frame: VariableFrame, precision: int,
                  coeffs: Mapping[Exponent, Scalar]) -> 'TruncatedSeries':
        """Canonicalize a coefficient table; degrees >= precision are dropped."""
        cleaned = {}
        for exponent, coeff in coeffs.items():
            coeff = GaussianRational.coerce(coeff)
            if coeff.is_zero or sum(exponent) >= precision:
                continue
            cleaned[tuple(exponent)] = coeff
        ordered = tuple(sorted(cleaned.items(), key=lambda item: grlex_key(item[0])))
        return cls(frame, precision, ordered)

    @classmethod
    def zero(cls, frame: VariableFrame, precision: int) -> 'TruncatedSeries':
        return cls(frame, precision)

    @classmethod
    def constant(cls, frame: VariableFrame, precision: int, value: Scalar = 1) -> 'TruncatedSeries':
        return cls.from_dict(frame, precision, {(0,) * frame.arity: value})

    @classmethod
    def variable(cls, frame: VariableFrame, precision: int,
                 name: Union[str, int], coeff: Scalar = 1) -> 'TruncatedSeries':
        index = frame.index(name) if isinstance(name, str) else name
        exponent = tuple(1 if k == index else 0 for k in range(frame.arity))
        return cls.from_dict(frame, precision, {exponent: coeff})

    # Inspection

    @cached_property
    def coeffs(self) -> Mapping[Exponent, GaussianRational]:
        return MappingProxyType(dict(self.terms))

    def coefficient(self, exponent: Exponent) -> GaussianRational:
        return self.coeffs.get(tuple(exponent), ZERO)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def order(self) -> Optional[int]:
        """Least total degree of a stored monomial, None for the empty table."""
        return sum(self.terms[0][0]) if self.terms else None

    @property
    def degree(self) -> Optional[int]:
        return max(sum(exponent) for exponent, _ in self.terms) if self.terms else None

    def constant_term(self) -> GaussianRational:
        return self.coefficient((0,) * self.frame.arity)

    def uses_variable(self, index: int) -> bool:
        return any(exponent[index] for exponent, _ in self.terms)

    def truncate(self, precision: int) -> 'TruncatedSeries':
        precision = min(precision, self.precision)
        if precision == self.precision:
            return self
        kept = tuple(item for item in self.terms if sum(item[0]) < precision)
        return TruncatedSeries(self.frame, precision, kept)

    def evaluate(self, point: Sequence[GaussianRational]) -> GaussianRational:
        """Exact value of the stored polynomial at a point of the frame."""
        if len(point) != self.frame.arity:
            raise FrameMismatch('point arity does not match the frame')
        total = ZERO
        for exponent, coeff in self.terms:
            value = coeff
            for x, power in zip(point, exponent):
                if power:
                    value = value * GaussianRational.coerce(x) ** power
            total = total + value
        return total

    # Arithmetic

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, -other)

    def __neg__(self):
        return TruncatedSeries(self.frame, self.precision,
                               tuple((e, -c) for e, c in self.terms))

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, value: Scalar) -> 'TruncatedSeries':
        value = GaussianRational.coerce(value)
        if value.is_zero:
            return TruncatedSeries.zero(self.frame, self.precision)
        return TruncatedSeries(self.frame, self.precision,
                               tuple((e, c * value) for e, c in self.terms))

    def derivative(self, index: int) -> 'TruncatedSeries':
        return derivative(self, index)

    def __str__(self):
        from .expressions import format_series
        return format_series(self)


def _check_frames(p: TruncatedSeries, q: TruncatedSeries):
    if p.frame != q.frame:
        raise FrameMismatch(f'cannot combine series in {p.frame} and {q.frame}')


def add(p: TruncatedSeries, q: TruncatedSeries) -> TruncatedSeries:
    _check_frames(p, q)
    precision = min(p.precision, q.precision)
    acc: Dict[Exponent, GaussianRational] = dict(p.terms)
    for exponent, coeff in q.terms:
        acc[exponent] = acc.get(exponent, ZERO) + coeff
    return TruncatedSeries.from_dict(p.frame, precision, acc)


def mul(p: TruncatedSeries, q: TruncatedSeries) -> TruncatedSeries:
    _check_frames(p, q)
    precision = min(p.precision, q.precision)
    acc: Dict[Exponent, GaussianRational] = {}
    # Terms are sorted by degree, so both loops can stop at the first overflow.
    for ea, ca in p.terms:
        da = sum(ea)
        if da >= precision:
            break
        for eb, cb in q.terms:
            if da + sum(eb) >= precision:
                break
            exponent = tuple(x + y for x, y in zip(ea, eb))
            acc[exponent] = acc.get(exponent, ZERO) + ca * cb
    return TruncatedSeries.from_dict(p.frame, precision, acc)


def derivative(p: TruncatedSeries, index: int) -> TruncatedSeries:
    if not 0 <= index < p.frame.arity:
        raise FrameMismatch(f'variable index {index} outside frame {p.frame}')
    if p.precision <= 1:
        raise PrecisionUnderflow()
    acc = {}
    for exponent, coeff in p.terms:
        power = exponent[index]
        if power:
            lowered = exponent[:index] + (power - 1,) + exponent[index + 1:]
            acc[lowered] = coeff * power
    return TruncatedSeries.from_dict(p.frame, p.precision - 1, acc)


def substitute(p: TruncatedSeries, assignment: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """Replace each variable of p by a series of a common target frame."""
    if len(assignment) != p.frame.arity:
        raise FrameMismatch('one substituted series is needed per variable')
    target = assignment[0].frame
    for k, series in enumerate(assignment):
        if series.frame != target:
            raise FrameMismatch('substituted series do not share one frame')
        if not series.constant_term().is_zero and p.uses_variable(k):
            raise SubstitutionError(
                f'series substituted for {p.frame.names[k]} has a nonzero constant term')
    precision = min([p.precision] + [series.precision for series in assignment])
    powers = [[TruncatedSeries.constant(target, precision)] for _ in assignment]

    def power_of(k, n):
        cached = powers[k]
        while len(cached) <= n:
            cached.append(cached[-1] * assignment[k])
        return cached[n]

    acc: Dict[Exponent, GaussianRational] = {}
    for exponent, coeff in p.terms:
        if sum(exponent) >= precision:
            break
        term = None
        for k, power in enumerate(exponent):
            if power:
                factor = power_of(k, power)
                term = factor if term is None else term * factor
        if term is None:
            term = TruncatedSeries.constant(target, precision)
        for e, c in term.terms:
            acc[e] = acc.get(e, ZERO) + c * coeff
    return TruncatedSeries.from_dict(target, precision, acc)


def rename(p: TruncatedSeries, target: VariableFrame, index_map: Sequence[int]) -> TruncatedSeries:
    """Move p into target, sending source variable k to target variable index_map[k]."""
    acc = {}
    for exponent, coeff in p.terms:
        moved = [0] * target.arity
        for k, power in enumerate(exponent):
            if power:
                moved[index_map[k]] += power
        acc[tuple(moved)] = coeff
    return TruncatedSeries.from_dict(target, p.precision, acc)


def embed(p: TruncatedSeries, target: VariableFrame) -> TruncatedSeries:
    """Natural inclusion by variable name, e.g. T into FULL or M_INTRINSIC."""
    if (target.m, target.d) != (p.frame.m, p.frame.d):
        raise FrameMismatch(f'cannot embed {p.frame} into {target}')
    return rename(p, target, [target.index(name) for name in p.frame.names])


def project(p: TruncatedSeries, target: VariableFrame) -> TruncatedSeries:
    """Inverse of embed for series that only use variables present in target."""
    names = target.names
    index_map = []
    for k, name in enumerate(p.frame.names):
        if name in names:
            index_map.append(names.index(name))
        elif p.uses_variable(k):
            raise FrameMismatch(f'{name} does not exist in {target}')
        else:
            index_map.append(None)
    return rename(p, target, index_map)


def conjugate_swap(p: TruncatedSeries) -> TruncatedSeries:
    """The bar operator: conjugate coefficients and swap z<->zeta, w<->xi."""
    frame = p.frame
    if frame.kind == FrameKind.T:
        target = frame.with_kind(FrameKind.TAU)
    elif frame.kind == FrameKind.TAU:
        target = frame.with_kind(FrameKind.T)
    elif frame.kind == FrameKind.FULL:
        target = frame
    else:
        raise FrameMismatch(f'conjugate_swap is not defined on {frame}')
    index_map = []
    for name in frame.names:
        family = name.rstrip('0123456789')
        index_map.append(target.index(CONJUGATE_FAMILY[family] + name[len(family):]))
    acc = {}
    for exponent, coeff in p.terms:
        moved = [0] * target.arity
        for k, power in enumerate(exponent):
            moved[index_map[k]] = power
        acc[tuple(moved)] = coeff.conjugate()
    return TruncatedSeries.from_dict(target, p.precision, acc)


def leading_term(p: TruncatedSeries) -> Optional[Tuple[Exponent, GaussianRational]]:
    """The grlex-least stored monomial and its coefficient."""
    return p.terms[0] if p.terms else None


def cofactor_cancel(product_is_zero: TruncatedSeries, factor: TruncatedSeries) -> int:
    """
    Given product == cofactor * factor and product == 0 mod N, certify that the
    cofactor vanishes mod N - ord(factor) and return that bound.
    """
    if not product_is_zero.is_zero:
        raise CancellationError('cofactor cancellation needs a product that is zero')
    if factor.is_zero:
        raise InsufficientPrecision('cannot cancel a factor that vanishes to the available precision',
                                    stage='cofactor_cancel')
    omega = factor.order
    if omega >= product_is_zero.precision:
        raise InsufficientPrecision(
            f'factor order {omega} reaches the product precision {product_is_zero.precision}',
            stage='cofactor_cancel')
    return product_is_zero.precision - omega


def exponents_up_to(arity: int, degree: int) -> Iterable[Exponent]:
    """All exponents of total degree <= degree, in graded lexicographic order."""
    def compositions(total, slots):
        if slots == 1:
            yield (total,)
            return
        for head in range(total, -1, -1):
            for tail in compositions(total - head, slots - 1):
                yield (head,) + tail

    for total in range(degree + 1):
        yield from compositions(total, arity)
