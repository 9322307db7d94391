# cr_app/manifold.py
"""
Complexified generic submanifolds through the origin.

A model is given by d series Theta_j(zeta, z, w) defining
    xi_j = Theta_j(zeta, z, w)   or equivalently   w_j = Theta_bar_j(z, zeta, xi).
Computations happen in the intrinsic frame (z, w, zeta), xi being
eliminated through xi = Theta(zeta, z, w). In that frame the conjugate
fields are exactly d/dzeta_k and the fields L_k carry the series
coefficients R(dTheta_bar_j/dz_k).
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .exceptions import (
    FrameMismatch,
    InvolutionFailure,
    ManifoldValidationError,
    NormalizationFailure,
    OriginNotOnManifold,
    PrecisionUnderflow,
)
from .expressions import parse_expression
from .linalg import EchelonBasis
from .series import (
    FrameKind,
    GaussianRational,
    TruncatedSeries,
    VariableFrame,
    conjugate_swap,
    derivative,
    embed,
    format_monomial,
    leading_term,
    project,
    substitute,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Witness:
    """A canonical failure witness: the grlex-least offending monomial."""

    frame: VariableFrame
    exponent: Tuple[int, ...]
    coefficient: GaussianRational

    @classmethod
    def of(cls, series: TruncatedSeries) -> Optional['Witness']:
        term = leading_term(series)
        if term is None:
            return None
        return cls(series.frame, term[0], term[1])

    @property
    def monomial(self) -> str:
        return format_monomial(self.frame, self.exponent)

    def __str__(self):
        return f'{self.coefficient}*{self.monomial}'


@dataclass(frozen=True)
class ManifoldModel:
    m: int
    d: int
    theta: Tuple[TruncatedSeries, ...]
    theta_bar: Tuple[TruncatedSeries, ...]
    precision: int

    @property
    def full_frame(self) -> VariableFrame:
        return VariableFrame(FrameKind.FULL, self.m, self.d)

    @property
    def intrinsic_frame(self) -> VariableFrame:
        return VariableFrame(FrameKind.M_INTRINSIC, self.m, self.d)

    @property
    def t_frame(self) -> VariableFrame:
        return VariableFrame(FrameKind.T, self.m, self.d)

    @property
    def dimension(self) -> int:
        """Complex dimension 2m + d of the complexification."""
        return 2 * self.m + self.d

    @cached_property
    def restriction_map(self) -> Tuple[TruncatedSeries, ...]:
        """Series substituted for z, w, zeta, xi when restricting to the manifold."""
        intrinsic = self.intrinsic_frame
        images = [TruncatedSeries.variable(intrinsic, self.precision, name)
                  for name in intrinsic.names]
        images.extend(project(theta_j, intrinsic) for theta_j in self.theta)
        return tuple(images)

    def restrict_to_M(self, p: TruncatedSeries) -> TruncatedSeries:
        """a(t, tau) -> a(t, zeta, Theta(zeta, t)) in the intrinsic frame."""
        if p.frame != self.full_frame:
            raise FrameMismatch(f'restrict_to_M expects a series in {self.full_frame}')
        return substitute(p, self.restriction_map)

    def involution_residuals(self) -> List[TruncatedSeries]:
        """R(Theta_bar_j) - w_j for each j; all empty for an accepted model."""
        intrinsic = self.intrinsic_frame
        residuals = []
        for j, theta_bar_j in enumerate(self.theta_bar):
            w_j = TruncatedSeries.variable(intrinsic, self.precision, f'w{j + 1}')
            residuals.append(self.restrict_to_M(theta_bar_j) - w_j)
        return residuals


def new_manifold(m: int, d: int, theta: Sequence[Union[str, TruncatedSeries]],
                 precision: int, validate: bool = True) -> ManifoldModel:
    """Build and validate a model from Theta_j written in (zeta, z, w)."""
    if m < 1 or d < 1:
        raise ManifoldValidationError('m and d must both be at least 1')
    if len(theta) != d:
        raise ManifoldValidationError(f'expected {d} defining series, got {len(theta)}')
    full = VariableFrame(FrameKind.FULL, m, d)
    series = []
    for j, item in enumerate(theta):
        if isinstance(item, str):
            item = parse_expression(item, m, d, precision, frame=full)
        if item.frame != full:
            item = embed(item, full)
        series.append(item.truncate(precision))

    xi_offset = full.offset('xi')
    w_offset = full.offset('w')
    for j, theta_j in enumerate(series):
        if any(theta_j.uses_variable(xi_offset + k) for k in range(d)):
            raise ManifoldValidationError(f'theta{j + 1} must be written in zeta, z, w only')
        if validate:
            if not theta_j.constant_term().is_zero:
                raise OriginNotOnManifold(f'theta{j + 1} does not vanish at the origin')
            for l in range(d):
                exponent = tuple(1 if k == w_offset + l else 0 for k in range(full.arity))
                expected = 1 if l == j else 0
                if theta_j.coefficient(exponent) != GaussianRational(expected):
                    raise NormalizationFailure(
                        f'theta{j + 1} must have linear part w{j + 1} in the w variables')

    theta_bar = tuple(conjugate_swap(theta_j) for theta_j in series)
    model = ManifoldModel(m, d, tuple(series), theta_bar, precision)

    if validate:
        for j, residual in enumerate(model.involution_residuals()):
            witness = Witness.of(residual)
            if witness is not None:
                raise InvolutionFailure(
                    f'involution fails in equation {j + 1}: w{j + 1} is not recovered, '
                    f'first offending monomial {witness.monomial}',
                    witness=witness, equation=j + 1)
        logger.debug('accepted model m=%d d=%d at order %d', m, d, precision)
    return model


@dataclass(frozen=True)
class FormalVectorField:
    """sum_i coeffs[i] d/dx_i in the intrinsic frame (z, w, zeta)."""

    coeffs: Tuple[TruncatedSeries, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError('a vector field needs at least one coefficient')
        frame = self.coeffs[0].frame
        if frame.kind != FrameKind.M_INTRINSIC:
            raise FrameMismatch('vector fields live in the intrinsic frame')
        if any(c.frame != frame for c in self.coeffs) or len(self.coeffs) != frame.arity:
            raise FrameMismatch('one intrinsic coefficient per coordinate is required')

    @property
    def frame(self) -> VariableFrame:
        return self.coeffs[0].frame

    @property
    def precision(self) -> int:
        return min(c.precision for c in self.coeffs)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.coeffs)

    @classmethod
    def coordinate(cls, frame: VariableFrame, precision: int, index: int) -> 'FormalVectorField':
        return cls(tuple(TruncatedSeries.constant(frame, precision, 1 if k == index else 0)
                         for k in range(frame.arity)))

    def apply(self, p: TruncatedSeries) -> TruncatedSeries:
        return apply_field(self, p)

    def at_origin(self) -> Tuple[GaussianRational, ...]:
        return evaluate_at_origin(self)


def apply_field(X: FormalVectorField, p: TruncatedSeries) -> TruncatedSeries:
    if p.frame != X.frame:
        raise FrameMismatch('field and series live in different frames')
    if p.precision <= 1:
        raise PrecisionUnderflow()
    result = TruncatedSeries.zero(p.frame, min(X.precision, p.precision - 1))
    for index, coeff in enumerate(X.coeffs):
        if coeff.is_zero:
            continue
        result = result + coeff * derivative(p, index)
    return result


def lie_bracket(X: FormalVectorField, Y: FormalVectorField) -> FormalVectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    if X.frame != Y.frame:
        raise FrameMismatch('cannot bracket fields from different frames')
    precision = min(X.precision, Y.precision) - 1
    if precision < 1:
        raise PrecisionUnderflow()
    coeffs = tuple(
        (apply_field(X, y) - apply_field(Y, x)).truncate(precision)
        for x, y in zip(X.coeffs, Y.coeffs)
    )
    return FormalVectorField(coeffs)


def evaluate_at_origin(X: FormalVectorField) -> Tuple[GaussianRational, ...]:
    return tuple(c.constant_term() for c in X.coeffs)


def build_L_fields(model: ManifoldModel) -> List[FormalVectorField]:
    """L_k = d/dz_k + sum_j R(dTheta_bar_j/dz_k) d/dw_j."""
    intrinsic = model.intrinsic_frame
    full = model.full_frame
    precision = model.precision - 1
    if precision < 1:
        raise PrecisionUnderflow()
    w_offset = intrinsic.offset('w')
    fields = []
    for k in range(model.m):
        coeffs = [TruncatedSeries.zero(intrinsic, precision) for _ in range(intrinsic.arity)]
        coeffs[k] = TruncatedSeries.constant(intrinsic, precision, 1)
        for j, theta_bar_j in enumerate(model.theta_bar):
            partial = derivative(theta_bar_j, full.index(f'z{k + 1}'))
            coeffs[w_offset + j] = model.restrict_to_M(partial)
        fields.append(FormalVectorField(tuple(coeffs)))
    return fields


def build_U_fields(model: ManifoldModel) -> List[FormalVectorField]:
    """The conjugate fields, exactly d/dzeta_k in the intrinsic frame."""
    intrinsic = model.intrinsic_frame
    zeta_offset = intrinsic.offset('zeta')
    return [FormalVectorField.coordinate(intrinsic, model.precision, zeta_offset + k)
            for k in range(model.m)]


def tangency_residuals(model: ManifoldModel) -> List[Tuple[str, TruncatedSeries]]:
    """
    Both tangency families, each expected empty mod N - 1:
    L_k applied to Theta_l (xi_l is constant along L_k), and
    R(dTheta_bar_l/dzeta_k + sum_j dTheta_j/dzeta_k * dTheta_bar_l/dxi_j).
    """
    full = model.full_frame
    intrinsic = model.intrinsic_frame
    residuals = []
    for k, field_k in enumerate(build_L_fields(model)):
        for l, theta_l in enumerate(model.theta):
            residual = apply_field(field_k, project(theta_l, intrinsic))
            residuals.append((f'L{k + 1}(xi{l + 1} - theta{l + 1})', residual))
    for k in range(model.m):
        zeta_k = full.index(f'zeta{k + 1}')
        for l, theta_bar_l in enumerate(model.theta_bar):
            total = derivative(theta_bar_l, zeta_k)
            for j, theta_j in enumerate(model.theta):
                xi_j = full.index(f'xi{j + 1}')
                total = total + derivative(theta_j, zeta_k) * derivative(theta_bar_l, xi_j)
            residuals.append((f'U{k + 1}(w{l + 1} - theta_bar{l + 1})', model.restrict_to_M(total)))
    return residuals


# Bracket words

@dataclass(frozen=True)
class BracketWord:
    """Binary bracket tree over the generators L_k and U_k."""

    label: Optional[str] = None
    index: int = 0
    left: Optional['BracketWord'] = None
    right: Optional['BracketWord'] = None

    def __post_init__(self):
        leaf = self.label is not None
        if leaf == (self.left is not None or self.right is not None):
            raise ValueError('a word is either a generator or a bracket of two words')
        if leaf and (self.label not in ('L', 'U') or self.index < 1):
            raise ValueError(f'bad generator {self.label}{self.index}')
        if not leaf and (self.left is None or self.right is None):
            raise ValueError('a bracket needs two sub-words')

    @classmethod
    def generator(cls, label: str, index: int) -> 'BracketWord':
        return cls(label=label, index=index)

    @classmethod
    def bracket(cls, left: 'BracketWord', right: 'BracketWord') -> 'BracketWord':
        return cls(left=left, right=right)

    @property
    def is_generator(self) -> bool:
        return self.label is not None

    @property
    def length(self) -> int:
        if self.is_generator:
            return 1
        return self.left.length + self.right.length

    def __str__(self):
        if self.is_generator:
            return f'{self.label}{self.index}'
        return f'[{self.left},{self.right}]'


def generators(m: int) -> List[BracketWord]:
    return ([BracketWord.generator('L', k) for k in range(1, m + 1)]
            + [BracketWord.generator('U', k) for k in range(1, m + 1)])


class BracketEngine:
    """Materializes bracket words of one model, caching every sub-bracket."""

    def __init__(self, model: ManifoldModel):
        self.model = model
        self._cache: Dict[BracketWord, FormalVectorField] = {}

    @cached_property
    def l_fields(self) -> List[FormalVectorField]:
        return build_L_fields(self.model)

    @cached_property
    def u_fields(self) -> List[FormalVectorField]:
        return build_U_fields(self.model)

    @property
    def generator_words(self) -> List[BracketWord]:
        return generators(self.model.m)

    def field(self, word: BracketWord) -> FormalVectorField:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        if word.is_generator:
            pool = self.l_fields if word.label == 'L' else self.u_fields
            if word.index > len(pool):
                raise ValueError(f'{word} does not exist when m={self.model.m}')
            result = pool[word.index - 1]
        else:
            result = lie_bracket(self.field(word.left), self.field(word.right))
        self._cache[word] = result
        return result


# Finite type

class FiniteTypeOutcome(enum.Enum):
    FINITE_TYPE = 'finite_type'
    UNDETERMINED = 'undetermined'


@dataclass(frozen=True)
class FiniteTypeReport:
    outcome: FiniteTypeOutcome
    span_by_depth: Tuple[Tuple[int, int], ...]
    dimension: int
    type_length: Optional[int] = None
    max_depth_reached: Optional[int] = None
    spanning_frame: Tuple[BracketWord, ...] = field(default=())

    @property
    def is_finite_type(self) -> bool:
        return self.outcome == FiniteTypeOutcome.FINITE_TYPE

    @property
    def ranks(self) -> List[int]:
        return [rank for _, rank in self.span_by_depth]


def finite_type_check(model: ManifoldModel, max_depth: Optional[int] = None,
                      engine: Optional[BracketEngine] = None,
                      generator_order: Optional[Sequence[BracketWord]] = None) -> FiniteTypeReport:
    """
    Breadth-first over left-normed words [X1, [X2, [..., Xl]]]: depth l + 1
    brackets each generator with each depth-l word. Origin values are fed to an
    exact row-reduced basis until it spans C^(2m+d) or max_depth is reached.
    """
    if max_depth is None:
        max_depth = model.precision - 1
    if max_depth < 1:
        raise ValueError('max_depth must be at least 1')
    engine = engine or BracketEngine(model)
    gens = list(generator_order) if generator_order is not None else engine.generator_words
    dimension = model.dimension
    basis = EchelonBasis(dimension)
    frame: List[BracketWord] = []
    span: List[Tuple[int, int]] = []

    layer = []
    try:
        layer = [(word, engine.field(word)) for word in gens]
    except PrecisionUnderflow:
        return FiniteTypeReport(FiniteTypeOutcome.UNDETERMINED, (), dimension, max_depth_reached=0)

    depth = 1
    while True:
        for word, vector_field in layer:
            if basis.insert(vector_field.at_origin()):
                frame.append(word)
        span.append((depth, basis.rank))
        logger.debug('depth %d: rank %d of %d from %d words', depth, basis.rank, dimension, len(layer))
        if basis.is_full:
            return FiniteTypeReport(FiniteTypeOutcome.FINITE_TYPE, tuple(span), dimension,
                                    type_length=depth, spanning_frame=tuple(frame))
        if depth >= max_depth:
            break
        next_layer = []
        seen = set()
        try:
            for generator in gens:
                for word, _ in layer:
                    bracket = BracketWord.bracket(generator, word)
                    vector_field = engine.field(bracket)
                    # zero fields bracket to zero; equal fields bracket equally
                    if vector_field.is_zero or vector_field in seen:
                        continue
                    seen.add(vector_field)
                    next_layer.append((bracket, vector_field))
        except PrecisionUnderflow:
            logger.warning('precision exhausted after depth %d', depth)
            break
        layer = next_layer
        depth += 1
    return FiniteTypeReport(FiniteTypeOutcome.UNDETERMINED, tuple(span), dimension,
                            max_depth_reached=depth)


def brute_force_ranks(model: ManifoldModel, max_length: int) -> List[Tuple[int, int]]:
    """
    Span ranks by word length over every bracket tree shape, not only the
    left-normed ones. Fields are deduplicated per length.
    """
    engine = BracketEngine(model)
    by_length: Dict[int, List[FormalVectorField]] = {
        1: [engine.field(word) for word in engine.generator_words]}
    basis = EchelonBasis(model.dimension)
    ranks = []
    for length in range(1, max_length + 1):
        if length > 1:
            found: List[FormalVectorField] = []
            seen = set()
            try:
                for split in range(1, length):
                    for left in by_length[split]:
                        for right in by_length[length - split]:
                            bracket = lie_bracket(left, right)
                            if bracket.is_zero or bracket in seen:
                                continue
                            seen.add(bracket)
                            found.append(bracket)
            except PrecisionUnderflow:
                break
            by_length[length] = found
        for vector_field in by_length[length]:
            basis.insert(vector_field.at_origin())
        ranks.append((length, basis.rank))
        if basis.is_full:
            break
    return ranks
