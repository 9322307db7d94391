# cr_app/services.py
import enum
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from django.conf import settings

from .exceptions import (
    CertificationError,
    CRError,
    FalsificationFound,
    FrameMismatch,
    HypothesisNotSatisfied,
    InsufficientPrecision,
    PrecisionUnderflow,
    SingularMatrix,
    ZeroSeriesError,
)
from .expressions import evaluate, evaluate_with_tangent, format_series, parse_ast, to_series
from .linalg import invert_series_matrix, matrix_vector
from .manifold import (
    BracketEngine,
    BracketWord,
    FiniteTypeReport,
    FormalVectorField,
    ManifoldModel,
    Witness,
    apply_field,
    finite_type_check,
    lie_bracket,
    new_manifold,
)
from .series import (
    ONE,
    ZERO,
    FrameKind,
    GaussianRational,
    TruncatedSeries,
    VariableFrame,
    cofactor_cancel,
    conjugate_swap,
    derivative,
    embed,
    exponents_up_to,
    leading_term,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeriesPair:
    """The pair (f, g) standing for the meromorphic map f/g."""

    f: TruncatedSeries
    g: TruncatedSeries

    def __post_init__(self):
        for name in ('f', 'g'):
            series = getattr(self, name)
            if series.frame.kind != FrameKind.T:
                raise FrameMismatch(f'{name} must be a series in z, w only')
        if self.f.frame != self.g.frame:
            raise FrameMismatch('f and g live in different frames')
        precision = min(self.f.precision, self.g.precision)
        object.__setattr__(self, 'f', self.f.truncate(precision))
        object.__setattr__(self, 'g', self.g.truncate(precision))
        for name in ('f', 'g'):
            if getattr(self, name).is_zero:
                raise ZeroSeriesError(f'{name} must not be identically zero')

    @property
    def precision(self) -> int:
        return self.f.precision


@dataclass(frozen=True)
class WronskianIdentity:
    """f*X g - g*X f == 0 mod certified_precision, for a field word or a coordinate."""

    stage: str
    residual: TruncatedSeries
    certified_precision: int
    word: Optional[BracketWord] = None
    coordinate: Optional[str] = None

    @property
    def label(self) -> str:
        return str(self.word) if self.word is not None else self.coordinate

    @property
    def holds(self) -> bool:
        return self.residual.is_zero


@dataclass(frozen=True)
class InductionStep:
    exponent: Tuple[int, ...]
    f_coefficient: GaussianRational
    g_coefficient: GaussianRational
    verdict: str


@dataclass(frozen=True)
class Proportional:
    constant: GaussianRational
    certified_precision: int
    trace: Tuple[InductionStep, ...] = ()


@dataclass(frozen=True)
class NotProportional:
    witness: Witness
    coordinate: Optional[int]
    reason: str
    trace: Tuple[InductionStep, ...] = ()


RatioResult = Union[Proportional, NotProportional]


@dataclass(frozen=True)
class FrameInversion:
    """d/dx_i = sum_j coefficients[i][j] * T_j with T_j the fields of `words`."""

    words: Tuple[BracketWord, ...]
    coefficients: Tuple[Tuple[TruncatedSeries, ...], ...]
    precision: int


class LemmaOutcome(enum.Enum):
    CONSTANT_FOUND = 'constant_found'
    DEFECT_NONZERO = 'defect_nonzero'
    NOT_FINITE_TYPE = 'not_finite_type'
    INSUFFICIENT_PRECISION = 'insufficient_precision'


@dataclass(frozen=True)
class ConstancyCertificate:
    outcome: LemmaOutcome
    constant: Optional[GaussianRational] = None
    is_real: bool = False
    is_nonzero: bool = False
    certified_precision: Optional[int] = None
    defect: Optional[TruncatedSeries] = None
    witness: Optional[Witness] = None
    finite_type: Optional[FiniteTypeReport] = None
    steps: Tuple[WronskianIdentity, ...] = ()
    induction_trace: Tuple[InductionStep, ...] = ()
    stage: Optional[str] = None
    message: str = ''


def _coordinate_witness(frame, alpha, beta, coefficient):
    """x^(alpha + beta - 1_i) for the first coordinate i where alpha and beta differ."""
    i = next(k for k, (a, b) in enumerate(zip(alpha, beta)) if a != b)
    exponent = tuple(a + b - (1 if k == i else 0) for k, (a, b) in enumerate(zip(alpha, beta)))
    return Witness(frame, exponent, coefficient * (beta[i] - alpha[i])), i


def ratio_constant(f: TruncatedSeries, g: TruncatedSeries, certified_precision: int,
                   trace: bool = False) -> RatioResult:
    """
    Compare leading terms F x^alpha and G x^beta. Different exponents give the
    relation FG x^(alpha + beta - 1_i) (beta_i - alpha_i) + ... and no constant;
    equal exponents give c = F/G, confirmed by f - c g == 0.
    """
    if certified_precision < 1:
        raise InsufficientPrecision('no degree is certified', stage='ratio_constant')
    f = f.truncate(certified_precision)
    g = g.truncate(certified_precision)
    if f.is_zero or g.is_zero:
        raise InsufficientPrecision('f or g vanishes to the certified precision',
                                    stage='ratio_constant')
    alpha, big_f = leading_term(f)
    beta, big_g = leading_term(g)
    if alpha != beta:
        witness, i = _coordinate_witness(f.frame, alpha, beta, big_f * big_g)
        return NotProportional(witness, i, 'leading exponents differ')

    constant = big_f / big_g
    steps = _induction_trace(f, g, big_f, big_g) if trace else ()
    residual = f - g * constant
    if not residual.is_zero:
        gamma, coefficient = leading_term(residual)
        _, i = _coordinate_witness(f.frame, alpha, gamma, ONE)
        return NotProportional(Witness(f.frame, gamma, coefficient), i,
                               'f - c*g does not vanish', steps)
    return Proportional(constant, f.precision, steps)


def _induction_trace(f, g, big_f, big_g) -> Tuple[InductionStep, ...]:
    """Replay the graded lexicographic induction on the normalized series."""
    f_hat = f.scale(ONE / big_f)
    g_hat = g.scale(ONE / big_g)
    exponents = sorted(set(f_hat.coeffs) | set(g_hat.coeffs),
                       key=lambda e: (sum(e), tuple(-x for x in e)))
    steps = []
    for n, exponent in enumerate(exponents):
        a = f_hat.coefficient(exponent)
        b = g_hat.coefficient(exponent)
        if n == 0:
            verdict = 'leading term normalized to 1'
        elif a == b:
            verdict = 'coefficients agree'
        else:
            verdict = 'coefficients differ'
        steps.append(InductionStep(exponent, a, b, verdict))
        if a != b:
            break
    return tuple(steps)


def leibniz_bracket_identity(R: FormalVectorField, S: FormalVectorField,
                             f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """
    S(fRg - gRf) - R(fSg - gSf) - 2(Sf Rg - Sg Rf) + f[R,S]g - g[R,S]f,
    which is zero for all f, g, R, S.
    """
    Rf, Rg = apply_field(R, f), apply_field(R, g)
    Sf, Sg = apply_field(S, f), apply_field(S, g)
    bracket = lie_bracket(R, S)
    first = apply_field(S, f * Rg - g * Rf)
    second = apply_field(R, f * Sg - g * Sf)
    cross = (Sf * Rg - Sg * Rf).scale(2)
    tail = f * apply_field(bracket, g) - g * apply_field(bracket, f)
    return first - second - cross + tail


def wronskian(X: FormalVectorField, f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    return f * apply_field(X, g) - g * apply_field(X, f)


class LemmaService:
    """Runs the constancy pipeline against one manifold model."""

    def __init__(self, manifold: ManifoldModel, max_depth: Optional[int] = None):
        if max_depth is None:
            max_depth = manifold.precision - 1
        if max_depth < 1:
            raise ValueError('max_depth must be at least 1')
        self.manifold = manifold
        self.max_depth = max_depth
        self.engine = BracketEngine(manifold)
        self._finite_type = None

    @property
    def finite_type(self) -> FiniteTypeReport:
        if self._finite_type is None:
            self._finite_type = finite_type_check(self.manifold, self.max_depth, engine=self.engine)
        return self._finite_type

    def _check_pair(self, pair: SeriesPair):
        frame = pair.f.frame
        if (frame.m, frame.d) != (self.manifold.m, self.manifold.d):
            raise FrameMismatch(f'pair lives in {frame}, model has m={self.manifold.m}, '
                                f'd={self.manifold.d}')

    def _intrinsic(self, series: TruncatedSeries) -> TruncatedSeries:
        return embed(series, self.manifold.intrinsic_frame)

    def restricted_conjugate(self, series: TruncatedSeries) -> TruncatedSeries:
        """s_bar(tau) restricted to the manifold."""
        return self.manifold.restrict_to_M(embed(conjugate_swap(series), self.manifold.full_frame))

    def reality_defect(self, pair: SeriesPair) -> TruncatedSeries:
        """f(t) g_bar(tau) - g(t) f_bar(tau) restricted to the manifold."""
        self._check_pair(pair)
        full = self.manifold.full_frame
        f, g = embed(pair.f, full), embed(pair.g, full)
        f_bar = embed(conjugate_swap(pair.f), full)
        g_bar = embed(conjugate_swap(pair.g), full)
        return self.manifold.restrict_to_M(f * g_bar - g * f_bar)

    def first_order_identities(self, pair: SeriesPair) -> List[WronskianIdentity]:
        """
        W_k = f L_k g - g L_k f. The differentiated hypothesis gives
        W_k * R(g_bar) == 0, and cancelling R(g_bar) certifies W_k == 0 mod
        N - 1 - ord R(g_bar). The U_k identities are recorded as computed.
        """
        defect = self.reality_defect(pair)
        if not defect.is_zero:
            witness = Witness.of(defect)
            raise HypothesisNotSatisfied(f'reality identity fails at {witness.monomial}',
                                         witness=witness)
        f, g = self._intrinsic(pair.f), self._intrinsic(pair.g)
        g_bar = self.restricted_conjugate(pair.g)
        records = []
        try:
            for k, field_k in enumerate(self.engine.l_fields):
                w_k = wronskian(field_k, f, g)
                product = w_k * g_bar
                if not product.is_zero:
                    raise CertificationError(f'W_{k + 1} * g_bar does not vanish on the manifold')
                bound = cofactor_cancel(product, g_bar)
                records.append(self._record('first_order', w_k, bound,
                                            word=BracketWord.generator('L', k + 1)))
            for k, field_k in enumerate(self.engine.u_fields):
                w_k = wronskian(field_k, f, g)
                records.append(self._record('first_order', w_k, w_k.precision,
                                            word=BracketWord.generator('U', k + 1)))
        except PrecisionUnderflow as exc:
            raise InsufficientPrecision(str(exc), stage='first_order_identities') from exc
        except InsufficientPrecision as exc:
            exc.stage = 'first_order_identities'
            raise
        return records

    def _record(self, stage, series, bound, word=None, coordinate=None) -> WronskianIdentity:
        if bound < 1:
            raise InsufficientPrecision(f'{stage} bound for {word or coordinate} reached 0',
                                        stage=stage)
        residual = series.truncate(bound)
        if not residual.is_zero:
            raise CertificationError(
                f'{stage} identity for {word or coordinate} fails below degree {bound}: '
                f'{format_series(residual)}')
        record = WronskianIdentity(stage, residual, min(bound, series.precision), word, coordinate)
        logger.debug('certified %s %s mod degree %d', stage, record.label, record.certified_precision)
        return record

    def leibniz_bracket_identity(self, R: FormalVectorField, S: FormalVectorField,
                                 pair: SeriesPair) -> TruncatedSeries:
        return leibniz_bracket_identity(R, S, self._intrinsic(pair.f), self._intrinsic(pair.g))

    def bracket_closure(self, pair: SeriesPair, words: Sequence[BracketWord]) -> List[WronskianIdentity]:
        requested, _ = self._close(pair, words)
        return requested

    def _close(self, pair, words):
        """Certify every word; returns (records for words, all records in order)."""
        first = self.first_order_identities(pair)
        memo: Dict[BracketWord, WronskianIdentity] = {record.word: record for record in first}
        trail: List[WronskianIdentity] = list(first)
        f, g = self._intrinsic(pair.f), self._intrinsic(pair.g)
        omega_g = g.order

        def certify(word):
            if word in memo:
                return memo[word]
            if word.is_generator:
                raise ValueError(f'{word} does not exist when m={self.manifold.m}')
            r, s = certify(word.left), certify(word.right)
            R, S = self.engine.field(word.left), self.engine.field(word.right)
            T = self.engine.field(word)
            Rf, Rg = apply_field(R, f), apply_field(R, g)
            Sf, Sg = apply_field(S, f), apply_field(S, g)

            # eliminating f: g (Sf Rg - Sg Rf) = Sg W_R - Rg W_S
            elimination = Sf * Rg - Sg * Rf
            base = min(r.certified_precision, s.certified_precision)
            product = (Sg * r.residual - Rg * s.residual).truncate(base)
            if not (g * elimination - product).truncate(product.precision).is_zero:
                raise CertificationError(f'elimination step for {word} is inconsistent')
            e_bound = cofactor_cancel(product, g.truncate(product.precision))
            eliminated = self._record('elimination', elimination, e_bound, word=word)

            justification = leibniz_bracket_identity(R, S, f, g)
            if not justification.is_zero:
                raise CertificationError(f'Leibniz identity fails for {word}')

            w_t = wronskian(T, f, g)
            bound = min(r.certified_precision - 1, s.certified_precision - 1, e_bound)
            record = self._record('bracket', w_t, bound, word=word)
            trail.extend([eliminated, record])
            memo[word] = record
            return record

        try:
            requested = [certify(word) for word in words]
        except PrecisionUnderflow as exc:
            raise InsufficientPrecision(str(exc), stage='bracket_closure') from exc
        except InsufficientPrecision as exc:
            exc.stage = 'bracket_closure'
            raise
        logger.debug('bracket closure: %d identities, omega(g)=%s', len(trail), omega_g)
        return requested, trail

    def invert_bracket_frame(self, words: Sequence[BracketWord]) -> FrameInversion:
        """Express each d/dx_i as sum_j a_ij(x) T_j over the spanning words."""
        n = self.manifold.dimension
        if len(words) != n:
            raise ValueError(f'a spanning frame needs {n} words, got {len(words)}')
        try:
            fields = [self.engine.field(word) for word in words]
        except PrecisionUnderflow as exc:
            raise InsufficientPrecision(str(exc), stage='invert_bracket_frame') from exc
        # A[l][j] = l-th coefficient of T_j
        matrix = [[fields[j].coeffs[l] for j in range(n)] for l in range(n)]
        try:
            columns = invert_series_matrix(matrix)
        except SingularMatrix as exc:
            raise CertificationError('spanning frame is singular at the origin') from exc
        precision = min(entry.precision for column in columns for entry in column)
        for i, column in enumerate(columns):
            for l, value in enumerate(matrix_vector(matrix, column)):
                expected = 1 if l == i else 0
                check = value - TruncatedSeries.constant(value.frame, value.precision, expected)
                if not check.is_zero:
                    raise CertificationError('frame inversion residual is not zero')
        return FrameInversion(tuple(words), tuple(tuple(column) for column in columns), precision)

    def coordinate_identities(self, pair: SeriesPair, inversion: FrameInversion,
                              frame_identities: Sequence[WronskianIdentity]) -> List[WronskianIdentity]:
        """f d_i g - g d_i f == sum_j a_ij (f T_j g - g T_j f) == 0."""
        f, g = self._intrinsic(pair.f), self._intrinsic(pair.g)
        bounds = {record.word: record.certified_precision for record in frame_identities}
        names = self.manifold.intrinsic_frame.names
        records = []
        try:
            wronskians = [wronskian(self.engine.field(word), f, g) for word in inversion.words]
            for i, name in enumerate(names):
                direct = f * derivative(g, i) - g * derivative(f, i)
                combination = None
                bound = direct.precision
                for word, coeff, w_j in zip(inversion.words, inversion.coefficients[i], wronskians):
                    term = coeff * w_j
                    combination = term if combination is None else combination + term
                    bound = min(bound, bounds[word], coeff.precision)
                if not (direct - combination).is_zero:
                    raise CertificationError(f'coordinate {name} is not recovered from the frame')
                records.append(self._record('coordinate', direct, bound, coordinate=name))
        except PrecisionUnderflow as exc:
            raise InsufficientPrecision(str(exc), stage='coordinate_identities') from exc
        except InsufficientPrecision as exc:
            exc.stage = 'coordinate_identities'
            raise
        return records

    def verify_lemma(self, pair: SeriesPair, trace: bool = True) -> ConstancyCertificate:
        steps: List[WronskianIdentity] = []
        defect = self.reality_defect(pair)
        if not defect.is_zero:
            witness = Witness.of(defect)
            logger.info('reality defect nonzero, witness %s', witness.monomial)
            return ConstancyCertificate(LemmaOutcome.DEFECT_NONZERO, defect=defect, witness=witness,
                                        message=f'reality identity fails at {witness.monomial}')
        report = self.finite_type
        if not report.is_finite_type:
            logger.info('model not certified of finite type up to depth %s', report.max_depth_reached)
            return ConstancyCertificate(LemmaOutcome.NOT_FINITE_TYPE, defect=defect, finite_type=report,
                                        message='the bracket span stalls below full rank')
        try:
            words = report.spanning_frame
            frame_records, trail = self._close(pair, words)
            steps.extend(trail)
            inversion = self.invert_bracket_frame(words)
            coordinates = self.coordinate_identities(pair, inversion, frame_records)
            steps.extend(coordinates)
            coordinate_bound = min(record.certified_precision for record in coordinates)
            ratio_precision = min(pair.precision, coordinate_bound + 1 - pair.g.order)
            result = ratio_constant(pair.f, pair.g, ratio_precision, trace=trace)
        except InsufficientPrecision as exc:
            logger.warning('insufficient precision at %s: %s', exc.stage, exc)
            return ConstancyCertificate(LemmaOutcome.INSUFFICIENT_PRECISION, defect=defect,
                                        finite_type=report, steps=tuple(steps), stage=exc.stage,
                                        message=str(exc))
        if isinstance(result, NotProportional):
            raise CertificationError(
                f'identities hold but the ratio is not constant: {result.reason} at '
                f'{result.witness.monomial}')
        constant = result.constant
        if not constant.is_real or constant.is_zero:
            raise CertificationError(f'recovered constant {constant} is not a nonzero real number')
        logger.info('constant %s certified mod degree %d', constant, result.certified_precision)
        return ConstancyCertificate(
            LemmaOutcome.CONSTANT_FOUND,
            constant=constant,
            is_real=constant.is_real,
            is_nonzero=not constant.is_zero,
            certified_precision=result.certified_precision,
            defect=defect,
            finite_type=report,
            steps=tuple(steps),
            induction_trace=result.trace,
            message='f/g is a nonzero real constant',
        )

    def verify_real_constant(self, f: TruncatedSeries) -> ConstancyCertificate:
        one = TruncatedSeries.constant(f.frame, f.precision, 1)
        return self.verify_lemma(SeriesPair(f, one))


def reality_defect(pair: SeriesPair, manifold: ManifoldModel) -> TruncatedSeries:
    return LemmaService(manifold).reality_defect(pair)


def verify_lemma(pair: SeriesPair, manifold: ManifoldModel,
                 max_depth: Optional[int] = None) -> ConstancyCertificate:
    return LemmaService(manifold, max_depth).verify_lemma(pair)


def verify_real_constant(f: TruncatedSeries, manifold: ManifoldModel,
                         max_depth: Optional[int] = None) -> ConstancyCertificate:
    return LemmaService(manifold, max_depth).verify_real_constant(f)


# Random data

class SeriesSampler:
    """Seeded random rationals, points and series for the oracle and fuzzing."""

    def __init__(self, seed: int, numerator: Optional[int] = None, denominator: Optional[int] = None):
        self.rng = random.Random(seed)
        self.numerator = numerator or getattr(settings, 'CR_RANDOM_NUMERATOR', 3)
        self.denominator = denominator or getattr(settings, 'CR_RANDOM_DENOMINATOR', 3)

    def rational(self, nonzero: bool = False) -> Fraction:
        while True:
            value = Fraction(self.rng.randint(-self.numerator, self.numerator),
                             self.rng.randint(1, self.denominator))
            if value or not nonzero:
                return value

    def gaussian(self, nonzero: bool = False) -> GaussianRational:
        while True:
            value = GaussianRational(self.rational(), self.rational())
            if value or not nonzero:
                return value

    def series(self, frame: VariableFrame, precision: int, degree: int,
               unit: bool = False) -> TruncatedSeries:
        """Random polynomial of degree <= degree; never the zero table."""
        degree = min(degree, precision - 1)
        while True:
            coeffs = {}
            for exponent in exponents_up_to(frame.arity, degree):
                if self.rng.random() < 0.5:
                    coeffs[exponent] = self.gaussian()
            if unit:
                coeffs[(0,) * frame.arity] = self.gaussian(nonzero=True)
            series = TruncatedSeries.from_dict(frame, precision, coeffs)
            if not series.is_zero:
                return series


# Numeric oracle

@dataclass
class OracleCheck:
    operation: str
    comparisons: int = 0
    mismatches: int = 0
    first_mismatch: Optional[str] = None


@dataclass
class OracleResult:
    points: int
    order: int
    checks: List[OracleCheck] = field(default_factory=list)

    @property
    def mismatches(self) -> int:
        return sum(check.mismatches for check in self.checks)


class OracleService:
    """
    Cross-checks symbolic intermediates against direct numeric evaluation of
    the input expressions at sampled points (z, w, zeta), with xi := Theta.
    The symbolic side runs at an order large enough that nothing is truncated.
    """

    def __init__(self, m: int, d: int, theta: Sequence[str], f: Optional[str] = None,
                 g: Optional[str] = None, points: Optional[int] = None, seed: Optional[int] = None):
        self.m, self.d = m, d
        self.theta_text = list(theta)
        self.theta_ast = [parse_ast(text) for text in theta]
        self.f_ast = parse_ast(f) if f else None
        self.g_ast = parse_ast(g if g else '1') if f else None
        self.points = points if points is not None else getattr(settings, 'CR_ORACLE_POINTS', 50)
        self.seed = seed if seed is not None else getattr(settings, 'CR_DEFAULT_SEED', 0)

    @property
    def exact_order(self) -> int:
        theta_degree = max([1] + [node.degree_bound() for node in self.theta_ast])
        pair_degree = 0
        if self.f_ast is not None:
            pair_degree = self.f_ast.degree_bound() + self.g_ast.degree_bound()
        return (pair_degree + 1) * theta_degree ** 2 + 2

    def sample_points(self) -> List[Dict[str, GaussianRational]]:
        sampler = SeriesSampler(self.seed)
        frame = VariableFrame(FrameKind.M_INTRINSIC, self.m, self.d)
        points = [{name: ZERO for name in frame.names}]
        while len(points) < self.points:
            points.append({name: sampler.gaussian() for name in frame.names})
        return points[:max(self.points, 1)]

    def _conjugate_point(self, point, xi):
        """Arguments t = conj(tau) at which s(t) is evaluated to get s_bar(tau)."""
        env = {}
        for k in range(1, self.m + 1):
            env[f'z{k}'] = point[f'zeta{k}'].conjugate()
            env[f'zeta{k}'] = point[f'z{k}'].conjugate()
        for j in range(1, self.d + 1):
            env[f'w{j}'] = xi[j - 1].conjugate()
        return env

    def run(self) -> OracleResult:
        order = self.exact_order
        model = new_manifold(self.m, self.d, self.theta_text, order, validate=False)
        intrinsic = model.intrinsic_frame
        t_frame = model.t_frame
        service = LemmaService(model)
        l_fields = service.engine.l_fields
        involution = model.involution_residuals()

        checks = {name: OracleCheck(name) for name in ('involution', 'l_fields')}
        pair = None
        if self.f_ast is not None:
            pair = SeriesPair(to_series(self.f_ast, t_frame, order), to_series(self.g_ast, t_frame, order))
            defect = service.reality_defect(pair)
            f, g = embed(pair.f, intrinsic), embed(pair.g, intrinsic)
            wronskians = [wronskian(field_k, f, g) for field_k in l_fields]
            checks['defect'] = OracleCheck('defect')
            checks['wronskians'] = OracleCheck('wronskians')

        def compare(name, symbolic, numeric, point):
            check = checks[name]
            check.comparisons += 1
            if symbolic != numeric:
                check.mismatches += 1
                if check.first_mismatch is None:
                    where = ', '.join(f'{key}={value}' for key, value in point.items())
                    check.first_mismatch = f'symbolic {symbolic} != numeric {numeric} at {where}'
                    logger.warning('oracle mismatch in %s: %s', name, check.first_mismatch)

        points = self.sample_points()
        for point in points:
            vector = [point[name] for name in intrinsic.names]
            xi = [evaluate(node, point) for node in self.theta_ast]
            conj_env = self._conjugate_point(point, xi)
            for j, node in enumerate(self.theta_ast):
                # Theta_bar_j(z, zeta, xi) = conj(Theta_j(conj z, conj zeta, conj xi))
                numeric = evaluate(node, conj_env).conjugate()
                symbolic = involution[j].evaluate(vector) + point[f'w{j + 1}']
                compare('involution', symbolic, numeric, point)
            coefficients = []
            for k in range(self.m):
                row = []
                for j, node in enumerate(self.theta_ast):
                    _, slope = evaluate_with_tangent(node, conj_env, f'zeta{k + 1}')
                    row.append(slope.conjugate())
                    symbolic = l_fields[k].coeffs[intrinsic.index(f'w{j + 1}')].evaluate(vector)
                    compare('l_fields', symbolic, slope.conjugate(), point)
                coefficients.append(row)
            if pair is None:
                continue
            t_point = {name: point[name] for name in t_frame.names}
            f_val = evaluate(self.f_ast, t_point)
            g_val = evaluate(self.g_ast, t_point)
            f_bar = evaluate(self.f_ast, conj_env).conjugate()
            g_bar = evaluate(self.g_ast, conj_env).conjugate()
            compare('defect', defect.evaluate(vector), f_val * g_bar - g_val * f_bar, point)
            for k in range(self.m):
                lf, lg = self._l_derivative(self.f_ast, t_point, k, coefficients[k]), \
                    self._l_derivative(self.g_ast, t_point, k, coefficients[k])
                compare('wronskians', wronskians[k].evaluate(vector), f_val * lg - g_val * lf, point)

        result = OracleResult(len(points), order, list(checks.values()))
        logger.info('oracle: %d points, %d mismatches', result.points, result.mismatches)
        return result

    def _l_derivative(self, node, t_point, k, coefficients):
        _, value = evaluate_with_tangent(node, t_point, f'z{k + 1}')
        for j, c in enumerate(coefficients):
            _, dw = evaluate_with_tangent(node, t_point, f'w{j + 1}')
            value = value + c * dw
        return value


# Fuzzing

@dataclass
class FuzzSummary:
    mode: str
    trials: int
    seed: int
    degree: int
    buckets: Counter = field(default_factory=Counter)
    recovered: int = 0
    falsifications: int = 0
    errors: List[str] = field(default_factory=list)


class FuzzService:
    """Random pairs against one model; a falsifying pair aborts the run.

    Any other failure inside a trial is counted in the `errors` bucket and the
    run continues.
    """

    MODES = ('proportional', 'generic')

    def __init__(self, manifold: ManifoldModel, max_depth: Optional[int] = None,
                 trials: Optional[int] = None, seed: Optional[int] = None,
                 degree: Optional[int] = None, mode: str = 'generic'):
        if mode not in self.MODES:
            raise ValueError(f'unknown fuzz mode {mode!r}')
        self.manifold = manifold
        self.service = LemmaService(manifold, max_depth)
        self.trials = trials if trials is not None else getattr(settings, 'CR_FUZZ_TRIALS', 100)
        self.seed = seed if seed is not None else getattr(settings, 'CR_DEFAULT_SEED', 0)
        self.degree = degree if degree is not None else getattr(settings, 'CR_FUZZ_DEGREE', 3)
        self.mode = mode

    def run(self) -> FuzzSummary:
        sampler = SeriesSampler(self.seed)
        frame = self.manifold.t_frame
        precision = self.manifold.precision
        summary = FuzzSummary(self.mode, self.trials, self.seed, self.degree)
        for trial in range(self.trials):
            try:
                if self.mode == 'proportional':
                    self._proportional_trial(trial, sampler, frame, precision, summary)
                else:
                    self._generic_trial(trial, sampler, frame, precision, summary)
            except FalsificationFound:
                raise
            except CRError as exc:
                summary.buckets['errors'] += 1
                summary.errors.append(f'trial {trial}: {exc}')
                logger.error('fuzz trial %d failed: %s', trial, exc)
        logger.info('fuzz %s: %s', self.mode, dict(summary.buckets))
        return summary

    def _proportional_trial(self, trial, sampler, frame, precision, summary):
        g = sampler.series(frame, precision, self.degree, unit=True)
        c = GaussianRational(sampler.rational(nonzero=True))
        certificate = self.service.verify_lemma(SeriesPair(g * c, g), trace=False)
        if certificate.outcome == LemmaOutcome.CONSTANT_FOUND and certificate.constant != c:
            raise CertificationError(f'planted constant {c} recovered as {certificate.constant}')
        summary.buckets[certificate.outcome.value] += 1
        if certificate.outcome == LemmaOutcome.CONSTANT_FOUND:
            summary.recovered += 1
        logger.debug('trial %d: %s', trial, certificate.outcome.value)

    def _generic_trial(self, trial, sampler, frame, precision, summary):
        pair = SeriesPair(sampler.series(frame, precision, self.degree),
                          sampler.series(frame, precision, self.degree))
        defect = self.service.reality_defect(pair)
        if not defect.is_zero:
            summary.buckets[LemmaOutcome.DEFECT_NONZERO.value] += 1
            return
        proportional = isinstance(ratio_constant(pair.f, pair.g, precision), Proportional)
        if not proportional and self.service.finite_type.is_finite_type:
            summary.falsifications += 1
            instance = f'trial {trial}: f = {format_series(pair.f)}; g = {format_series(pair.g)}'
            raise FalsificationFound(
                f'non-proportional pair with empty reality defect on a finite type model ({instance})',
                instance=instance)
        certificate = self.service.verify_lemma(pair, trace=False)
        summary.buckets[certificate.outcome.value] += 1
