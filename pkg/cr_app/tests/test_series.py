import functools
import random
from fractions import Fraction

from django.test import SimpleTestCase
from hypothesis import given, strategies as st

from cr_app.exceptions import (
    CancellationError,
    FrameMismatch,
    InsufficientPrecision,
    PrecisionUnderflow,
    SubstitutionError,
)
from cr_app.expressions import parse_expression
from cr_app.series import (
    I,
    ONE,
    GaussianRational,
    TruncatedSeries,
    cofactor_cancel,
    conjugate_swap,
    derivative,
    embed,
    exponents_up_to,
    format_coefficient,
    grlex_cmp,
    leading_term,
    mul,
    project,
    substitute,
)

from .strategies import FULL, INTRINSIC, T, TAU, points_in, series_in

exponents3 = st.tuples(*[st.integers(min_value=0, max_value=4)] * 3)


def t_series(text, precision=8):
    return parse_expression(text, 1, 1, precision, frame=T)


class GaussianRationalTests(SimpleTestCase):
    def test_arithmetic_is_exact(self):
        a = GaussianRational(1, 2)
        b = GaussianRational(3, -1)
        self.assertEqual(a * b, GaussianRational(5, 5))
        self.assertEqual((a * b) / b, a)
        self.assertEqual(a - a, GaussianRational())
        self.assertEqual(I * I, -ONE)

    def test_floats_are_rejected(self):
        with self.assertRaises(TypeError):
            GaussianRational(0.5)

    def test_division_by_zero(self):
        with self.assertRaises(ZeroDivisionError):
            ONE / GaussianRational()

    def test_format_coefficient(self):
        self.assertEqual(format_coefficient(GaussianRational(Fraction(-1, 2))), '-1/2')
        self.assertEqual(format_coefficient(I), 'i')
        self.assertEqual(format_coefficient(-I), '-i')
        self.assertEqual(format_coefficient(GaussianRational(0, 2)), '2*i')
        self.assertEqual(format_coefficient(GaussianRational(1, -2)), '(1 - 2*i)')


class MonomialOrderTests(SimpleTestCase):
    def test_grlex_puts_earlier_variables_first(self):
        self.assertEqual(grlex_cmp((1, 0), (0, 1)), -1)
        self.assertEqual(grlex_cmp((0, 2), (1, 0)), 1)
        self.assertEqual(grlex_cmp((1, 1), (1, 1)), 0)

    def test_grlex_arity_mismatch(self):
        with self.assertRaises(FrameMismatch):
            grlex_cmp((1, 0), (1, 0, 0))

    def test_exponents_up_to(self):
        self.assertEqual(list(exponents_up_to(2, 2)),
                         [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])


class TruncatedSeriesTests(SimpleTestCase):
    def test_from_dict_canonicalizes(self):
        series = TruncatedSeries.from_dict(T, 3, {(2, 1): 5, (1, 0): 0, (0, 1): 2, (0, 0): 1})
        self.assertEqual(series.terms, (((0, 0), ONE), ((0, 1), GaussianRational(2))))
        self.assertEqual(series.order, 0)
        self.assertEqual(series.degree, 1)

    def test_precision_below_one_is_rejected(self):
        with self.assertRaises(PrecisionUnderflow):
            TruncatedSeries.zero(T, 0)

    def test_product_truncates_to_common_precision(self):
        p = t_series('1 + z1', 5)
        q = t_series('1 - z1', 3)
        self.assertEqual(mul(p, q), t_series('1 - z1^2', 3))
        self.assertEqual(mul(p, q.truncate(2)), t_series('1', 2))

    def test_frames_must_agree(self):
        with self.assertRaises(FrameMismatch):
            TruncatedSeries.constant(T, 4) + TruncatedSeries.constant(TAU, 4)

    def test_derivative_loses_one_degree(self):
        d = derivative(t_series('z1^2 + w1', 4), 0)
        self.assertEqual(d, t_series('2*z1', 3))
        with self.assertRaises(PrecisionUnderflow):
            derivative(TruncatedSeries.constant(T, 1), 0)

    def test_substitute(self):
        p = t_series('z1*w1', 6)
        result = substitute(p, [t_series('z1 + w1', 6), t_series('w1', 6)])
        self.assertEqual(result, t_series('z1*w1 + w1^2', 6))

    def test_substitute_rejects_constant_for_used_variable(self):
        with self.assertRaises(SubstitutionError):
            substitute(t_series('z1', 4), [t_series('1', 4), t_series('w1', 4)])
        # unused variables may receive anything
        self.assertEqual(substitute(t_series('z1', 4), [t_series('w1', 4), t_series('1', 4)]),
                         t_series('w1', 4))

    def test_conjugate_swap(self):
        swapped = conjugate_swap(t_series('i*z1 + w1^2'))
        self.assertEqual(swapped.frame, TAU)
        self.assertEqual(swapped.coefficient((1, 0)), -I)
        self.assertEqual(swapped.coefficient((0, 2)), ONE)
        with self.assertRaises(FrameMismatch):
            conjugate_swap(TruncatedSeries.constant(INTRINSIC, 4))

    def test_embed_and_project(self):
        p = t_series('z1 + 2*w1')
        full = embed(p, FULL)
        self.assertEqual(full.coefficient((0, 1, 0, 0)), GaussianRational(2))
        self.assertEqual(project(full, T), p)
        with self.assertRaises(FrameMismatch):
            project(TruncatedSeries.variable(FULL, 4, 'zeta1'), T)

    def test_leading_term(self):
        self.assertEqual(leading_term(t_series('w1 + 3*z1 + z1^2')), ((1, 0), GaussianRational(3)))
        self.assertIsNone(leading_term(TruncatedSeries.zero(T, 3)))

    def test_cofactor_cancel(self):
        zero = TruncatedSeries.zero(INTRINSIC, 7)
        self.assertEqual(cofactor_cancel(zero, TruncatedSeries.variable(INTRINSIC, 7, 'zeta1')), 6)
        self.assertEqual(cofactor_cancel(zero, TruncatedSeries.constant(INTRINSIC, 7, 2)), 7)
        with self.assertRaises(CancellationError):
            cofactor_cancel(TruncatedSeries.constant(INTRINSIC, 7), TruncatedSeries.constant(INTRINSIC, 7))
        with self.assertRaises(InsufficientPrecision):
            cofactor_cancel(TruncatedSeries.zero(INTRINSIC, 2),
                            TruncatedSeries.from_dict(INTRINSIC, 7, {(1, 1, 0): 1}))

    def test_evaluate(self):
        value = t_series('z1^2 + i*w1').evaluate([GaussianRational(2), GaussianRational(3)])
        self.assertEqual(value, GaussianRational(4, 3))


class SeriesPropertyTests(SimpleTestCase):
    @given(series_in(FULL, 4), series_in(FULL, 4))
    def test_product_commutes(self, p, q):
        self.assertEqual(p * q, q * p)

    @given(series_in(FULL, 4), series_in(FULL, 4), series_in(FULL, 4))
    def test_product_distributes(self, p, q, r):
        self.assertEqual(p * (q + r), p * q + p * r)

    @given(series_in(T, 5))
    def test_conjugate_swap_is_an_involution(self, p):
        self.assertEqual(conjugate_swap(conjugate_swap(p)), p)

    @given(series_in(FULL, 4), series_in(FULL, 4))
    def test_leibniz_rule(self, p, q):
        left = derivative(p * q, 2)
        right = derivative(p, 2) * q + p * derivative(q, 2)
        self.assertEqual(left, right)

    @given(series_in(FULL, 4), series_in(FULL, 4), series_in(FULL, 4))
    def test_product_associates(self, p, q, r):
        self.assertEqual((p * q) * r, p * (q * r))

    @given(series_in(T, 5), series_in(T, 5))
    def test_conjugate_swap_is_multiplicative(self, p, q):
        self.assertEqual(conjugate_swap(p * q), conjugate_swap(p) * conjugate_swap(q))

    @given(series_in(FULL, 5))
    def test_mixed_partials_commute(self, p):
        self.assertEqual(derivative(derivative(p, 0), 2), derivative(derivative(p, 2), 0))
        self.assertEqual(derivative(derivative(p, 1), 3), derivative(derivative(p, 3), 1))


class EvaluationTests(SimpleTestCase):
    """Below the truncation degree, every operation agrees with pointwise evaluation."""

    @given(series_in(FULL, 5, max_degree=2), series_in(FULL, 5, max_degree=2), points_in(FULL))
    def test_add_and_mul(self, p, q, point):
        self.assertEqual((p + q).evaluate(point), p.evaluate(point) + q.evaluate(point))
        self.assertEqual((p * q).evaluate(point), p.evaluate(point) * q.evaluate(point))

    @given(series_in(T, 5, max_degree=2), series_in(INTRINSIC, 5, max_degree=2),
           series_in(INTRINSIC, 5, max_degree=2), points_in(INTRINSIC))
    def test_substitute(self, p, a, b, point):
        assignment = [s - TruncatedSeries.constant(INTRINSIC, 5, s.constant_term()) for s in (a, b)]
        inner = [s.evaluate(point) for s in assignment]
        self.assertEqual(substitute(p, assignment).evaluate(point), p.evaluate(inner))

    def test_restriction_of_w_minus_xi(self):
        # xi := w - 2i z zeta turns w - xi into 2i z zeta
        p = parse_expression('w1 - xi1', 1, 1, 8, frame=FULL)
        z, w, zeta = (TruncatedSeries.variable(INTRINSIC, 8, name) for name in ('z1', 'w1', 'zeta1'))
        xi = w - (z * zeta).scale(GaussianRational(0, 2))
        result = substitute(p, [z, w, zeta, xi])
        self.assertEqual(result, TruncatedSeries.from_dict(INTRINSIC, 8, {(1, 0, 1): GaussianRational(0, 2)}))


class GrlexOrderTests(SimpleTestCase):
    @given(exponents3, exponents3, exponents3)
    def test_order_is_compatible_with_multiplication(self, a, b, c):
        ac = tuple(x + y for x, y in zip(a, c))
        bc = tuple(x + y for x, y in zip(b, c))
        if grlex_cmp(a, b) <= 0:
            self.assertLessEqual(grlex_cmp(ac, bc), 0)

    @given(exponents3, exponents3)
    def test_order_is_antisymmetric(self, a, b):
        self.assertEqual(grlex_cmp(a, b), -grlex_cmp(b, a))
        self.assertEqual(grlex_cmp(a, b) == 0, a == b)

    def test_matches_brute_force_sort(self):
        def reference(a, b):
            if sum(a) != sum(b):
                return -1 if sum(a) < sum(b) else 1
            for x, y in zip(a, b):
                if x != y:
                    return -1 if x > y else 1
            return 0

        exponents = [(i, j, k) for i in range(3) for j in range(3) for k in range(3) if i + j + k <= 2]
        random.Random(1).shuffle(exponents)
        expected = []
        for exponent in exponents:
            position = 0
            while position < len(expected) and reference(expected[position], exponent) < 0:
                position += 1
            expected.insert(position, exponent)
        self.assertEqual(sorted(exponents, key=functools.cmp_to_key(grlex_cmp)), expected)
        self.assertEqual(expected, list(exponents_up_to(3, 2)))
