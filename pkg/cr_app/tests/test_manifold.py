from django.test import SimpleTestCase

from cr_app.exceptions import (
    FrameMismatch,
    InvolutionFailure,
    ManifoldValidationError,
    NormalizationFailure,
    OriginNotOnManifold,
    PrecisionUnderflow,
)
from cr_app.manifold import (
    BracketWord,
    FiniteTypeOutcome,
    FormalVectorField,
    apply_field,
    brute_force_ranks,
    build_L_fields,
    build_U_fields,
    finite_type_check,
    generators,
    lie_bracket,
    new_manifold,
    tangency_residuals,
)
from cr_app.series import ONE, GaussianRational, TruncatedSeries

from .strategies import INTRINSIC, random_field, random_series, seeded

HEISENBERG = 'w1 - 2*i*z1*zeta1'


def tube(k):
    return f'w1 - 2*i*z1^{k}*zeta1^{k}'


L1 = BracketWord.generator('L', 1)
U1 = BracketWord.generator('U', 1)


class NewManifoldTests(SimpleTestCase):
    def test_heisenberg_is_accepted(self):
        model = new_manifold(1, 1, [HEISENBERG], 8)
        self.assertEqual(model.dimension, 3)
        self.assertTrue(all(r.is_zero for r in model.involution_residuals()))
        theta_bar = model.theta_bar[0]
        self.assertEqual(theta_bar.coefficient((0, 0, 0, 1)), ONE)
        self.assertEqual(theta_bar.coefficient((1, 0, 1, 0)), GaussianRational(0, 2))

    def test_real_coefficient_fails_the_involution(self):
        with self.assertRaises(InvolutionFailure) as ctx:
            new_manifold(1, 1, ['w1 - z1*zeta1'], 8)
        self.assertEqual(ctx.exception.witness.monomial, 'z1*zeta1')
        self.assertEqual(ctx.exception.witness.coefficient, GaussianRational(-2))
        self.assertEqual(ctx.exception.equation, 1)

    def test_validation_failures(self):
        with self.assertRaises(OriginNotOnManifold):
            new_manifold(1, 1, ['w1 + 1'], 8)
        with self.assertRaises(NormalizationFailure):
            new_manifold(1, 1, ['2*w1'], 8)
        with self.assertRaises(ManifoldValidationError):
            new_manifold(1, 1, ['xi1'], 8)
        with self.assertRaises(ManifoldValidationError):
            new_manifold(1, 2, [HEISENBERG], 8)

    def test_codimension_two(self):
        model = new_manifold(1, 2, ['w1 - 2*i*z1*zeta1', 'w2 - 2*i*z1^2*zeta1^2'], 8)
        self.assertEqual(model.dimension, 4)
        self.assertEqual(len(model.theta_bar), 2)

    def test_restrict_needs_full_frame(self):
        model = new_manifold(1, 1, [HEISENBERG], 8)
        with self.assertRaises(FrameMismatch):
            model.restrict_to_M(TruncatedSeries.constant(INTRINSIC, 8))


class VectorFieldTests(SimpleTestCase):
    def setUp(self):
        self.model = new_manifold(1, 1, [HEISENBERG], 8)

    def test_L_and_U_fields(self):
        (L,) = build_L_fields(self.model)
        (U,) = build_U_fields(self.model)
        self.assertEqual(L.precision, 7)
        self.assertEqual(L.coeffs[0].constant_term(), ONE)
        self.assertEqual(L.coeffs[1].terms, (((0, 0, 1), GaussianRational(0, 2)),))
        self.assertTrue(L.coeffs[2].is_zero)
        self.assertEqual(U.at_origin(), (GaussianRational(), GaussianRational(), ONE))

    def test_bracket_of_generators(self):
        (L,) = build_L_fields(self.model)
        (U,) = build_U_fields(self.model)
        self.assertEqual(lie_bracket(U, L).at_origin(),
                         (GaussianRational(), GaussianRational(0, 2), GaussianRational()))
        self.assertEqual(lie_bracket(L, U).at_origin(),
                         (GaussianRational(), GaussianRational(0, -2), GaussianRational()))
        self.assertEqual(lie_bracket(L, U).precision, 6)

    def test_tangency(self):
        labels = []
        for label, residual in tangency_residuals(self.model):
            labels.append(label)
            self.assertTrue(residual.is_zero, label)
            self.assertEqual(residual.precision, 7)
        self.assertEqual(labels, ['L1(xi1 - theta1)', 'U1(w1 - theta_bar1)'])

    def test_apply_field_underflow(self):
        field = FormalVectorField.coordinate(INTRINSIC, 4, 0)
        with self.assertRaises(PrecisionUnderflow):
            apply_field(field, TruncatedSeries.constant(INTRINSIC, 1))

    def test_antisymmetry(self):
        rng = seeded(3)
        for _ in range(20):
            X, Y = random_field(rng, 5, 2), random_field(rng, 5, 2)
            xy, yx = lie_bracket(X, Y), lie_bracket(Y, X)
            self.assertEqual(xy.coeffs, tuple(-c for c in yx.coeffs))

    def test_jacobi_identity(self):
        rng = seeded(11)
        for _ in range(100):
            X, Y, Z = (random_field(rng, 5, 2) for _ in range(3))
            total = [a + b + c for a, b, c in zip(
                lie_bracket(X, lie_bracket(Y, Z)).coeffs,
                lie_bracket(Y, lie_bracket(Z, X)).coeffs,
                lie_bracket(Z, lie_bracket(X, Y)).coeffs)]
            self.assertTrue(all(c.is_zero for c in total))

    def test_field_is_a_derivation(self):
        rng = seeded(5)
        X = random_field(rng, 6, 2)
        p, q = random_series(rng, INTRINSIC, 6, 3), random_series(rng, INTRINSIC, 6, 3)
        self.assertEqual(apply_field(X, p * q), apply_field(X, p) * q + p * apply_field(X, q))


class BracketWordTests(SimpleTestCase):
    def test_words(self):
        word = BracketWord.bracket(L1, BracketWord.bracket(U1, L1))
        self.assertEqual(str(word), '[L1,[U1,L1]]')
        self.assertEqual(word.length, 3)
        self.assertTrue(L1.is_generator)

    def test_malformed_words(self):
        with self.assertRaises(ValueError):
            BracketWord.generator('X', 1)
        with self.assertRaises(ValueError):
            BracketWord(label='L', index=1, left=L1, right=U1)


class FiniteTypeTests(SimpleTestCase):
    def test_heisenberg_is_of_type_two(self):
        report = finite_type_check(new_manifold(1, 1, [HEISENBERG], 8), max_depth=4)
        self.assertTrue(report.is_finite_type)
        self.assertEqual(report.type_length, 2)
        self.assertEqual(report.ranks, [2, 3])
        self.assertEqual([str(w) for w in report.spanning_frame], ['L1', 'U1', '[L1,U1]'])

    def test_levi_flat_is_undetermined(self):
        report = finite_type_check(new_manifold(1, 1, ['w1'], 8), max_depth=6)
        self.assertEqual(report.outcome, FiniteTypeOutcome.UNDETERMINED)
        self.assertEqual(report.ranks, [2] * 6)
        self.assertEqual(report.max_depth_reached, 6)
        self.assertIsNone(report.type_length)

    def test_tube_models_have_type_2k(self):
        for k in (1, 2, 3):
            with self.subTest(k=k):
                model = new_manifold(1, 1, [tube(k)], 2 * k + 2)
                report = finite_type_check(model)
                self.assertEqual(report.type_length, 2 * k)
                self.assertEqual(report.ranks, [2] * (2 * k - 1) + [3])

    def test_brute_force_agrees_with_left_normed_search(self):
        for k in (1, 2, 3):
            with self.subTest(k=k):
                model = new_manifold(1, 1, [tube(k)], 2 * k + 2)
                ranks = brute_force_ranks(model, 2 * k)
                self.assertEqual(ranks[-1], (2 * k, 3))
                self.assertEqual([rank for _, rank in ranks], finite_type_check(model).ranks)

    def test_tube_k2_frame(self):
        report = finite_type_check(new_manifold(1, 1, [tube(2)], 8), max_depth=4)
        self.assertEqual([str(w) for w in report.spanning_frame],
                         ['L1', 'U1', '[L1,[U1,[L1,U1]]]'])

    def test_depth_cut_leaves_type_undetermined(self):
        report = finite_type_check(new_manifold(1, 1, [tube(2)], 8), max_depth=3)
        self.assertFalse(report.is_finite_type)
        self.assertEqual(report.ranks, [2, 2, 2])
        self.assertEqual(report.max_depth_reached, 3)
        self.assertEqual(report.spanning_frame, ())

    def test_generator_order_does_not_change_the_ranks(self):
        for theta in (HEISENBERG, tube(2), tube(3)):
            with self.subTest(theta=theta):
                model = new_manifold(1, 1, [theta], 8)
                default = finite_type_check(model)
                reversed_order = finite_type_check(model, generator_order=generators(1)[::-1])
                self.assertEqual(reversed_order.span_by_depth, default.span_by_depth)
                self.assertEqual(reversed_order.type_length, default.type_length)
                self.assertEqual(str(reversed_order.spanning_frame[0]), 'U1')

    def test_more_precision_does_not_change_the_report(self):
        for theta in (HEISENBERG, tube(2), tube(3), 'w1'):
            with self.subTest(theta=theta):
                low = finite_type_check(new_manifold(1, 1, [theta], 8), max_depth=7)
                high = finite_type_check(new_manifold(1, 1, [theta], 14), max_depth=7)
                self.assertEqual(high.outcome, low.outcome)
                self.assertEqual(high.span_by_depth, low.span_by_depth)
                self.assertEqual(high.type_length, low.type_length)
                self.assertEqual(high.spanning_frame, low.spanning_frame)
