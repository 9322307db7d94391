import random
from fractions import Fraction

from hypothesis import strategies as st

from cr_app.manifold import FormalVectorField
from cr_app.series import FrameKind, GaussianRational, TruncatedSeries, VariableFrame, exponents_up_to

T = VariableFrame(FrameKind.T, 1, 1)
TAU = VariableFrame(FrameKind.TAU, 1, 1)
FULL = VariableFrame(FrameKind.FULL, 1, 1)
INTRINSIC = VariableFrame(FrameKind.M_INTRINSIC, 1, 1)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)
gaussians = st.builds(GaussianRational, rationals, rationals)


def points_in(frame):
    return st.lists(gaussians, min_size=frame.arity, max_size=frame.arity)


def series_in(frame, precision, max_terms=6, max_degree=None):
    degree = precision - 1 if max_degree is None else min(max_degree, precision - 1)
    exponents = list(exponents_up_to(frame.arity, degree))
    return st.dictionaries(st.sampled_from(exponents), gaussians, max_size=max_terms).map(
        lambda coeffs: TruncatedSeries.from_dict(frame, precision, coeffs))


def random_gaussian(rng, bound=3):
    return GaussianRational(Fraction(rng.randint(-bound, bound), rng.randint(1, bound)),
                            Fraction(rng.randint(-bound, bound), rng.randint(1, bound)))


def random_series(rng, frame, precision, degree, density=0.5):
    coeffs = {}
    for exponent in exponents_up_to(frame.arity, min(degree, precision - 1)):
        if rng.random() < density:
            coeffs[exponent] = random_gaussian(rng)
    return TruncatedSeries.from_dict(frame, precision, coeffs)


def random_field(rng, precision, degree, frame=INTRINSIC):
    return FormalVectorField(tuple(random_series(rng, frame, precision, degree)
                                   for _ in range(frame.arity)))


def seeded(seed):
    return random.Random(seed)
