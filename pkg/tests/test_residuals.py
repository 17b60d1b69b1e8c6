import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from addcubic import (ABS_COEFFICIENT_SUM, DimensionMismatchError,
                      ModeMismatchError, additive_residual, cubic_residual,
                      double_arg_residual, linearity_residual, mixed_residual,
                      model_1d, cubic_1d, even_1d, linear_1d, odd_part, point,
                      random_cubic, random_linear, random_point, FuncModel)

rationals = st.fractions(min_value=-10, max_value=10, max_denominator=8)


def scalar(residual):
    assert residual.value.dim == 1
    return residual.value.coords[0]


# ---------------------------------------------------------------------------
# Difference operator
# ---------------------------------------------------------------------------

def test_mixed_residual_zero_on_additive():
    f = model_1d(linear_1d(1))
    assert mixed_residual(f, point([1]), point([2])).is_zero
    # oracle confirms on the plain-callable path
    assert oracles.mixed(lambda t: t, Fraction(1), Fraction(2)) == 0


def test_mixed_residual_zero_on_cubic():
    f = model_1d(cubic_1d(1))
    assert mixed_residual(f, point([1]), point([2])).is_zero
    assert oracles.mixed(lambda t: t ** 3, Fraction(1), Fraction(2)) == 0


def test_mixed_residual_even_model_frozen_value():
    frozen = Fraction(-16)
    assert oracles.mixed(lambda t: t * t, Fraction(1), Fraction(1)) == frozen
    f = model_1d(even_1d(1))
    assert scalar(mixed_residual(f, point([1]), point([1]))) == frozen


def test_mixed_residual_magnitude_and_dim_check():
    f = model_1d(even_1d(1))
    r = mixed_residual(f, point([1]), point([1]))
    assert r.magnitude == 16.0
    with pytest.raises(DimensionMismatchError):
        mixed_residual(f, point([1, 2]), point([1, 2]))
    with pytest.raises(ModeMismatchError):
        mixed_residual(f, point([1]), point([1.0], mode="float"))


def test_abs_coefficient_sum():
    assert ABS_COEFFICIENT_SUM == 76


# ---------------------------------------------------------------------------
# Additive and cubic rules
# ---------------------------------------------------------------------------

def test_additive_rule_examples():
    f = model_1d(linear_1d(5))
    assert additive_residual(f, point([1]), point([2])).is_zero
    assert additive_residual(f, point([-3]), point([7])).is_zero

    frozen = Fraction(48)  # 192 - 64 - 96 + 24 - 8
    assert oracles.additive_rule(lambda t: t ** 3, Fraction(1), Fraction(1)) == frozen
    cubic = model_1d(cubic_1d(1))
    assert scalar(additive_residual(cubic, point([1]), point([1]))) == frozen


def test_cubic_rule_examples():
    cubic = model_1d(cubic_1d(1))
    assert cubic_residual(cubic, point([1]), point([2])).is_zero  # 1029-125-312+48-640
    assert oracles.cubic_rule(lambda t: t ** 3, Fraction(1), Fraction(2)) == 0

    frozen = Fraction(-48)  # 12 - 4 - 24 + 48 - 80
    assert oracles.cubic_rule(lambda t: t, Fraction(1), Fraction(1)) == frozen
    lin = model_1d(linear_1d(1))
    assert scalar(cubic_residual(lin, point([1]), point([1]))) == frozen

    doubled = model_1d(cubic_1d(2))
    assert cubic_residual(doubled, point([-1]), point([3])).is_zero


def test_double_arg_examples():
    assert double_arg_residual(model_1d(linear_1d(1)), point([1])).is_zero
    assert double_arg_residual(model_1d(cubic_1d(1)), point([1])).is_zero
    frozen = Fraction(-8)  # 16 - 40 + 16
    assert oracles.double_arg(lambda t: t * t, Fraction(1)) == frozen
    assert scalar(double_arg_residual(model_1d(even_1d(1)), point([1]))) == frozen


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), rationals, rationals)
def test_solution_models_are_in_the_kernel(seed, xv, yv):
    rng = random.Random(seed)
    d = rng.randint(1, 3)
    m = rng.randint(1, 3)
    f = FuncModel(d, m, (random_linear(rng, d, m), random_cubic(rng, d, m)))
    x = random_point(rng, d)
    y = random_point(rng, d)
    assert mixed_residual(f, x, y).is_zero


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_pure_families_satisfy_their_rule(seed):
    rng = random.Random(seed)
    d = rng.randint(1, 2)
    lin = FuncModel(d, d, (random_linear(rng, d, d),))
    cub = FuncModel(d, d, (random_cubic(rng, d, d),))
    x = random_point(rng, d)
    y = random_point(rng, d)
    assert additive_residual(lin, x, y).is_zero
    assert cubic_residual(cub, x, y).is_zero


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), rationals, rationals)
def test_linearity_residual_is_identically_zero(seed, alpha, beta):
    rng = random.Random(seed)
    f = model_1d(random_linear(rng, 1, 1), even_1d(rng.randint(-4, 4)))
    g = model_1d(random_cubic(rng, 1, 1))
    x = random_point(rng, 1)
    y = random_point(rng, 1)
    assert linearity_residual(f, g, alpha, beta, x, y).is_zero


def test_linearity_residual_examples():
    f = model_1d(linear_1d(1))
    g = model_1d(cubic_1d(1))
    x, y = point([1]), point([2])
    assert linearity_residual(f, g, 0, 0, x, y).is_zero
    assert linearity_residual(f, g, 2, -1, x, y).is_zero
    # two copies of the even model double the residual: -32 = 2 * (-16)
    sq = model_1d(even_1d(1))
    combined = mixed_residual(model_1d(even_1d(1), even_1d(1)),
                              point([1]), point([1]))
    assert scalar(combined) == Fraction(-32)
    assert linearity_residual(sq, sq, 1, 1, point([1]), point([1])).is_zero


def test_diagonal_collapse_matches_double_arg_for_odd_models():
    # D(f)(x, x) = 2 [f(4x) - 10 f(2x) + 16 f(x)] for odd f (f(0) = 0)
    rng = random.Random(31)
    for _ in range(25):
        f = model_1d(random_linear(rng, 1, 1), random_cubic(rng, 1, 1))
        fo = odd_part(f)
        x = random_point(rng, 1)
        lhs = mixed_residual(fo, x, x).value
        rhs = 2 * double_arg_residual(fo, x).value
        assert lhs.coords == rhs.coords


def test_residuals_accept_plain_callables():
    fo = odd_part(model_1d(even_1d(1), linear_1d(2)))
    assert mixed_residual(fo, point([1]), point([4])).is_zero


def test_float_mode_residuals_small_on_solutions():
    rng = random.Random(8)
    for _ in range(50):
        f = FuncModel(2, 2, (random_linear(rng, 2, 2), random_cubic(rng, 2, 2)))
        x = random_point(rng, 2).to_mode("float")
        y = random_point(rng, 2).to_mode("float")
        assert mixed_residual(f, x, y).magnitude <= 1e-9
