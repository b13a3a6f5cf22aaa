import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glasslab.errors import DomainError, SpecError
from glasslab.hermite import (
    bell_polynomial,
    gauss_hermite_expectation,
    gaussian_moment_oracle,
    hermite,
    hermite_coefficients,
    hermite_explicit,
    poly_mul,
    poly_pow,
)
from glasslab.model import ExternalField, MixtureSpec, binary_entropy, xi_eval

thetas = st.dictionaries(st.integers(2, 12), st.floats(0.01, 3.0), min_size=1, max_size=4)


# ---------------------------------------------------------------- MixtureSpec


def test_derived_orders():
    s = MixtureSpec({3: 1.0, 4: 0.5, 7: 0.2, 2: 0.0})
    assert (s.p_e, s.p_o, s.p_m) == (4, 3, 3)
    assert MixtureSpec({6: 1}).p_o is None
    # p = 2 is not an "effective even" order
    assert MixtureSpec({2: 1, 5: 1}).p_e is None


def test_spec_rejections():
    for bad in ({}, {3: 0.0}, {1: 1.0}, {3: -1.0}, {3: float("nan")}, {"x": 1.0}):
        with pytest.raises(SpecError):
            MixtureSpec(bad)


def test_json_schema():
    s = MixtureSpec.from_json('{"theta": {"3": 1.0, "4": 0.5}}')
    assert s.theta == {3: 1.0, 4: 0.5}
    assert MixtureSpec.from_json(s.to_json()) == s
    with pytest.raises(SpecError):
        MixtureSpec.from_json('{"theta": {"3": 1.0}, "extra": 1}')
    with pytest.raises(SpecError):
        MixtureSpec.from_json("{not json")


@given(thetas)
def test_json_round_trip_idempotent(theta):
    s = MixtureSpec(theta) if any(v > 0 for v in theta.values()) else None
    if s is None:
        return
    once = s.to_json()
    assert MixtureSpec.from_json(once).to_json() == once


# ---------------------------------------------------------------- xi and I


def test_xi_examples():
    assert xi_eval(MixtureSpec({3: 1}), 1.0) == pytest.approx(1 / 6)
    assert xi_eval(MixtureSpec({2: 1}), 0.5) == pytest.approx(0.125)
    assert xi_eval(MixtureSpec({3: 1, 4: 2}), 0.0) == 0.0
    with pytest.raises(DomainError):
        xi_eval(MixtureSpec({3: 1}), 1.5)


def test_xi_derivatives_match_finite_differences():
    s = MixtureSpec({3: 1.0, 4: 0.7})
    v, d1, d2 = xi_eval(s, 0.6, derivatives=True)
    h = 1e-5
    assert d1 == pytest.approx((xi_eval(s, 0.6 + h) - xi_eval(s, 0.6 - h)) / (2 * h), rel=1e-8)
    assert d2 == pytest.approx((xi_eval(s, 0.6 + h) - 2 * v + xi_eval(s, 0.6 - h)) / h**2, rel=1e-4)


@given(thetas)
@settings(max_examples=50)
def test_xi_monotone_on_unit_interval(theta):
    grid = np.linspace(0, 1, 1000)
    v = xi_eval(MixtureSpec(theta), grid)
    assert np.all(np.diff(v) >= 0)
    assert np.all(v <= v[-1])


def test_entropy_examples():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == pytest.approx(math.log(2), abs=1e-15)
    assert binary_entropy(-1.0) == pytest.approx(math.log(2), abs=1e-15)
    series10 = sum(0.5 ** (2 * k) / (2 * k * (2 * k - 1)) for k in range(1, 11))
    assert binary_entropy(0.5) == pytest.approx(series10, rel=1e-8)
    series = math.fsum(0.5 ** (2 * k) / (2 * k * (2 * k - 1)) for k in range(1, 40))
    assert binary_entropy(0.5) == pytest.approx(series, rel=1e-14)
    assert binary_entropy(0.5) == pytest.approx(0.130812, abs=1e-6)
    with pytest.raises(DomainError):
        binary_entropy(1.0001)


def test_entropy_bounds_on_grid():
    x = np.linspace(0, 1, 2001)
    i = binary_entropy(x)
    assert np.all(i >= x**2 / 2 - 1e-16)
    assert np.all(i <= x**2 / 2 * (1 + x**2 / 2) + 1e-16)


@given(st.floats(-1, 1))
def test_entropy_even(x):
    assert binary_entropy(x) == pytest.approx(binary_entropy(-x), abs=1e-15)


def test_entropy_series_branch_continuous():
    # the series/closed-form switch sits at |x| = 0.05
    a, b = binary_entropy(0.05 - 1e-12), binary_entropy(0.05 + 1e-12)
    slope = math.atanh(0.05)
    # the closed form loses ~1e-14 relative to cancellation at this size
    assert abs(b - a - 2e-12 * slope) < 1e-13 * a


# ---------------------------------------------------------------- field


@given(st.floats(0.1, 5), st.floats(0.25, 3))
def test_field_invariants(rho, alpha):
    f = ExternalField(rho, alpha)
    hs = [f.h(N) for N in range(1, 60)]
    assert all(a >= b for a, b in zip(hs, hs[1:]))
    for N in (1, 7, 40):
        assert 0 <= f.h_hat(N) < 1
        assert math.atanh(f.h_hat(N) ** 2) <= f.h(N) ** 2 + 1e-15


def test_zero_field():
    f = ExternalField.zero()
    assert f.is_zero and f.h(10) == 0.0 and f.h_hat(10) == 0.0
    assert ExternalField.from_dict(f.to_dict()) == f
    with pytest.raises(SpecError):
        ExternalField(1.0, 0.2)
    with pytest.raises(SpecError):
        ExternalField(0.0, 1.0)


# ---------------------------------------------------------------- Hermite and the moment oracle


def test_hermite_low_orders():
    assert hermite_coefficients(3) == (0, -3, 0, 1)
    assert hermite_coefficients(4) == (3, 0, -6, 0, 1)


def test_recurrence_matches_explicit():
    x = np.linspace(-5, 5, 101)
    for k in range(13):
        a, b = hermite(k, x), hermite_explicit(k, x)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.max(np.abs(b)))


def test_oracle_examples():
    assert gaussian_moment_oracle([0, 0, 1]) == 1
    h3 = hermite_coefficients(3)
    h4 = hermite_coefficients(4)
    assert gaussian_moment_oracle(poly_pow(h3, 4)) == 3348
    assert gaussian_moment_oracle(poly_pow(h4, 3)) == 1728


def test_oracle_orthogonality():
    for j in range(11):
        for k in range(11):
            val = gaussian_moment_oracle(poly_mul(hermite_coefficients(j), hermite_coefficients(k)))
            assert val == (math.factorial(k) if j == k else 0)


def test_oracle_limits():
    with pytest.raises(DomainError):
        gaussian_moment_oracle([0] * 65 + [1])
    with pytest.raises(OverflowError):
        gaussian_moment_oracle([0] * 64 + [1], bit_budget=64)
    assert gaussian_moment_oracle([Fraction(1, 3), 5, Fraction(2, 3)]) == 1


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=30))
def test_quadrature_agrees_with_oracle(coeffs):
    exact = gaussian_moment_oracle(coeffs)
    approx = gauss_hermite_expectation(lambda x: np.polynomial.polynomial.polyval(x, coeffs), len(coeffs) - 1)
    assert approx == pytest.approx(float(exact), rel=1e-9, abs=1e-9 * max(1, abs(float(exact))))


def test_bell_matches_hermite():
    # H_p(x) = B_p(x, -1, 0, ..., 0)
    for p in range(8):
        for x in (-1.3, 0.0, 0.7, 2.1):
            args = [x, -1.0] + [0.0] * max(0, p - 2)
            assert bell_polynomial(p, args) == pytest.approx(hermite(p, x), abs=1e-10)


def test_spec_file_round_trip(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"theta": {"3": 1.0}}))
    assert MixtureSpec.from_json(path.read_text()).p_o == 3
