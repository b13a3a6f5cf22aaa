import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from glasslab.critical import (
    MultiSpeciesSpec,
    beta_c,
    golden_section,
    multi_species_beta_c,
    phi,
    phi_inverse_beta_c,
    sweep,
    talagrand_lower_bound,
)
from glasslab.errors import DomainError, SpecError
from glasslab.model import MixtureSpec, binary_entropy, xi_eval


def dense_oracle(spec, n=200_001):
    # independent brute-force scan of I/xi, with a geometric tail toward 0 and 1
    x = np.unique(np.concatenate([np.linspace(1e-6, 1 - 1e-6, n), np.geomspace(1e-8, 1e-2, 2000),
                                  1 - np.geomspace(1e-14, 1e-2, 2000)]))
    r = binary_entropy(x) / xi_eval(spec, x)
    return math.sqrt(r.min())


def test_sk_value_and_boundary():
    res = beta_c(MixtureSpec({2: 1.0}))
    assert res.beta_c == pytest.approx(1.0, abs=1e-3)
    assert res.boundary == "boundary-zero"
    assert dense_oracle(MixtureSpec({2: 1.0})) == pytest.approx(1.0, abs=1e-3)


def test_sk_scaled_coefficient():
    # beta_c(theta_2 = t) = 1 / t
    assert beta_c(MixtureSpec({2: 2.0})).beta_c == pytest.approx(0.5, rel=1e-9)


@pytest.mark.parametrize("p", [3, 4, 5, 8])
def test_pure_matches_dense_oracle(p):
    spec = MixtureSpec.pure(p)
    assert beta_c(spec).beta_c == pytest.approx(dense_oracle(spec), rel=1e-6)


def test_frozen_pure_values():
    # frozen after agreement with the dense oracle and the phi-inverse route
    assert beta_c(MixtureSpec.pure(3)).beta_c == pytest.approx(2.0081107330526, rel=1e-10)
    assert beta_c(MixtureSpec.pure(4)).beta_c == pytest.approx(4.0658618981430, rel=1e-10)


@pytest.mark.parametrize("p", range(3, 13))
def test_phi_inverse_agrees(p):
    grid = beta_c(MixtureSpec.pure(p))
    alt = phi_inverse_beta_c(p)
    assert abs(grid.beta_c - alt.beta_c) <= 1e-6 * max(1.0, grid.beta_c)
    assert alt.residual <= 1e-8


def test_phi_inverse_p3_residual():
    r = phi_inverse_beta_c(3)
    assert 0 < r.x_star < 1
    assert abs(phi(r.x_star) - 3) <= 1e-10


def test_phi_limits_and_monotone():
    assert phi(0.0) == 2.0
    x = np.linspace(0, 1 - 1e-6, 2048)
    assert np.all(np.diff(phi(x)) > 0)
    with pytest.raises(DomainError):
        phi_inverse_beta_c(2)
    with pytest.raises(DomainError):
        phi(1.0)


def test_scaled_limit_is_sqrt_ln2():
    # with xi = x^p / p! the ratio tends to I(1) = ln 2
    rows = sweep([12, 20, 30])
    assert rows[-1]["beta_c_scaled"] == pytest.approx(math.sqrt(math.log(2)), abs=1e-9)


def test_talagrand_limit_and_ratio():
    t = talagrand_lower_bound(30) / math.sqrt(math.factorial(30))
    assert t == pytest.approx(math.sqrt(2 * math.log(2)), abs=0.05)
    # the bound sits a factor sqrt(2) above the second-moment value as p grows
    ratio = talagrand_lower_bound(30) / beta_c(MixtureSpec.pure(30)).beta_c
    assert ratio == pytest.approx(math.sqrt(2), rel=1e-6)


def test_sweep_is_monotone():
    rows = sweep(range(3, 31))
    scaled = np.array([r["beta_c_scaled"] for r in rows])
    assert np.all(np.diff(scaled) >= -1e-6)


@given(st.dictionaries(st.integers(3, 9), st.floats(0.05, 3.0), min_size=1, max_size=3))
@settings(max_examples=25, deadline=None)
def test_feasibility(theta):
    spec = MixtureSpec(theta)
    b = beta_c(spec).beta_c
    x = np.linspace(1e-4, 1, 10_000)
    assert np.max(b**2 * xi_eval(spec, x) - binary_entropy(x)) <= 1e-6


def test_golden_section_quadratic():
    x, fx = golden_section(lambda t: (t - 0.3) ** 2 + 1, 0, 1, tol=1e-12)
    # function values resolve x only to about sqrt(machine epsilon)
    assert x == pytest.approx(0.3, abs=1e-7)
    assert fx == pytest.approx(1.0)


# ---------------------------------------------------------------- multi-species


def test_multi_single_species_is_sk():
    r = multi_species_beta_c(MultiSpeciesSpec((1.0,), {2: [[1.0]]}))
    assert r.beta_c == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("lam", [(0.5, 0.5), (0.3, 0.7)])
def test_multi_all_ones_collapses(lam):
    # convexity of I makes every lambda reduce to the single-species SK value
    r = multi_species_beta_c(MultiSpeciesSpec(lam, {2: [[1, 1], [1, 1]]}))
    assert r.beta_c == pytest.approx(1.0, abs=1e-3)


def test_multi_matches_grid_oracle():
    d3 = [[[1, 0.5], [0.5, 0.2]], [[0.5, 0.2], [0.2, 3]]]
    ms = MultiSpeciesSpec((0.3, 0.7), {3: d3})
    lam = np.array(ms.lam)

    def ratio(x):
        return float(np.dot(lam, binary_entropy(np.asarray(x)))) / ms.xi(x)

    g = np.linspace(0.005, 1, 200)
    vals = np.array([[ratio((a, b)) for b in g] for a in g])
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    polished = minimize(ratio, (g[i], g[j]), method="Nelder-Mead", bounds=[(1e-6, 1)] * 2,
                        options={"xatol": 1e-12, "fatol": 1e-15})
    r = multi_species_beta_c(ms)
    assert r.beta_c <= math.sqrt(vals.min()) + 1e-9
    assert r.beta_c == pytest.approx(math.sqrt(polished.fun), rel=1e-6)


def test_multi_boundary_limit():
    # a cubic term would always win in the interior; a weak quartic one cannot
    ms = MultiSpeciesSpec((0.5, 0.5), {2: [[2.0, 0.0], [0.0, 1.0]], 4: np.full((2,) * 4, 0.1).tolist()})
    r = multi_species_beta_c(ms)
    assert r.boundary == "boundary-zero"
    assert r.beta_c == pytest.approx(1.0, rel=1e-9)  # 1 / sqrt(lambda_max) with lambda_max = 0.5 * 2


def test_multi_spec_validation():
    with pytest.raises(SpecError):
        MultiSpeciesSpec((0.5, 0.6), {2: [[1, 0], [0, 1]]})
    with pytest.raises(SpecError):
        MultiSpeciesSpec((0.5, 0.5), {2: [[1, 0.2], [0.3, 1]]})
    with pytest.raises(SpecError):
        MultiSpeciesSpec((0.5, 0.5), {2: [[1, -1], [-1, 1]]})
    with pytest.raises(SpecError):
        MultiSpeciesSpec.from_dict({"lambda": [1.0]})
    ms = MultiSpeciesSpec.from_dict({"lambda": [0.4, 0.6], "delta2": {"2": [[1, 0.5], [0.5, 1]]}})
    assert MultiSpeciesSpec.from_dict(ms.to_dict()).to_dict() == ms.to_dict()


def test_multi_deterministic():
    ms = MultiSpeciesSpec((0.3, 0.7), {2: [[1, 0.3], [0.3, 2]], 3: np.ones((2, 2, 2)).tolist()})
    assert multi_species_beta_c(ms, seed=3) == multi_species_beta_c(ms, seed=3)
