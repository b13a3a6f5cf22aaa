import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glasslab.census import (
    ClusterStructure,
    bell_asymptotic_check,
    closed_form_count,
    cluster_members,
    count_clusters,
    edge_table,
    enumerate_clusters,
    enumerate_member_indices,
    intersection_profiles,
    is_realizable,
    profile_census,
    profile_closed_form,
    supported_templates,
    type_count,
    u_constant,
    v_constant,
)
from glasslab.errors import BudgetError, DomainError, SpecError, UnsupportedTemplateError

S = ClusterStructure.parse


def naive_count(N, c):
    # independent oracle: itertools over edge tuples, odd-degree vertex count by Counter
    pools = {p: list(itertools.combinations(range(N), p)) for p in c.orders}
    choices = [itertools.combinations(pools[p], a) for a, p in c.edges]
    n = 0
    for combo in itertools.product(*choices):
        deg = Counter(v for group in combo for e in group for v in e)
        if sum(d % 2 for d in deg.values()) == c.odd:
            n += 1
    return n


# ---------------------------------------------------------------- the structure type


def test_parse_forms():
    assert S("2x3;l=2") == ClusterStructure(((2, 3),), 2)
    assert S("(2,3);l=2") == S("2x3;l=2")
    c = S("1x4,2x5;l=0")
    assert (c.k, c.t, c.slots) == (3, 7, (4, 5, 5))
    assert str(c) == "1x4,2x5;l=0"
    assert S(str(c)) == c
    for bad in ("2x3", "2y3;l=1", "x;l=0", "1x2;l=2"):
        with pytest.raises(SpecError):
            S(bad)


def test_parity_rejected_on_construction():
    with pytest.raises(SpecError):
        ClusterStructure(((1, 3),), 2)
    c = ClusterStructure(((1, 3),), 2, allow_odd_parity=True)
    assert count_clusters(6, c) == 0
    assert len(enumerate_clusters(6, c)) == 0


@given(st.integers(1, 3), st.integers(3, 6), st.integers(0, 12))
def test_t_formula(a, p, ell):
    if (a * p + ell) % 2 or ell > a * p:
        return
    c = ClusterStructure(((a, p),), ell)
    assert c.t == (a * p + ell) // 2


# ---------------------------------------------------------------- enumeration


def test_enumeration_examples():
    assert count_clusters(6, S("1x3;l=3")) == 20
    assert count_clusters(6, S("2x3;l=2")) == 90 == math.comb(6, 4) * math.comb(4, 2)
    assert count_clusters(8, S("2x4;l=0")) == 0


@pytest.mark.parametrize("text,N", [("2x3;l=2", 6), ("3x3;l=1", 6), ("2x4;l=2", 6), ("4x3;l=0", 6),
                                    ("1x3,1x4;l=1", 6), ("3x4;l=0", 6), ("2x3;l=4", 5)])
def test_enumeration_matches_naive(text, N):
    c = S(text)
    assert count_clusters(N, c) == naive_count(N, c)


def test_enumeration_order_is_lexicographic():
    rows = enumerate_clusters(7, S("2x3;l=2"))
    keys = [tuple(r) for r in rows]
    assert keys == sorted(keys)


def test_budget_error():
    with pytest.raises(BudgetError) as err:
        count_clusters(30, S("4x5;l=0"), budget=1e6)
    assert err.value.required > err.value.limit


# ---------------------------------------------------------------- closed forms


def test_closed_form_examples():
    assert closed_form_count(6, S("2x3;l=2")) == 90
    assert closed_form_count(10, S("1x3;l=3")) == 120
    assert closed_form_count(12, S("3x4;l=0")) == count_clusters(12, S("3x4;l=0"), canonical=True)


def test_two_edge_template():
    for p in (3, 4, 5, 6):
        for N in (p + 1, 9, 20):
            assert closed_form_count(N, ClusterStructure.pure(2, p, 2)) == math.comb(N, p + 1) * math.comb(p + 1, 2)


@pytest.mark.parametrize("c", supported_templates((3, 4, 5)) + [S("1x4,2x5;l=0"), S("1x4,1x5;l=1"),
                                                                  S("1x4,1x3;l=1"), S("1x6,2x5;l=0")],
                         ids=str)
def test_templates_match_canonical_enumeration(c):
    top = 9 if c.k == 4 and max(c.orders) >= 5 else 10
    for N in range(max(c.orders), top + 1):
        assert closed_form_count(N, c) == count_clusters(N, c, canonical=True), N


def test_noncanonical_members_exist():
    # three triangles through one hub vertex: degree 3, so odd but not of degree 1
    c = S("3x3;l=1")
    assert count_clusters(7, c) > count_clusters(7, c, canonical=True)
    assert closed_form_count(7, c, canonical=False) == count_clusters(7, c)


def test_unsupported_template():
    with pytest.raises(UnsupportedTemplateError):
        closed_form_count(10, S("2x3;l=6"))


def test_type_count_matches_enumeration():
    for text in ("2x3;l=2", "3x3;l=1", "4x3;l=0", "1x4,2x5;l=0", "2x4;l=4"):
        c = S(text)
        for canonical in (False, True):
            assert type_count(9, c, canonical) == count_clusters(9, c, canonical=canonical)


@given(st.integers(1, 3), st.sampled_from([3, 4, 5]), st.integers(0, 8))
@settings(max_examples=30, deadline=None)
def test_type_count_property(a, p, ell):
    if (a * p + ell) % 2 or ell > a * p:
        return
    c = ClusterStructure(((a, p),), ell)
    assert type_count(8, c) == count_clusters(8, c)


def test_asymptotic_convergence_to_u2():
    # |S_c| / N^t - u^2 = O(1/N) for the canonical templates
    for c in (S("2x3;l=2"), S("3x4;l=0"), S("4x3;l=0"), S("3x5;l=1"), S("1x4,2x5;l=0")):
        u2 = float(u_constant(c).exact)
        Ns = [50, 100, 200, 400]
        err = [float(Fraction(closed_form_count(N, c), N**c.t)) - u2 for N in Ns]
        C = np.abs(np.array(err) * Ns)
        assert C.max() < 100 and C[-1] <= C[0] * 1.5


# ---------------------------------------------------------------- profiles


def test_profiles():
    assert intersection_profiles(3) == [(2, 1, 0), (1, 1, 1)]
    p5 = set(intersection_profiles(5))
    assert {(2, 2, 1), (3, 2, 0), (4, 1, 0), (3, 1, 1)} <= p5
    assert all(x + y + z == 5 and x >= y >= z >= 0 and y > 0 for x, y, z in p5)
    with pytest.raises(DomainError):
        intersection_profiles(4)


@pytest.mark.parametrize("p,N", [(3, 6), (3, 8), (3, 10), (5, 10)])
def test_profile_partition(p, N):
    census = profile_census(N, p)
    assert sum(census.values()) == count_clusters(N, ClusterStructure.pure(4, p, 0), canonical=True)
    for prof in intersection_profiles(p):
        assert census.get(prof, 0) == profile_closed_form(N, p, prof)


def test_every_p5_profile_realized():
    census = profile_census(10, 5)
    assert set(census) == set(intersection_profiles(5))


# ---------------------------------------------------------------- members


@pytest.mark.parametrize("text,N", [("2x3;l=2", 8), ("3x3;l=1", 8), ("4x3;l=0", 7), ("1x4,1x5;l=1", 8)])
def test_members_match_enumeration(text, N):
    c = S(text)
    a = cluster_members(N, c)
    b = enumerate_member_indices(N, c)
    assert np.array_equal(a, b)


def test_member_rows_have_right_odd_count():
    c = S("3x3;l=1")
    rows = cluster_members(9, c)
    verts, _ = edge_table(9, 3)
    for r in rows[::37]:
        deg = Counter(int(v) for j in r for v in verts[j])
        assert sum(d % 2 for d in deg.values()) == 1


def test_realizability_agrees_with_enumeration():
    for p in (3, 4, 5):
        for a in (1, 2, 3, 4):
            for ell in range((a * p) % 2, a * p + 1, 2):
                c = ClusterStructure(((a, p),), ell)
                if c.t > 10:
                    continue
                # a canonical member spans exactly t vertices
                assert is_realizable(c) == (count_clusters(c.t, c, canonical=True) > 0), str(c)


# ---------------------------------------------------------------- constants


def test_u_pins():
    assert u_constant(S("3x4;l=0")).exact == Fraction(1, 48)
    assert u_constant(S("2x3;l=2")).exact == Fraction(1, 4)
    assert u_constant(S("1x5;l=5")).exact == Fraction(1, 120)


def test_u_closed_forms_general_p():
    for p in (3, 4, 5, 6, 7):
        assert u_constant(ClusterStructure.pure(2, p, 2)).exact == Fraction(p, 2 * math.factorial(p))
        assert u_constant(ClusterStructure.pure(1, p, p)).exact == Fraction(1, math.factorial(p))
    for p in (4, 6):
        assert u_constant(ClusterStructure.pure(3, p, 0)).exact == Fraction(1, 6 * math.factorial(p // 2) ** 3)


def test_u_routes_agree():
    for c in supported_templates((3, 4, 5, 6, 7)) + [S("1x4,2x5;l=0"), S("1x6,1x7;l=1")]:
        u = u_constant(c)
        assert abs(u.quadrature - float(u.exact)) <= 1e-10


def test_v_pins():
    beta = 0.7
    assert v_constant(S("4x3;l=0"), beta) == pytest.approx(5 * beta**8 / 48, rel=1e-14)
    assert v_constant(S("3x4;l=0"), beta) == pytest.approx(beta**6 / 48, rel=1e-14)
    assert v_constant(S("2x3;l=2"), beta, rho=0.0) == 0.0


def test_u_degree_budget():
    with pytest.raises(DomainError):
        u_constant(ClusterStructure.pure(4, 11, 0))


# ---------------------------------------------------------------- Bell identity


def test_bell_examples():
    r = bell_asymptotic_check(2, 4, spins=np.ones(4))
    assert r.lhs == pytest.approx(3.0) and r.rhs == pytest.approx(3.0)
    r = bell_asymptotic_check(3, 30, seed=1)
    assert r.identity_residual <= 1e-10
    with pytest.raises(DomainError):
        bell_asymptotic_check(1, 10)


def test_bell_tends_to_hermite():
    gaps = [np.mean([bell_asymptotic_check(4, N, seed=s).hermite_gap for s in range(20)]) for N in (10, 40)]
    assert gaps[1] < gaps[0]
