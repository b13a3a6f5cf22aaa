import math

import numpy as np
import pytest

from glasslab.census import ClusterStructure, closed_form_count, enumerate_member_indices
from glasslab.errors import DomainError
from glasslab.model import MixtureSpec
from glasslab.partition import DisorderSample, beta_np_squared, cluster_weight
from glasslab.stein import (
    SteinConfig,
    abcd_terms,
    conditional_variance_diagnostic,
    leave_one_out,
    linearity_by_profile,
    linearity_check,
    third_moment_diagnostic,
)

S = ClusterStructure.parse
P3 = MixtureSpec({3: 1.0})
MIXED = MixtureSpec({3: 1.0, 4: 0.7})


def zeroed_mean_change(c, sample, beta, pool):
    # oracle: W is affine in each omega_i and the fresh coupling has mean zero,
    # so E[W' | omega] averages W with edge i switched off
    N = sample.N
    total, n = 0.0, 0
    for p in pool:
        J = sample.couplings[p]
        for i in range(len(J)):
            mod = {q: v.copy() for q, v in sample.couplings.items()}
            mod[p][i] = 0.0
            total += cluster_weight(c, DisorderSample.from_couplings(sample.spec, N, mod, sample.distribution), beta)
            n += 1
    return total / n - cluster_weight(c, sample, beta)


@pytest.mark.parametrize("text", ["2x3;l=2", "3x3;l=1", "4x3;l=0", "1x4,1x3;l=1"])
def test_linearity_against_direct_recomputation(text):
    c = S(text)
    cfg = SteinConfig(MIXED, (c,), 0.9)
    s = DisorderSample.draw(MIXED, 7, seed=4)
    row = linearity_check(cfg, s)[0]
    assert row.ok
    assert row.lhs == pytest.approx(zeroed_mean_change(c, s, 0.9, cfg.pool), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("N", [8, 10, 12])
def test_linearity_identity(N):
    cfg = SteinConfig(P3, ("2x3;l=2", "3x3;l=1", "4x3;l=0", "1x3;l=3"), 1.2)
    for r in range(3):
        for row in linearity_check(cfg, DisorderSample.draw(P3, N, seed=1, replica=r)):
            assert row.ok, row


def test_lambda_value():
    cfg = SteinConfig(P3, ("3x3;l=1",), 1.0)
    row = linearity_check(cfg, DisorderSample.draw(P3, 10, seed=0))[0]
    assert row.lam == pytest.approx(3 / 120, rel=1e-15)


def test_zero_couplings():
    # products are formed without division, so exact zeros are harmless
    s = DisorderSample.draw(P3, 8, seed=2)
    s.couplings[3][::3] = 0.0
    cfg = SteinConfig(P3, ("2x3;l=2", "4x3;l=0"), 1.0)
    for row in linearity_check(cfg, s):
        assert row.ok and math.isfinite(row.W)


def test_leave_one_out_sizes():
    c = S("2x3;l=2")
    s = DisorderSample.draw(P3, 8, seed=5)
    _, R, _, cnt, W = leave_one_out(c, s, 1.0, (3,))
    assert np.sum(cnt) == c.k * closed_form_count(8, c)
    assert W == pytest.approx(cluster_weight(c, s, 1.0), rel=1e-12)


def test_structure_must_use_model_orders():
    with pytest.raises(DomainError):
        SteinConfig(P3, ("2x4;l=2",), 1.0)


# ---------------------------------------------------------------- conditional variance split


@pytest.mark.parametrize("text", ["2x3;l=2", "3x3;l=1", "4x3;l=0"])
def test_abcd_recombination(text):
    cfg = SteinConfig(P3, (text,), 1.1)
    t = abcd_terms(S(text), DisorderSample.draw(P3, 9, seed=7), cfg)
    assert t["recombined"] == pytest.approx(t["lhs"], rel=1e-10, abs=1e-10 * t["nu2"])


def test_abcd_beta_zero():
    cfg = SteinConfig(P3, ("3x3;l=1",), 0.0)
    t = abcd_terms(S("3x3;l=1"), DisorderSample.draw(P3, 8, seed=7), cfg)
    assert all(t[k] == 0.0 for k in ("A", "B", "C", "D", "lhs"))


def test_abcd_rejects_mixed():
    cfg = SteinConfig(MIXED, ("1x4,1x3;l=1",), 1.0)
    with pytest.raises(DomainError):
        abcd_terms(S("1x4,1x3;l=1"), DisorderSample.draw(MIXED, 7), cfg)


def test_conditional_variance_is_centred():
    # the conditional second moment averages to its unconditional value
    cfg = SteinConfig(P3, ("2x3;l=2",), 1.0)
    c = S("2x3;l=2")
    x = np.array([abcd_terms(c, DisorderSample.draw(P3, 8, seed=3, replica=r), cfg)["lhs"] for r in range(800)])
    assert abs(x.mean()) <= 4 * x.std() / math.sqrt(len(x))


def test_conditional_variance_diagnostic_runs():
    cfg = SteinConfig(P3, ("2x3;l=2",), 1.0)
    rep = conditional_variance_diagnostic(cfg, (8, 10, 12), 30, seed=1)
    assert rep.status in ("ok", "warn")
    assert set(rep.values) == set("ABCD")
    assert all(len(v) == 3 for v in rep.values.values())


# ---------------------------------------------------------------- third moment


def test_third_moment_single_edge_rademacher():
    # k = 1: Delta W = omega' - omega_I, which is 0 or +-2a with equal odds,
    # so N_p E|Delta W|^3 / nu^3 = 4 / sqrt(N_p)
    cfg = SteinConfig(P3, ("1x3;l=3",), 1.0, "rademacher")
    Ns = (8, 12)
    rep = third_moment_diagnostic(cfg, Ns, 20, seed=0, draws=200)
    for N, v in zip(Ns, rep.values["third"]):
        assert v == pytest.approx(4 / math.sqrt(math.comb(N, 3)), rel=0.1)
    # N_p = C(N, 3) is not yet N^3 / 6 here, so the finite-size slope is steeper than -3/2
    exact = -math.log(math.comb(12, 3) / math.comb(8, 3)) / (2 * math.log(1.5))
    assert rep.exponents["third"] == pytest.approx(exact, abs=0.15)


def test_third_moment_rademacher_b2():
    N = 10
    assert beta_np_squared(1.0, N, 3, "rademacher") == pytest.approx((N * math.tanh(1 / N)) ** 2, rel=1e-14)


def test_exchangeable_mean_change_is_zero():
    # E Delta W = -lambda E W = 0 across disorder
    cfg = SteinConfig(P3, ("3x3;l=1",), 1.0)
    lhs = np.array([linearity_check(cfg, DisorderSample.draw(P3, 8, seed=6, replica=r))[0].lhs for r in range(400)])
    assert abs(lhs.mean()) <= 4 * lhs.std() / math.sqrt(len(lhs))


@pytest.mark.parametrize("p,N", [(3, 8), (3, 10), (5, 10)])
def test_linearity_per_profile(p, N):
    spec = MixtureSpec({p: 1.0})
    s = DisorderSample.draw(spec, N, seed=12)
    rows = linearity_by_profile(spec, 1.0, s, p)
    assert all(r.ok for r in rows)
    # profiles split the canonical members (every vertex of degree two)
    c = ClusterStructure.pure(4, p, 0)
    whole = cluster_weight(c, s, 1.0, members=enumerate_member_indices(N, c, canonical=True))
    assert math.fsum(r.W for r in rows) == pytest.approx(whole, rel=1e-10, abs=1e-10)
