"""Exchangeable-pair diagnostics for cluster weights.

The pair (W, W') resamples one uniformly chosen hyperedge coupling. For a
cluster weight W_c = sum_{Gamma in S_c} omega(Gamma),

    Delta W = (omega'_I - omega_I) R_I,   R_i = sum_{Pi in S_c^{-i}} omega(Pi),

where S_c^{-i} collects Gamma minus i over the members Gamma that contain i.
The conditional mean E[Delta W | omega] is -lambda W with lambda = k / |E|;
the conditional variance and third absolute moment are checked numerically.
"""

import math
from dataclasses import dataclass

import numpy as np

from .census import ClusterStructure, cluster_members, profile_members, structure
from .errors import DomainError
from .partition import DisorderSample, beta_np_squared, draw_couplings, fit_loglog


@dataclass(frozen=True)
class SteinConfig:
    spec: object
    structures: tuple
    beta: float
    distribution: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "structures", tuple(structure(c) for c in self.structures))
        for c in self.structures:
            for p in c.orders:
                if p not in self.spec.orders:
                    raise DomainError(f"structure {c} uses p={p}, absent from the model")

    @property
    def pool(self):
        """Edge sizes whose couplings the dynamics resamples."""
        return tuple(sorted({p for c in self.structures for p in c.orders}))


def _flat_omega(sample, beta, pool):
    omega = sample.omega(beta)
    offsets, parts, off = {}, [], 0
    for p in pool:
        offsets[p] = off
        parts.append(omega[p])
        off += len(omega[p])
    return np.concatenate(parts), offsets


def leave_one_out(c, sample, beta, pool, members=None):
    """Per-edge R_i, Q_i = sum omega(Pi)^2 and |S^{-i}|, over the flattened pool.

    Products of the remaining edges are formed directly (no division), so
    zero couplings are handled exactly.
    """
    c = structure(c)
    N = sample.N
    if members is None:
        members = cluster_members(N, c)
    flat, offsets = _flat_omega(sample, beta, pool)
    idx = np.stack([members[:, j] + offsets[p] for j, p in enumerate(c.slots)], axis=1) if members.size else members
    vals = flat[idx] if members.size else np.zeros((0, c.k))
    R = np.zeros(flat.size)
    Q = np.zeros(flat.size)
    cnt = np.zeros(flat.size)
    k = c.k
    for j in range(k):
        others = np.ones(vals.shape[0])
        for l in range(k):
            if l != j:
                others = others * vals[:, l]
        np.add.at(R, idx[:, j], others)
        np.add.at(Q, idx[:, j], others**2)
        np.add.at(cnt, idx[:, j], 1)
    W = float(np.sum(np.prod(vals, axis=1))) if vals.size else 0.0
    return flat, R, Q, cnt, W


@dataclass(frozen=True)
class LinearityRow:
    structure: str
    W: float
    lhs: float
    rhs: float
    lam: float
    residual: float

    @property
    def ok(self):
        return self.residual <= 1e-10 * (1 + abs(self.W))


def linearity_check(cfg, sample):
    """E[Delta W_c | omega] against -lambda W_c for each structure in the config.

    The left side is averaged analytically over the resampled edge and the
    fresh coupling (mean zero): -(1/|E|) sum_i omega_i R_i.
    """
    rows = []
    pool = cfg.pool
    n_pool = sum(math.comb(sample.N, p) for p in pool)
    for c in cfg.structures:
        flat, R, _, _, W = leave_one_out(c, sample, cfg.beta, pool)
        lhs = -math.fsum((flat * R).tolist()) / n_pool
        lam = c.k / n_pool
        rhs = -lam * W
        rows.append(LinearityRow(str(c), W, lhs, rhs, lam, abs(lhs - rhs)))
    return rows


def linearity_by_profile(spec, beta, sample, p):
    """Linearity for each intersection-profile piece W_{4,delta} of ((4, p); 0), odd p.

    Every member has four edges, so the identity holds piece by piece with the
    same lambda = 4 / N_p.
    """
    c = ClusterStructure.pure(4, p, 0)
    n_pool = math.comb(sample.N, p)
    rows = []
    for prof, members in profile_members(sample.N, p).items():
        flat, R, _, _, W = leave_one_out(c, sample, beta, (p,), members)
        lhs = -math.fsum((flat * R).tolist()) / n_pool
        lam = 4 / n_pool
        rows.append(LinearityRow(f"{c} delta={prof}", W, lhs, -lam * W, lam, abs(lhs + lam * W)))
    return rows


def _omega_variance(cfg, N, p):
    return beta_np_squared(cfg.beta, N, p, cfg.distribution, cfg.spec.coefficient(p))


def abcd_terms(c, sample, cfg, members=None):
    """The four pieces of N_p (E[(Delta W)^2 | omega] - E (Delta W)^2), pure edge size.

    Returns a dict with A, B, C, D, the directly computed left side and the
    recombination A + 2 b^2 B + 2 C + 4 b^2 D (b^2 = Var omega_e).
    """
    c = structure(c)
    if len(c.orders) != 1:
        raise DomainError("the A/B/C/D split is implemented for a single edge size")
    p = c.orders[0]
    N = sample.N
    b2 = _omega_variance(cfg, N, p)
    flat, R, Q, cnt, _ = leave_one_out(c, sample, cfg.beta, (p,), members)
    xi = flat**2 - b2
    k = c.k
    A = float(np.sum(xi * Q))
    B = float(np.sum(Q) - np.sum(cnt) * b2 ** (k - 1))
    cross = (R**2 - Q) / 2
    C = float(np.sum(xi * cross))
    D = float(np.sum(cross))
    n_p = flat.size
    size = np.sum(cnt) / k
    cond = float(np.sum((flat**2 + b2) * R**2))  # N_p E[(Delta W)^2 | omega]
    uncond = 2 * k * b2**k * size
    return {"A": A, "B": B, "C": C, "D": D, "lhs": cond - uncond,
            "recombined": A + 2 * b2 * B + 2 * C + 4 * b2 * D, "nu2": size * b2**k, "N_p": n_p}


@dataclass(frozen=True)
class DiagnosticReport:
    structure: str
    Ns: tuple
    values: dict  # name -> list over Ns of normalised second moments
    exponents: dict
    targets: dict
    slack: float
    status: str


def conditional_variance_diagnostic(cfg, Ns, replicas, seed=0, c=None):
    """Decay of ||A||^2, ||B||^2, ||C||^2, ||D||^2 (each over nu^4) in N.

    The fitted log-log slope of the normalised ||A||^2 is compared with -p
    (slack 1); the status is ``warn`` when it misses.
    """
    c = structure(c if c is not None else cfg.structures[0])
    p = c.orders[0]
    vals = {k: [] for k in "ABCD"}
    for N in Ns:
        members = cluster_members(N, c)
        acc = {k: [] for k in "ABCD"}
        nu2 = None
        for r in range(replicas):
            s = DisorderSample.draw(cfg.spec, N, cfg.distribution, seed, r)
            t = abcd_terms(c, s, cfg, members)
            nu2 = t["nu2"]
            for k in "ABCD":
                acc[k].append(t[k])
        for k in "ABCD":
            vals[k].append(float(np.mean(np.square(acc[k]))) / nu2**2)
    exps = {k: fit_loglog(Ns, v).slope if all(x > 0 for x in v) else -math.inf for k, v in vals.items()}
    targets = {"A": -p}
    status = "ok" if exps["A"] <= -p + 1.0 else "warn"
    return DiagnosticReport(str(c), tuple(Ns), vals, exps, targets, 1.0, status)


def third_moment_diagnostic(cfg, Ns, replicas, seed=0, draws=64, c=None):
    """Monte Carlo N_p E|Delta W|^3 / nu^3 and its decay exponent (target -p/2, slack 0.75).

    For each replica the resampled edge I and the fresh coupling are drawn
    ``draws`` times.
    """
    c = structure(c if c is not None else cfg.structures[0])
    if len(c.orders) != 1:
        raise DomainError("single edge size expected")
    p = c.orders[0]
    vals = []
    for N in Ns:
        members = cluster_members(N, c)
        b2 = _omega_variance(cfg, N, p)
        est = []
        nu2 = None
        for r in range(replicas):
            s = DisorderSample.draw(cfg.spec, N, cfg.distribution, seed, r)
            flat, R, _, cnt, _ = leave_one_out(c, s, cfg.beta, (p,), members)
            nu2 = np.sum(cnt) / c.k * b2**c.k
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(N, r, 1)))
            I = rng.integers(0, flat.size, size=draws)
            J = draw_couplings(rng, cfg.distribution, draws)
            fresh = N ** ((p - 1) / 2) * np.tanh(cfg.beta * cfg.spec.coefficient(p) * J / N ** ((p - 1) / 2))
            dW = (fresh - flat[I]) * R[I]
            est.append(float(np.mean(np.abs(dW) ** 3)))
        vals.append(flat.size * float(np.mean(est)) / nu2**1.5)
    exp = fit_loglog(Ns, vals).slope
    status = "ok" if abs(exp + p / 2) <= 0.75 else "warn"
    return DiagnosticReport(str(c), tuple(Ns), {"third": vals}, {"third": exp}, {"third": -p / 2}, 0.75, status)
