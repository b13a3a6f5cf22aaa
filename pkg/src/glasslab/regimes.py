"""Variance exponents of cluster weights and the resulting CLT regimes.

A cluster c = ((a_i, p_i); l) contributes to Var(log Z_hat) at order N^X(c) with

    X(c) = -2 alpha l - sum_i a_i (p_i - 1) + (sum_i a_i p_i + l) / 2.

The dominant clusters maximise X over the realizable candidates with at most
four hyperedges drawn from the two smallest orders (p_e, p_o) of the model,
and gamma = -max X is the variance decay exponent. Everything here is exact
rational arithmetic.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .census import ClusterStructure, is_realizable, structure
from .errors import DomainError
from .model import MixtureSpec

log = logging.getLogger(__name__)

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
MAX_EDGES = 4


def as_alpha(alpha):
    """Coerce alpha to a Fraction, or math.inf for the zero field."""
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, str):
        s = alpha.strip().lower()
        if s in ("inf", "infinity", "+inf"):
            return math.inf
        return Fraction(s)
    if isinstance(alpha, float):
        if math.isinf(alpha) and alpha > 0:
            return math.inf
        if math.isnan(alpha) or math.isinf(alpha):
            raise DomainError(f"invalid alpha {alpha}")
        return Fraction(repr(alpha))
    return Fraction(alpha)


def variance_exponent(c, alpha):
    """X(c); returns -inf when alpha is infinite and the cluster has odd vertices."""
    c = structure(c)
    alpha = as_alpha(alpha)
    base = -sum(a * (p - 1) for a, p in c.edges) + Fraction(c.incidences + c.odd, 2)
    if c.odd == 0:
        return base
    if alpha == math.inf:
        return -math.inf
    return base - 2 * alpha * c.odd


def model_orders(spec):
    """The edge sizes that enter the candidate set: (p_e, p_o) when both exist."""
    if not isinstance(spec, MixtureSpec):
        spec = MixtureSpec(spec)
    if spec.coefficient(2) > 0:
        raise DomainError("the cluster expansion needs theta_2 = 0 (no SK component)")
    orders = tuple(p for p in (spec.p_e, spec.p_o) if p is not None)
    return tuple(sorted(orders))


def candidate_set(spec, max_edges=MAX_EDGES):
    """Realizable canonical clusters with 1..max_edges hyperedges on the model orders."""
    orders = model_orders(spec)
    out = []
    if len(orders) == 1:
        (p,) = orders
        counts = [((a, p),) for a in range(1, max_edges + 1)]
    else:
        pe, po = sorted(orders, key=lambda q: q % 2)
        counts = []
        for ae in range(0, max_edges + 1):
            for ao in range(0, max_edges + 1 - ae):
                if ae + ao >= 1:
                    counts.append(tuple((a, q) for a, q in ((ae, pe), (ao, po)) if a))
    for edges in counts:
        inc = sum(a * p for a, p in edges)
        for ell in range(inc % 2, inc + 1, 2):
            c = ClusterStructure(edges, ell)
            if is_realizable(c):
                out.append(c)
    return out


def filtered_out(spec, max_edges=MAX_EDGES):
    """Parity-admissible clusters that candidate_set rejects as unrealizable."""
    orders = model_orders(spec)
    keep = set(candidate_set(spec, max_edges))
    out = []
    if len(orders) == 1:
        (p,) = orders
        combos = [((a, p),) for a in range(1, max_edges + 1)]
    else:
        pe, po = sorted(orders, key=lambda q: q % 2)
        combos = [tuple((a, q) for a, q in ((ae, pe), (ao, po)) if a)
                  for ae in range(max_edges + 1) for ao in range(max_edges + 1 - ae) if ae + ao]
    for edges in combos:
        inc = sum(a * p for a, p in edges)
        for ell in range(inc % 2, inc + 1, 2):
            c = ClusterStructure(edges, ell)
            if c not in keep:
                out.append(c)
    return out


def alpha_critical(spec):
    """Closed-form critical field exponent alpha_c (exact).

    Pure p: p/8 for even p, (p-1)/4 for odd p. Mixed (p_e, p_o): p_e/8 when
    p_e < p_o - 1, (p_e - 2)/4 when p_e = p_o - 1, p_e/8 when
    p_o < p_e < 2(p_o - 1), and (p_o - 1)/4 when p_e >= 2(p_o - 1).
    """
    orders = model_orders(spec)
    if len(orders) == 1:
        (p,) = orders
        return Fraction(p, 8) if p % 2 == 0 else Fraction(p - 1, 4)
    pe, po = sorted(orders, key=lambda q: q % 2)
    # cases are tried in the printed order; the first that holds wins
    cases = (
        ("pe < po - 1", pe < po - 1, Fraction(pe, 8)),
        ("pe = po - 1", pe == po - 1, Fraction(pe - 2, 4)),
        ("po < pe < 2(po - 1)", po < pe < 2 * (po - 1), Fraction(pe, 8)),
        ("pe >= 2(po - 1)", pe >= 2 * (po - 1), Fraction(po - 1, 4)),
    )
    for name, holds, value in cases:
        if holds:
            log.debug("alpha_c for (pe, po) = (%d, %d): case %s", pe, po, name)
            return value
    raise DomainError(f"no alpha_c case covers (pe, po) = ({pe}, {po})")


def alpha_crossover(spec):
    """The alpha at which the best odd-vertex cluster first ties the best even one.

    Each X(c) with l > 0 is affine in alpha with slope -2l, so the tie point of
    cluster c is (X_c(0) - X_even) / (2 l); the crossover is the largest.
    """
    cands = candidate_set(spec)
    even = max(variance_exponent(c, 0) for c in cands if c.odd == 0)
    return max((variance_exponent(c, 0) - even) / (2 * c.odd) for c in cands if c.odd > 0)


@dataclass(frozen=True)
class RegimeReport:
    alpha: object
    alpha_c: Fraction
    regime: str
    gamma: Fraction
    dominant: tuple
    exponents: dict = field(repr=False, compare=False)
    alpha_c_formula: Fraction = None


def regime_label(alpha, alpha_c):
    if alpha == math.inf or alpha > alpha_c:
        return "R1"
    if alpha == alpha_c or alpha == HALF:
        return "threshold-point"
    if alpha > HALF:
        return "R2"
    return "R3"


def classify(spec, alpha):
    """Dominant clusters, gamma and regime label for a model and field exponent.

    The regime boundaries are the crossover alpha_c (computed from the same
    exponent table, so labels and dominant sets never disagree) and 1/2.
    ``alpha_c_formula`` carries the closed-form value for comparison.
    """
    alpha = as_alpha(alpha)
    if alpha != math.inf and alpha < QUARTER:
        raise DomainError("alpha must be >= 1/4")
    cands = candidate_set(spec)
    table = {c: variance_exponent(c, alpha) for c in cands}
    best = max(table.values())
    dominant = tuple(sorted((c for c, x in table.items() if x == best), key=_order_key))
    ac = alpha_crossover(spec)
    return RegimeReport(alpha, ac, regime_label(alpha, ac), -best, dominant, table, alpha_critical(spec))


def _order_key(c):
    return (c.k, c.odd, c.edges)
