"""Census of hypergraph cluster structures.

A cluster structure ((a_1, p_1), ..., (a_k, p_k); l) describes sub-hypergraphs
of the complete hypergraphs on N vertices with a_i hyperedges of size p_i and
exactly l vertices of odd degree. Three independent counting routes live here:

* brute-force enumeration over edge subsets (bitmask xor for the odd set),
* closed-form templates for the structures that dominate the variance,
* a generic count over vertex "types" (which edges contain a vertex).

The type route also generates member lists for cluster weights by iterating
over vertex sets, so that weights never require filtering all k-subsets.
"""

import itertools
import math
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import BudgetError, DomainError, SpecError, UnsupportedTemplateError
from .hermite import (
    bell_polynomial,
    elementary_symmetric,
    gauss_hermite_expectation,
    gaussian_moment_oracle,
    hermite,
    hermite_coefficients,
    poly_mul,
    poly_pow,
)

ENUMERATION_BUDGET = 10**8
MEMBER_BUDGET = 2 * 10**7
MAX_U_DEGREE = 40
MAX_N = 62


@dataclass(frozen=True, init=False)
class ClusterStructure:
    """Cluster type: a tuple of (a_i, p_i) with distinct p_i, and l odd vertices."""

    edges: tuple
    odd: int

    def __init__(self, edges, odd, allow_odd_parity=False):
        merged = Counter()
        for a, p in edges:
            a, p = int(a), int(p)
            if p < 3:
                raise SpecError(f"edge size must be >= 3, got {p}")
            if a < 0:
                raise SpecError(f"edge multiplicity must be >= 0, got {a}")
            merged[p] += a
        items = tuple(sorted((a, p) for p, a in merged.items() if a > 0))
        items = tuple(sorted(items, key=lambda ap: ap[1]))
        if not items:
            raise SpecError("a cluster needs at least one hyperedge")
        odd = int(odd)
        if odd < 0:
            raise SpecError("number of odd vertices must be >= 0")
        total = sum(a * p for a, p in items)
        if odd > total:
            raise SpecError("more odd vertices than vertex incidences")
        if (total + odd) % 2 and not allow_odd_parity:
            raise SpecError(f"sum a_i p_i + l = {total + odd} is odd; the structure set is empty")
        object.__setattr__(self, "edges", items)
        object.__setattr__(self, "odd", odd)

    @classmethod
    def pure(cls, a, p, odd):
        return cls(((a, p),), odd)

    @classmethod
    def parse(cls, text):
        """Parse ``"2x3;l=2"``, ``"(2,3);l=2"`` or ``"1x4,2x5;l=0"``."""
        text = text.strip().replace(" ", "")
        m = re.fullmatch(r"(.+?);l=(\d+)", text)
        if not m:
            raise SpecError(f"cannot parse cluster structure {text!r}; expected e.g. '2x3;l=2'")
        body, odd = m.group(1), int(m.group(2))
        edges = []
        for a, p in re.findall(r"\(?(\d+)[x,](\d+)\)?", body):
            edges.append((int(a), int(p)))
        rebuilt = ",".join(f"{a}x{p}" for a, p in edges)
        norm = re.sub(r"\((\d+),(\d+)\)", r"\1x\2", body)
        if not edges or norm != rebuilt:
            raise SpecError(f"cannot parse cluster structure {text!r}; expected e.g. '2x3;l=2'")
        return cls(edges, odd)

    @property
    def k(self):
        return sum(a for a, _ in self.edges)

    @property
    def incidences(self):
        return sum(a * p for a, p in self.edges)

    @property
    def parity_ok(self):
        return (self.incidences + self.odd) % 2 == 0

    @property
    def t(self):
        """Vertex count of a canonical member, (sum a_i p_i + l) / 2."""
        return (self.incidences + self.odd) // 2

    @property
    def orders(self):
        return tuple(p for _, p in self.edges)

    @property
    def slots(self):
        """Edge sizes of the k edges, ascending."""
        return tuple(p for a, p in self.edges for _ in range(a))

    def multiplicity(self, p):
        return dict((q, a) for a, q in self.edges).get(p, 0)

    def __str__(self):
        return ",".join(f"{a}x{p}" for a, p in self.edges) + f";l={self.odd}"

    def label(self):
        """Short label: (a, l) for one edge size, (a_1_p1, a_2_p2, l) otherwise."""
        if len(self.edges) == 1:
            return f"({self.edges[0][0]},{self.odd})"
        inner = ",".join(f"{a}_{p}" for a, p in self.edges)
        return f"({inner},{self.odd})"


def structure(spec_text_or_obj):
    if isinstance(spec_text_or_obj, ClusterStructure):
        return spec_text_or_obj
    return ClusterStructure.parse(spec_text_or_obj)


# ---------------------------------------------------------------- edges


@lru_cache(maxsize=64)
def edge_table(N, p):
    """All p-subsets of range(N) in lexicographic order, as (vertices, bitmasks)."""
    if N > MAX_N:
        raise DomainError(f"N must be <= {MAX_N}")
    if p > N:
        return np.zeros((0, p), dtype=np.int64), np.zeros(0, dtype=np.int64)
    verts = np.array(list(itertools.combinations(range(N), p)), dtype=np.int64).reshape(-1, p)
    masks = np.bitwise_or.reduce(np.left_shift(np.int64(1), verts), axis=1) if p else np.zeros(len(verts), np.int64)
    verts.setflags(write=False)
    masks.setflags(write=False)
    return verts, masks


@lru_cache(maxsize=64)
def _mask_lookup(N, p):
    _, masks = edge_table(N, p)
    order = np.argsort(masks, kind="stable")
    return masks[order], order


def edge_index(N, p, masks):
    """Lexicographic index of each p-subset given by its bitmask."""
    sorted_masks, order = _mask_lookup(N, p)
    pos = np.searchsorted(sorted_masks, masks)
    return order[pos]


def _popcount(x):
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


class _Group:
    def __init__(self, N, p):
        self.p = p
        self.verts, self.masks = edge_table(N, p)
        self.size = len(self.masks)


def _pair_table(g1, g2, same):
    if same:
        i, j = np.triu_indices(g1.size, 1)
    else:
        i, j = np.meshgrid(np.arange(g1.size), np.arange(g2.size), indexing="ij")
        i, j = i.ravel(), j.ravel()
    m1, m2 = g1.masks[i], g2.masks[j]
    return i, j, m1 ^ m2, m1 & m2


def _enumeration_work(N, c):
    sizes = [math.comb(N, p) for p in c.slots]
    k = c.k
    if k <= 3:
        return math.prod(sizes) // (math.factorial(k) if len(set(c.slots)) == 1 else 1)
    if c.odd == 0:
        return sizes[0] * sizes[1] + sizes[2] * sizes[3]
    return math.prod(sizes) // math.prod(math.factorial(a) for a, _ in c.edges)


def enumerate_member_indices(N, c, canonical=False, budget=ENUMERATION_BUDGET):
    """Members of S_c on N vertices as an (M, k) array of per-size edge indices.

    Column j indexes into edge_table(N, c.slots[j]). Rows are distinct
    hypergraphs, listed in lexicographic order of their index tuples. When
    ``canonical`` is true only members whose vertices all have degree <= 2 are
    kept. This is the brute-force route: it scans edge subsets directly.
    """
    c = structure(c)
    k = c.k
    if not c.parity_ok:
        return np.zeros((0, k), dtype=np.int64)
    if k > 4:
        raise DomainError("enumeration supports at most four hyperedges")
    work = _enumeration_work(N, c)
    if work > budget:
        raise BudgetError(f"enumeration of {c} at N={N} needs ~{work:.3g} subset checks", work, budget)
    slots = c.slots
    groups = {p: _Group(N, p) for p in set(slots)}
    g = [groups[p] for p in slots]
    same = [slots[i] == slots[i + 1] for i in range(k - 1)]
    ell = c.odd

    if k == 1:
        keep = np.nonzero(_popcount(g[0].masks) == ell)[0]
        rows = keep[:, None]
    elif k == 2:
        i, j, x, _ = _pair_table(g[0], g[1], same[0])
        keep = _popcount(x) == ell
        rows = np.stack([i[keep], j[keep]], axis=1)
    elif k == 3:
        i2, i3, x23, a23 = _pair_table(g[1], g[2], same[1])
        order = np.lexsort((i3, i2))
        i2, i3, x23, a23 = i2[order], i3[order], x23[order], a23[order]
        starts = np.searchsorted(i2, np.arange(g[1].size + 1))
        out = []
        for i1 in range(g[0].size):
            lo = starts[i1 + 1] if same[0] else 0
            m = g[0].masks[i1]
            xs = x23[lo:] ^ m
            sel = _popcount(xs) == ell
            if canonical:
                sel &= (a23[lo:] & m) == 0
            hit = np.nonzero(sel)[0] + lo
            if hit.size:
                out.append(np.stack([np.full(hit.size, i1), i2[hit], i3[hit]], axis=1))
        rows = np.concatenate(out) if out else np.zeros((0, 3), dtype=np.int64)
    else:
        rows = _enumerate_four(g, same, ell)

    rows = rows.astype(np.int64).reshape(-1, k)
    if canonical and k >= 3:
        rows = rows[_canonical_mask(rows, g)]
    if rows.shape[0]:
        rows = rows[np.lexsort(rows.T[::-1])]
    return rows


def _enumerate_four(g, same, ell):
    li, lj, lx, _ = _pair_table(g[0], g[1], same[0])
    ri, rj, rx, _ = _pair_table(g[2], g[3], same[2])
    if ell == 0:
        order = np.argsort(rx, kind="stable")
        sx = rx[order]
        lo = np.searchsorted(sx, lx, "left")
        hi = np.searchsorted(sx, lx, "right")
        cnt = hi - lo
        total = int(cnt.sum())
        left = np.repeat(np.arange(lx.size), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt) + np.repeat(lo, cnt)
        right = order[offs]
        rows = np.stack([li[left], lj[left], ri[right], rj[right]], axis=1)
        if same[1]:
            rows = rows[rows[:, 1] < rows[:, 2]]
        return rows
    out = []
    for a in range(lx.size):
        xs = rx ^ lx[a]
        sel = _popcount(xs) == ell
        if same[1]:
            sel &= ri > lj[a]
        hit = np.nonzero(sel)[0]
        if hit.size:
            out.append(np.stack([np.full(hit.size, li[a]), np.full(hit.size, lj[a]), ri[hit], rj[hit]], axis=1))
    return np.concatenate(out) if out else np.zeros((0, 4), dtype=np.int64)


def _canonical_mask(rows, g):
    masks = [g[j].masks[rows[:, j]] for j in range(rows.shape[1])]
    bad = np.zeros(rows.shape[0], dtype=np.int64)
    for a, b, c in itertools.combinations(range(len(masks)), 3):
        bad |= masks[a] & masks[b] & masks[c]
    return bad == 0


def enumerate_clusters(N, c, canonical=False, budget=ENUMERATION_BUDGET):
    """Members of S_c as a list of tuples of hyperedges (each a sorted vertex tuple).

    Returns an empty list when the parity condition fails.
    """
    c = structure(c)
    rows = enumerate_member_indices(N, c, canonical=canonical, budget=budget)
    tables = [edge_table(N, p)[0] for p in c.slots]
    return [tuple(tuple(int(v) for v in tables[j][r[j]]) for j in range(len(r))) for r in rows]


def count_clusters(N, c, canonical=False, budget=ENUMERATION_BUDGET):
    return int(enumerate_member_indices(N, c, canonical=canonical, budget=budget).shape[0])


def is_canonical_member(edges):
    deg = Counter(v for e in edges for v in e)
    return max(deg.values()) <= 2


# ---------------------------------------------------------------- type vectors


def _type_vectors(c, canonical):
    """Solutions n_T >= 0, T a nonempty subset of the k edges, of the degree equations.

    Yields dicts {T (tuple of edge positions): count}. Members with two
    identical edges of the same size are excluded.
    """
    slots = c.slots
    k = len(slots)
    types = [T for r in range(1, k + 1) for T in itertools.combinations(range(k), r)]
    if canonical:
        types = [T for T in types if len(T) <= 2]
    types.sort(key=lambda T: (-len(T), T))
    ell = c.odd

    def rec(idx, remaining, odd_left, acc):
        if idx == len(types):
            if all(r == 0 for r in remaining) and odd_left == 0:
                yield dict(acc)
            return
        T = types[idx]
        cap = min(remaining[i] for i in T)
        if len(T) % 2:
            cap = min(cap, odd_left)
        for n in range(cap, -1, -1):
            if n:
                acc[T] = n
            elif T in acc:
                del acc[T]
            rem = list(remaining)
            for i in T:
                rem[i] -= n
            yield from rec(idx + 1, rem, odd_left - (n if len(T) % 2 else 0), acc)
        acc.pop(T, None)

    for vec in rec(0, list(slots), ell, {}):
        if _distinct_edges(vec, slots):
            yield vec


def _distinct_edges(vec, slots):
    k = len(slots)
    for i in range(k):
        for j in range(i + 1, k):
            if slots[i] != slots[j]:
                continue
            if not any(n and ((i in T) != (j in T)) for T, n in vec.items()):
                return False
    return True


def _ordered_count(vec):
    t = sum(vec.values())
    return t, math.factorial(t) // math.prod(math.factorial(n) for n in vec.values())


def type_count(N, c, canonical=False):
    """|S_c| on N vertices from the vertex-type decomposition (exact integer)."""
    c = structure(c)
    if not c.parity_ok:
        return 0
    by_t = Counter()
    for vec in _type_vectors(c, canonical):
        t, m = _ordered_count(vec)
        by_t[t] += m
    sym = math.prod(math.factorial(a) for a, _ in c.edges)
    total = sum(math.comb(N, t) * m for t, m in by_t.items())
    assert total % sym == 0
    return total // sym


def type_polynomial(c, canonical=False):
    """{t: coefficient} with |S_c|(N) = sum_t coefficient * C(N, t)."""
    c = structure(c)
    by_t = Counter()
    for vec in _type_vectors(c, canonical):
        t, m = _ordered_count(vec)
        by_t[t] += m
    sym = math.prod(math.factorial(a) for a, _ in c.edges)
    return {t: Fraction(m, sym) for t, m in sorted(by_t.items())}


def is_realizable(c, canonical=True):
    """Whether S_c is nonempty for N large enough."""
    c = structure(c)
    if not c.parity_ok:
        return False
    if canonical:
        return _canonical_exists(c.slots, c.odd)
    return next(_type_vectors(c, canonical), None) is not None


@lru_cache(maxsize=None)
def _canonical_exists(slots, ell):
    """Search over pair multiplicities m_ij (shared degree-2 vertices).

    A canonical member is a loopless multigraph on the k edges with degree
    d_i <= p_i; the p_i - d_i leftover vertices of edge i have degree one, so
    sum_ij m_ij = (sum p - l) / 2. Two edges of equal size must not share
    all their vertices.
    """
    k = len(slots)
    total = (sum(slots) - ell) // 2
    pairs = list(itertools.combinations(range(k), 2))

    @lru_cache(maxsize=None)
    def rec(idx, caps, left):
        if left == 0:
            return True
        if idx == len(pairs):
            return False
        if sum(caps) < 2 * left:
            return False
        i, j = pairs[idx]
        top = min(caps[i], caps[j], left)
        if slots[i] == slots[j]:
            top = min(top, slots[i] - 1)
        for m in range(top, -1, -1):
            new = list(caps)
            new[i] -= m
            new[j] -= m
            if rec(idx + 1, tuple(new), left - m):
                return True
        return False

    if k == 1:
        return ell == slots[0]
    return rec(0, tuple(slots), total)


# ---------------------------------------------------------------- templates


def _template_terms(c, canonical):
    """Closed forms as a list of (t, coefficient) with |S_c|(N) = sum coefficient * C(N, t)."""
    ell = c.odd
    if len(c.edges) == 1:
        a, p = c.edges[0]
        if a == 1 and ell == p:
            return [(p, Fraction(1))]
        if a == 2 and ell == 2:
            return [(p + 1, Fraction(math.comb(p + 1, 2)))]
        if a == 3 and p % 2 == 0 and ell == 0:
            t = 3 * p // 2
            h = math.factorial(p // 2)
            return [(t, Fraction(math.factorial(t), h**3 * 6))]
        if a == 3 and p % 2 == 1 and ell == 1:
            m = (p - 1) // 2
            t = (3 * p + 1) // 2
            terms = [(t, Fraction(math.factorial(t), math.factorial(m) ** 2 * math.factorial(m + 1) * 2))]
            if not canonical:
                th = 1 + 3 * m
                terms.append((th, Fraction(math.factorial(th), math.factorial(m) ** 3 * 6)))
            return terms
        if a == 4 and ell == 0:
            terms = Counter()
            for h in range(0, 1 if canonical else p - 1):
                for prof in _profiles_any(p - h):
                    terms[2 * p - h] += _four_profile_coefficient(p - h, prof, hubs=h)
            return sorted(terms.items())
    elif len(c.edges) == 2:
        (a1, p1), (a2, p2) = c.edges
        pe, po = (p1, p2) if p1 % 2 == 0 else (p2, p1)
        ae, ao = c.multiplicity(pe), c.multiplicity(po)
        if pe % 2 == 0 and po % 2 == 1:
            if ae == 1 and ao == 2 and ell == 0:
                if pe > 2 * po:
                    return []
                m = pe // 2
                t = po + m
                return [(t, Fraction(math.factorial(t), math.factorial(m) ** 2 * math.factorial(po - m) * 2))]
            if ae == 1 and ao == 1 and ell == 1:
                if abs(pe - po) != 1:
                    return []
                return [(max(pe, po), Fraction(max(pe, po)))]
    raise UnsupportedTemplateError(f"no closed-form template for {c}")


def _profiles_any(p):
    """Triples x >= y >= z >= 0 with x + y + z = p and y > 0."""
    return [(x, y, p - x - y) for x in range(p, -1, -1) for y in range(min(x, p - x), 0, -1) if p - x - y <= y]


def _four_profile_coefficient(p, prof, hubs=0):
    """Coefficient of C(N, 2p + hubs) for four p'-edges (p' = p + hubs) with a given profile."""
    a, b, c = prof
    t = 2 * p + hubs
    mult = math.prod(math.factorial(v) for v in Counter(prof).values())
    den = (math.factorial(a) * math.factorial(b) * math.factorial(c)) ** 2 * 4 * mult * math.factorial(hubs)
    return Fraction(math.factorial(t), den)


def supported_templates(p_values=(3, 4, 5)):
    """Template structures for the given edge sizes."""
    out = []
    for p in p_values:
        out.append(ClusterStructure.pure(1, p, p))
        out.append(ClusterStructure.pure(2, p, 2))
        out.append(ClusterStructure.pure(3, p, 0 if p % 2 == 0 else 1))
        out.append(ClusterStructure.pure(4, p, 0))
    return out


def closed_form_count(N, c, canonical=True):
    """|S_c| on N vertices from the closed-form templates.

    The templates describe canonical members (every vertex of degree <= 2).
    With ``canonical=False`` the extra non-canonical families are added where
    they exist: a degree-3 hub for three odd-size edges with one odd vertex,
    and degree-4 hubs for four edges with no odd vertex.

    Raises:
        UnsupportedTemplateError: no template for this structure.
    """
    c = structure(c)
    if not c.parity_ok:
        return 0
    total = Fraction(0)
    for t, coef in _template_terms(c, canonical):
        total += coef * math.comb(N, t)
    assert total.denominator == 1
    return int(total)


def intersection_profiles(p):
    """Intersection profiles (x, y, z), x + y + z = p, y > 0, in decreasing order."""
    if p < 3 or p % 2 == 0:
        raise DomainError("intersection profiles are defined for odd p >= 3")
    return _profiles_any(p)


def profile_closed_form(N, p, prof):
    """Number of canonical four-edge even members with a given intersection profile."""
    return int(_four_profile_coefficient(p, tuple(prof)) * math.comb(N, 2 * p))


def _profiles_of(N, p, rows):
    _, masks = edge_table(N, p)
    m = masks[rows]
    shares = np.stack([_popcount(m[:, 0] & m[:, j]) for j in (1, 2, 3)], axis=1)
    return -np.sort(-shares, axis=1)


def profile_census(N, p, budget=ENUMERATION_BUDGET):
    """Counter {profile: count} over canonical members of ((4, p); 0), by enumeration."""
    c = ClusterStructure.pure(4, p, 0)
    rows = enumerate_member_indices(N, c, canonical=True, budget=budget)
    out = Counter()
    for row in map(tuple, _profiles_of(N, p, rows).tolist()):
        out[row] += 1
    return out


def profile_members(N, p, budget=ENUMERATION_BUDGET):
    """{profile: member rows} splitting the canonical ((4, p); 0) members by profile."""
    c = ClusterStructure.pure(4, p, 0)
    rows = enumerate_member_indices(N, c, canonical=True, budget=budget)
    shares = _profiles_of(N, p, rows)
    return {prof: rows[np.all(shares == prof, axis=1)] for prof in intersection_profiles(p)}


# ---------------------------------------------------------------- members by vertex sets


@lru_cache(maxsize=128)
def _patterns(c, canonical):
    """Distinct members on the labelled vertex set range(t), grouped by t.

    Returns {t: array (P, k) of per-size edge indices into edge_table(t, p)}.
    """
    slots = c.slots
    k = len(slots)
    out = {}
    for vec in _type_vectors(c, canonical):
        t = sum(vec.values())
        labels = [T for T, n in sorted(vec.items()) for _ in range(n)]
        seen = out.setdefault(t, set())
        for perm in _multiset_permutations(labels):
            edges = [0] * k
            for v, T in enumerate(perm):
                for i in T:
                    edges[i] |= 1 << v
            key = []
            pos = 0
            for a, _ in c.edges:
                key.extend(sorted(edges[pos:pos + a]))
                pos += a
            seen.add(tuple(key))
    result = {}
    for t, keys in out.items():
        arr = np.array(sorted(keys), dtype=np.int64).reshape(-1, k)
        idx = np.stack([edge_index(t, slots[j], arr[:, j]) for j in range(k)], axis=1) if arr.size else arr
        result[t] = (arr, idx)
    return result


def _multiset_permutations(items):
    items = sorted(items)
    n = len(items)
    if n == 0:
        yield ()
        return
    a = list(items)
    while True:
        yield tuple(a)
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1:] = reversed(a[i + 1:])


def member_count_estimate(N, c, canonical=False):
    return type_count(N, c, canonical)


@lru_cache(maxsize=32)
def _cluster_members_cached(N, c, canonical, budget):
    est = type_count(N, c, canonical)
    if est > budget:
        raise BudgetError(f"{c} has {est} members at N={N}", est, budget)
    slots = c.slots
    k = len(slots)
    blocks = []
    for t, (pmasks, _) in _patterns(c, canonical).items():
        if t > N or pmasks.shape[0] == 0:
            continue
        subsets = np.array(list(itertools.combinations(range(N), t)), dtype=np.int64).reshape(-1, t)
        bits = np.left_shift(np.int64(1), subsets)
        cols = []
        for j in range(k):
            # map pattern edge bitmask over positions 0..t-1 to actual vertex bitmask
            pm = pmasks[:, j]
            sel = ((pm[:, None] >> np.arange(t)) & 1).astype(bool)
            actual = np.zeros((subsets.shape[0], pm.size), dtype=np.int64)
            for pos in range(t):
                if sel[:, pos].any():
                    actual[:, sel[:, pos]] |= bits[:, pos][:, None]
            cols.append(edge_index(N, slots[j], actual.ravel()))
        block = np.stack(cols, axis=1)
        pos = 0
        for a, _ in c.edges:
            block[:, pos:pos + a] = np.sort(block[:, pos:pos + a], axis=1)
            pos += a
        blocks.append(block)
    rows = np.concatenate(blocks) if blocks else np.zeros((0, k), dtype=np.int64)
    if rows.shape[0]:
        rows = rows[np.lexsort(rows.T[::-1])]
    rows.setflags(write=False)
    return rows


def cluster_members(N, c, canonical=False, budget=MEMBER_BUDGET):
    """Members of S_c as per-size edge indices, generated from vertex-set templates.

    Same row convention as enumerate_member_indices. Work is proportional to
    the number of members rather than to the number of edge subsets.
    """
    c = structure(c)
    if not c.parity_ok:
        return np.zeros((0, c.k), dtype=np.int64)
    return _cluster_members_cached(N, c, canonical, budget)


# ---------------------------------------------------------------- constants


def _u_integrand_poly(c):
    """Exact polynomial P with u_c^2 = E[P(eta)] (rational coefficients)."""
    poly = [Fraction(1)]
    for a, p in c.edges:
        hp = list(hermite_coefficients(p))
        fp = math.factorial(p)
        inner = [Fraction(0)]
        for j, cj in enumerate(hermite_coefficients(a)):
            if cj == 0:
                continue
            # (H_p / sqrt(p!))^j / p!^(a/2) = H_p^j / p!^((a+j)/2), a + j even
            term = poly_pow(hp, j)
            scale = Fraction(cj, fp ** ((a + j) // 2))
            inner = _add(inner, [scale * x for x in term])
        poly = poly_mul(poly, inner)
        poly = [x / math.factorial(a) for x in poly]
    hl = hermite_coefficients(c.odd)
    poly = poly_mul(poly, [Fraction(x, math.factorial(c.odd)) for x in hl])
    return poly


def _add(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


@dataclass(frozen=True)
class UConstant:
    exact: Fraction
    quadrature: float

    def __float__(self):
        return float(self.exact)


def u_squared_exact(c):
    c = structure(c)
    if c.incidences + c.odd > MAX_U_DEGREE:
        raise DomainError(f"degree {c.incidences + c.odd} exceeds {MAX_U_DEGREE}")
    return gaussian_moment_oracle(_u_integrand_poly(c))


def u_squared_quadrature(c):
    """u_c^2 by Gauss-Hermite quadrature of the defining Hermite product."""
    c = structure(c)
    degree = c.incidences + c.odd
    if degree > MAX_U_DEGREE:
        raise DomainError(f"degree {degree} exceeds {MAX_U_DEGREE}")

    def f(x):
        out = hermite(c.odd, x) / math.factorial(c.odd)
        for a, p in c.edges:
            y = hermite(p, x) / math.sqrt(math.factorial(p))
            out = out * hermite(a, y) / (math.factorial(a) * math.factorial(p) ** (a / 2))
        return out

    return gauss_hermite_expectation(f, degree)


def u_constant(c):
    """u_c^2 = E[H_l(eta) prod_i H_{a_i}(H_{p_i}(eta)/sqrt(p_i!))] / (l! prod a_i! p_i!^(a_i/2)).

    Returns both the exact rational value and the quadrature value.
    """
    c = structure(c)
    return UConstant(u_squared_exact(c), u_squared_quadrature(c))


def v_constant(c, beta, rho=0.0, spec=None):
    """v_c^2 = beta^(2k) rho^(2l) prod theta_{p_i}^(2 a_i) u_c^2."""
    c = structure(c)
    val = float(u_squared_exact(c)) * beta ** (2 * c.k)
    if c.odd:
        val *= rho ** (2 * c.odd)
    if spec is not None:
        for a, p in c.edges:
            val *= spec.coefficient(p) ** (2 * a)
    return val


# ---------------------------------------------------------------- Bell identity


@dataclass(frozen=True)
class BellCheck:
    p: int
    N: int
    lhs: float
    rhs: float
    hermite: float
    identity_residual: float
    hermite_gap: float


def bell_asymptotic_check(p, N, spins=None, seed=0):
    """Compare p!/N^(p/2) e_p(sigma) with its Bell-polynomial form and with H_p(m).

    The identity p! e_p = (-1)^p B_p(-0! s_1, -1! s_2, ..., -(p-1)! s_p) in the
    power sums s_j holds exactly; as N grows it tends to H_p(sum(sigma)/sqrt(N)).
    """
    if p < 2 or N < 1:
        raise DomainError("need p >= 2 and N >= 1")
    if spins is None:
        spins = np.random.default_rng(seed).choice([-1.0, 1.0], size=N)
    spins = np.asarray(spins, dtype=float)
    if spins.size != N:
        raise DomainError("spin vector length must equal N")
    scale = N ** (p / 2)
    lhs = math.factorial(p) * elementary_symmetric(spins, p) / scale
    sums = [float(np.sum(spins**j)) for j in range(1, p + 1)]
    args = [-math.factorial(j) * sums[j] / N ** ((j + 1) / 2) for j in range(p)]
    rhs = (-1) ** p * bell_polynomial(p, args)
    h = hermite(p, float(spins.sum()) / math.sqrt(N))
    return BellCheck(p, N, lhs, rhs, h, abs(lhs - rhs), abs(rhs - h))
