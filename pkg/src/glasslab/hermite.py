"""Probabilists' Hermite polynomials, exact Gaussian moments and Bell polynomials.

Polynomials handled exactly are plain coefficient lists in ascending powers
with int or Fraction entries.
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import DomainError

MAX_ORACLE_DEGREE = 64
DEFAULT_BIT_BUDGET = 1 << 14


@lru_cache(maxsize=None)
def hermite_coefficients(k):
    """Integer coefficients of H_k, ascending powers, from H_{k+1} = x H_k - k H_{k-1}."""
    if k < 0:
        raise DomainError(f"Hermite degree must be >= 0, got {k}")
    prev, cur = (), (1,)
    for n in range(k):
        nxt = [0] * (n + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += c
        for i, c in enumerate(prev):
            nxt[i] -= n * c
        prev, cur = cur, tuple(nxt)
    return cur


def hermite(k, x):
    """Evaluate H_k(x) by the three-term recurrence."""
    if k < 0:
        raise DomainError(f"Hermite degree must be >= 0, got {k}")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for n in range(k):
        prev, cur = cur, x * cur - n * prev
    return float(cur) if cur.ndim == 0 else cur


def hermite_explicit(k, x):
    """Evaluate H_k(x) = k! sum_m (-1)^m x^(k-2m) / (m! (k-2m)! 2^m)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for m in range(k // 2 + 1):
        c = (-1) ** m * math.factorial(k) // (math.factorial(m) * math.factorial(k - 2 * m) * 2**m)
        out = out + c * x ** (k - 2 * m)
    return float(out) if out.ndim == 0 else out


def poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def poly_add(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def poly_scale(a, c):
    return [c * x for x in a]


def poly_pow(a, n):
    out = [1]
    for _ in range(n):
        out = poly_mul(out, a)
    return out


def double_factorial_odd(m):
    """(2m - 1)!! with the convention (-1)!! = 1."""
    out = 1
    for j in range(1, 2 * m, 2):
        out *= j
    return out


def _bits(q):
    q = Fraction(q)
    return max(q.numerator.bit_length(), q.denominator.bit_length())


def gaussian_moment_oracle(poly, bit_budget=DEFAULT_BIT_BUDGET):
    """Exact E[P(eta)] for eta ~ N(0, 1) and a polynomial with rational coefficients.

    Uses E eta^(2m) = (2m-1)!! and E eta^(2m+1) = 0.

    Args:
        poly: coefficients in ascending powers (int or Fraction).
        bit_budget: largest numerator/denominator bit length tolerated.

    Returns:
        A Fraction.

    Raises:
        DomainError: degree above 64.
        OverflowError: an intermediate exceeds the bit budget.
    """
    coeffs = list(poly)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) - 1 > MAX_ORACLE_DEGREE:
        raise DomainError(f"polynomial degree {len(coeffs) - 1} exceeds {MAX_ORACLE_DEGREE}")
    total = Fraction(0)
    for m in range(0, len(coeffs), 2):
        c = coeffs[m]
        if c == 0:
            continue
        term = Fraction(c) * double_factorial_odd(m // 2)
        if _bits(term) > bit_budget:
            raise OverflowError("exact Gaussian moment exceeds the big-integer budget")
        total += term
    if _bits(total) > bit_budget:
        raise OverflowError("exact Gaussian moment exceeds the big-integer budget")
    return total


def gauss_hermite_expectation(f, degree):
    """E[f(eta)] by Gauss-Hermite quadrature, exact when f is a polynomial of the given degree."""
    n = max(1, math.ceil((degree + 2) / 2))
    nodes, weights = hermegauss(n)
    weights = weights / math.sqrt(2 * math.pi)
    return float(np.dot(weights, f(nodes)))


def bell_polynomial(n, xs):
    """Complete exponential Bell polynomial B_n(x_1, ..., x_n).

    Uses B_{m+1} = sum_i C(m, i) B_{m-i} x_{i+1}. Entries of xs may be floats,
    Fractions or numpy arrays (evaluated elementwise).
    """
    if n < 0:
        raise DomainError("Bell polynomial order must be >= 0")
    if len(xs) < n:
        raise DomainError(f"need {n} arguments, got {len(xs)}")
    b = [1]
    for m in range(n):
        b.append(sum(math.comb(m, i) * b[m - i] * xs[i] for i in range(m + 1)))
    return b[n]


def elementary_symmetric(x, p):
    """e_p(x) by the standard dynamic programme over the entries of x."""
    e = [1.0] + [0.0] * p
    for v in x:
        for j in range(p, 0, -1):
            e[j] += e[j - 1] * v
    return e[p]
