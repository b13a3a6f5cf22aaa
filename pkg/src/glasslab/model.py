"""Mixture specifications, external fields and the scalar functions built on them.

A mixed p-spin model is fixed by its coefficients theta_p (p >= 2). The
structure function is xi(x) = sum_p theta_p^2 x^p / p!, and the binary entropy
I(x) is the rate function of the overlap of two independent uniform spin
configurations.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DomainError, SpecError

# below this |x| the entropy is evaluated from its power series
_SERIES_CUTOFF = 0.05
_SERIES_TERMS = 14


@dataclass(frozen=True, init=False)
class MixtureSpec:
    """Coefficients theta_p of a mixed p-spin Hamiltonian.

    Build one from a mapping ``{p: theta_p}``. Zero coefficients are kept (so
    round trips through JSON are exact) but play no role in derived quantities.
    """

    terms: tuple

    def __init__(self, theta):
        if isinstance(theta, MixtureSpec):
            theta = theta.theta
        try:
            items = dict(theta).items()
        except (TypeError, ValueError) as exc:
            raise SpecError(f"theta must be a mapping p -> theta_p, got {theta!r}") from exc
        terms = []
        for p, value in items:
            if isinstance(p, str) and p.strip().lstrip("+").isdigit():
                p = int(p)
            if isinstance(p, bool) or not isinstance(p, (int, np.integer)):
                raise SpecError(f"interaction order must be an integer, got {p!r}")
            p = int(p)
            if p < 2:
                raise SpecError(f"interaction order must be >= 2, got {p}")
            try:
                value = float(value)
            except (TypeError, ValueError) as exc:
                raise SpecError(f"theta_{p} must be a number, got {value!r}") from exc
            if not math.isfinite(value) or value < 0:
                raise SpecError(f"theta_{p} must be finite and nonnegative, got {value}")
            terms.append((p, value))
        terms.sort()
        if len({p for p, _ in terms}) != len(terms):
            raise SpecError("duplicate interaction order")
        if not any(v > 0 for _, v in terms):
            raise SpecError("at least one theta_p must be positive")
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def pure(cls, p, theta=1.0):
        return cls({p: theta})

    @property
    def theta(self):
        return dict(self.terms)

    @property
    def orders(self):
        """Interaction orders with a positive coefficient, ascending."""
        return tuple(p for p, v in self.terms if v > 0)

    @property
    def p_e(self):
        """Smallest even order >= 4 present, or None."""
        return next((p for p in self.orders if p >= 4 and p % 2 == 0), None)

    @property
    def p_o(self):
        """Smallest odd order >= 3 present, or None."""
        return next((p for p in self.orders if p % 2 == 1), None)

    @property
    def p_m(self):
        return self.orders[0]

    @property
    def is_pure(self):
        return len(self.orders) == 1

    def coefficient(self, p):
        return self.theta.get(p, 0.0)

    def xi(self, x):
        return xi_eval(self, x)

    def to_dict(self):
        return {"theta": {str(p): v for p, v in self.terms}}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or set(data) != {"theta"}:
            raise SpecError('spec must be an object with the single key "theta"')
        theta = data["theta"]
        if not isinstance(theta, dict):
            raise SpecError('"theta" must map orders to coefficients')
        return cls(theta)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def __str__(self):
        inner = ", ".join(f"{p}: {v:g}" for p, v in self.terms)
        return f"MixtureSpec({{{inner}}})"


@dataclass(frozen=True)
class ExternalField:
    """External field h = rho * N^(-alpha).

    ``alpha=math.inf`` encodes the zero field.
    """

    rho: float = 1.0
    alpha: float = math.inf

    def __post_init__(self):
        rho = float(self.rho)
        alpha = float(self.alpha)
        if not math.isfinite(rho) or rho <= 0:
            raise SpecError(f"rho must be positive, got {self.rho}")
        if math.isnan(alpha) or alpha < 0.25:
            raise SpecError(f"alpha must be >= 1/4, got {self.alpha}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def zero(cls):
        return cls(1.0, math.inf)

    @property
    def is_zero(self):
        return math.isinf(self.alpha)

    def h(self, N):
        if self.is_zero:
            return 0.0
        return self.rho * float(N) ** (-self.alpha)

    def h_hat(self, N):
        """tanh(h), the per-vertex weight of an odd vertex."""
        return math.tanh(self.h(N))

    def h_tilde_squared(self, N):
        """N^(2 alpha) tanh(h)^2, which tends to rho^2."""
        if self.is_zero:
            return 0.0
        return float(N) ** (2 * self.alpha) * math.tanh(self.h(N)) ** 2

    def to_dict(self):
        return {"rho": self.rho, "alpha": "inf" if self.is_zero else self.alpha}

    @classmethod
    def from_dict(cls, data):
        return cls(float(data.get("rho", 1.0)), float(data.get("alpha", math.inf)))


def _check_unit_interval(x, closed=True):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("argument is NaN")
    bad = np.abs(arr) > 1 if closed else np.abs(arr) >= 1
    if np.any(bad):
        raise DomainError(f"argument must lie in [-1, 1], got {x!r}")
    return arr


def xi_eval(spec, x, derivatives=False):
    """Evaluate the structure function and optionally its first two derivatives.

    Args:
        spec: a MixtureSpec.
        x: scalar or array in [-1, 1].
        derivatives: when true return (xi, xi', xi'').

    Returns:
        xi(x), or the triple of value and derivatives. Scalars in, floats out.
    """
    arr = _check_unit_interval(x)
    val = np.zeros_like(arr)
    d1 = np.zeros_like(arr)
    d2 = np.zeros_like(arr)
    for p, th in spec.terms:
        if th == 0:
            continue
        c = th * th
        val = val + c * arr**p / math.factorial(p)
        d1 = d1 + c * arr ** (p - 1) / math.factorial(p - 1)
        d2 = d2 + c * arr ** (p - 2) / math.factorial(p - 2)
    if np.ndim(x) == 0:
        val, d1, d2 = float(val), float(d1), float(d2)
    return (val, d1, d2) if derivatives else val


def binary_entropy(x):
    """I(x) = ((1+x)log(1+x) + (1-x)log(1-x)) / 2 on [-1, 1], with 0 log 0 = 0.

    Small arguments go through the power series sum_k x^(2k) / (2k(2k-1)) to
    avoid the cancellation in the closed form.
    """
    arr = _check_unit_interval(x)
    out = 0.5 * (xlogy(1 + arr, 1 + arr) + xlogy(1 - arr, 1 - arr))
    small = np.abs(arr) < _SERIES_CUTOFF
    if np.any(small):
        xs = arr[small] ** 2
        series = np.zeros_like(xs)
        power = np.ones_like(xs)
        for k in range(1, _SERIES_TERMS + 1):
            power = power * xs
            series = series + power / (2 * k * (2 * k - 1))
        out = np.where(small, 0.0, out)
        out[small] = series
    return float(out) if np.ndim(x) == 0 else out


def entropy_derivative(x):
    """I'(x) = artanh(x) on the open interval."""
    arr = _check_unit_interval(x, closed=False)
    out = np.arctanh(arr)
    return float(out) if np.ndim(x) == 0 else out


def entropy_near_one(u):
    """I(1 - u) evaluated accurately for small u > 0."""
    u = np.asarray(u, dtype=float)
    return 0.5 * xlogy(2 - u, 2 - u) + 0.5 * xlogy(u, u)
