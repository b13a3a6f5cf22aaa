"""High-temperature thresholds from the second-moment variational problem.

beta_c(xi) = min_{0 < x < 1} sqrt(I(x) / xi(x)). For a pure p-spin model the
minimiser solves phi(x) = x I'(x) / I(x) = p, which gives a second, independent
route used to cross-check the grid search.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SpecError
from .model import MixtureSpec, binary_entropy, entropy_near_one, xi_eval

GOLDEN = (math.sqrt(5) - 1) / 2
GRID_EPS = 1e-9
SCREEN_SWEEPS = 6
POLISHED_STARTS = 4


@dataclass(frozen=True)
class BetaC:
    beta_c: float
    x_star: float
    boundary: str = "interior"  # "interior", "boundary-zero" or "boundary-one"


@dataclass(frozen=True)
class PhiInverse:
    x_star: float
    beta_c: float
    residual: float


@dataclass(frozen=True)
class MultiBetaC:
    beta_c: float
    x_star: tuple
    boundary: str
    starts: int
    boundary_limit: float = math.inf


def golden_section(f, a, b, tol=1e-10, max_iter=400):
    """Minimise a unimodal f on [a, b]; returns (x, f(x))."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)) / 2:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _entropy(x):
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0.5, entropy_near_one(1.0 - np.minimum(x, 1.0)), 0.0)
    low = x <= 0.5
    if np.any(low):
        out = np.where(low, binary_entropy(np.where(low, x, 0.0)), out)
    return out


def unit_grid(n=4096, eps=GRID_EPS):
    """Scan points on (eps, 1 - eps): uniform in the bulk, geometric near both ends."""
    bulk = np.linspace(eps, 1 - eps, n // 2)
    near0 = np.geomspace(eps, 0.5, n // 4)
    near1 = 1.0 - np.geomspace(1e-15, 0.5, n // 4)
    return np.unique(np.concatenate([bulk, near0, near1]))


def _minimise_on_unit(g, grid):
    vals = g(grid)
    i = int(np.nanargmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    x, fx = golden_section(lambda t: float(g(np.array(t))), lo, hi, tol=1e-12)
    if vals[i] < fx:
        x, fx = grid[i], vals[i]
    return float(x), float(fx), i


def beta_c(spec, tol=1e-9, grid_points=4096):
    """Critical inverse temperature of a mixture.

    A coarse scan of I/xi is refined by golden section. If the scan minimum
    sits at the smallest grid point the analytic limit at zero, 1/theta_2, is
    used instead and the result is flagged ``boundary-zero``.

    Args:
        spec: MixtureSpec.
        tol: relative x tolerance of the refinement (kept for API symmetry;
            the refinement always runs to 1e-12).
        grid_points: size of the coarse scan.

    Returns:
        BetaC.
    """
    if not isinstance(spec, MixtureSpec):
        spec = MixtureSpec(spec)
    grid = unit_grid(grid_points)

    def ratio(x):
        return _entropy(x) / xi_eval(spec, x)

    x, r, i = _minimise_on_unit(ratio, grid)
    theta2 = spec.coefficient(2)
    zero_limit = 1.0 / theta2**2 if theta2 > 0 else math.inf
    if zero_limit <= r or (i == 0 and theta2 > 0):
        return BetaC(math.sqrt(min(zero_limit, r)), 0.0, "boundary-zero")
    if i == grid.size - 1:
        return BetaC(math.sqrt(r), x, "boundary-one")
    return BetaC(math.sqrt(r), x, "interior")


def phi(x):
    """phi(x) = x I'(x) / I(x) on (0, 1), with the limit phi(0) = 2."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x >= 1)):
        raise DomainError("phi is defined on [0, 1)")
    safe = np.where(x > 0, x, 0.5)
    out = safe * np.arctanh(safe) / _entropy(safe)
    # series near zero: phi = 2 + x^2/3 + O(x^4)
    small = x < 1e-4
    out = np.where(small, 2.0 + x * x / 3.0, out)
    return float(out) if out.ndim == 0 else out


def phi_inverse_beta_c(p):
    """Pure p-spin beta_c via the unique root of phi(x) = p.

    Returns a PhiInverse with the residual |phi(x*) - p|. For very large p the
    root lies closer to 1 than double precision resolves; the largest double
    below one is returned and the residual reports the gap.
    """
    if p < 3:
        raise DomainError("phi inverse route needs p >= 3")
    lo, hi = 1e-6, np.nextafter(1.0, 0.0)
    if phi(hi) < p:
        x = float(hi)
    else:
        x = brentq(lambda t: phi(t) - p, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    b = math.sqrt(float(_entropy(x)) * math.factorial(p) / x**p)
    return PhiInverse(float(x), b, abs(float(phi(x)) - p))


def talagrand_lower_bound(p):
    """Talagrand's bound sqrt(p!) * min_x sqrt((1 + x^(-p)) I(x)).

    The sqrt(p!) converts from the unit-variance normalisation the bound is
    usually stated in to the xi(x) = x^p / p! normalisation used here.
    """
    if p < 2:
        raise DomainError("p must be >= 2")
    grid = unit_grid()
    grid = np.append(grid, 1.0)

    def g(x):
        return (1.0 + np.asarray(x, dtype=float) ** (-p)) * _entropy(x)

    _, v, _ = _minimise_on_unit(g, grid)
    return math.sqrt(math.factorial(p) * v)


def sweep(p_values):
    """Rows (p, beta_c, beta_c / sqrt(p!), talagrand bound) for pure models.

    Emits a warning when the normalised curve is not monotone.
    """
    rows = []
    for p in p_values:
        b = beta_c(MixtureSpec.pure(p))
        t = talagrand_lower_bound(p)
        rows.append({
            "p": p,
            "beta_c": b.beta_c,
            "beta_c_scaled": b.beta_c / math.sqrt(math.factorial(p)),
            "talagrand": t,
            "talagrand_scaled": t / math.sqrt(math.factorial(p)),
            "x_star": b.x_star,
        })
    scaled = np.array([r["beta_c_scaled"] for r in rows])
    d = np.diff(scaled)
    if d.size and not (np.all(d >= -1e-12) or np.all(d <= 1e-12)):
        warnings.warn("beta_c / sqrt(p!) is not monotone over the sweep", RuntimeWarning, stacklevel=2)
    return rows


@dataclass(frozen=True)
class MultiSpeciesSpec:
    """Species proportions lambda and symmetric variance tensors Delta_p^2."""

    lam: tuple
    deltas: dict = field(hash=False)

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise SpecError("lambda must be a nonempty vector")
        if np.any(lam <= 0) or abs(lam.sum() - 1) > 1e-9:
            raise SpecError("lambda must be positive and sum to one")
        k = lam.size
        deltas = {}
        for p, t in dict(self.deltas).items():
            p = int(p)
            arr = np.asarray(t, dtype=float)
            if p < 2 or arr.shape != (k,) * p:
                raise SpecError(f"Delta_{p}^2 must have shape {(k,) * p}")
            if np.any(arr < 0):
                raise SpecError(f"Delta_{p}^2 must be nonnegative")
            for axes in _transpositions(p):
                if not np.allclose(arr, np.transpose(arr, axes), atol=1e-12):
                    raise SpecError(f"Delta_{p}^2 must be symmetric")
            deltas[p] = arr
        if not deltas:
            raise SpecError("at least one Delta_p^2 is required")
        object.__setattr__(self, "lam", tuple(float(v) for v in lam))
        object.__setattr__(self, "deltas", dict(sorted(deltas.items())))

    @property
    def k(self):
        return len(self.lam)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or set(data) != {"lambda", "delta2"}:
            raise SpecError('multi-species spec needs exactly the keys "lambda" and "delta2"')
        return cls(tuple(data["lambda"]), {int(p): v for p, v in data["delta2"].items()})

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        return {"lambda": list(self.lam), "delta2": {str(p): t.tolist() for p, t in self.deltas.items()}}

    def xi(self, x):
        """xi(x) = sum_p (1/p!) <Lambda^p Delta_p^2, x^p>."""
        v = np.asarray(self.lam) * np.asarray(x, dtype=float)
        total = 0.0
        for p, t in self.deltas.items():
            c = t
            for _ in range(p):
                c = c @ v
            total += float(c) / math.factorial(p)
        return total


def _transpositions(p):
    for i in range(p - 1):
        axes = list(range(p))
        axes[i], axes[i + 1] = axes[i + 1], axes[i]
        yield tuple(axes)


def multi_species_beta_c(ms, starts=32, seed=0, sweeps=200, s_max=35.0):
    """Infimum over (0, 1]^k of sqrt(sum_i lambda_i I(x_i) / xi(x)).

    Multi-start coordinate descent with golden-section line searches in the
    coordinates s_i = -log x_i. Every start gets a few sweeps; the best few
    are then run to convergence. The limit x -> 0 is handled analytically: the
    quadratic part of xi gives the value 1 / lambda_max(L^(1/2) Delta_2^2 L^(1/2)).
    """
    if starts < 32:
        raise DomainError("at least 32 starts are required")
    lam = np.asarray(ms.lam)
    k = ms.k

    def objective(s):
        x = np.exp(-np.asarray(s))
        den = ms.xi(x)
        if den <= 0:
            return math.inf
        return float(np.dot(lam, _entropy(x))) / den

    def descend(s, val, n_sweeps):
        for _ in range(n_sweeps):
            old = val
            for i in range(k):
                def along(t, i=i):
                    trial = s.copy()
                    trial[i] = t
                    return objective(trial)
                t, v = golden_section(along, 0.0, s_max, tol=1e-11)
                if v < val:
                    s[i], val = t, v
            if old - val <= 1e-14 * max(1.0, abs(val)):
                break
        return s, val

    rng = np.random.default_rng(seed)
    inits = [np.full(k, v) for v in (0.05, 0.5, 2.0)]
    inits += [-np.log(rng.uniform(1e-3, 1.0, size=k)) for _ in range(starts - len(inits))]
    # screen every start with a few sweeps, then polish the most promising ones
    screened = []
    for s in inits:
        s = np.array(s, dtype=float)
        screened.append(descend(s, objective(s), SCREEN_SWEEPS))
    screened.sort(key=lambda sv: sv[1])
    best_val, best_s = math.inf, None
    for s, val in screened[:POLISHED_STARTS]:
        s, val = descend(s, val, sweeps)
        if val < best_val:
            best_val, best_s = val, s.copy()

    limit = math.inf
    if 2 in ms.deltas:
        half = np.sqrt(lam)
        m = half[:, None] * ms.deltas[2] * half[None, :]
        top = float(np.linalg.eigvalsh(m)[-1])
        if top > 0:
            limit = 1.0 / top
    if limit <= best_val:
        return MultiBetaC(math.sqrt(limit), tuple([0.0] * k), "boundary-zero", len(inits), math.sqrt(limit))
    x = tuple(float(v) for v in np.exp(-best_s))
    return MultiBetaC(math.sqrt(best_val), x, "interior", len(inits), math.sqrt(limit) if math.isfinite(limit) else math.inf)
