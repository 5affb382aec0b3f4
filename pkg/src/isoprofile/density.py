"""
isoprofile - One-Dimensional MCP(K,N) Densities
Model family h_a, boundary function f_{K,N,D}, and verification predicates
(MCP condition, normalization, sup bounds, Bishop-Gromov ratios).
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy import integrate, optimize

from .config import DEFAULT_CONFIG
from .exceptions import DomainError, InputError
from .kernels import (
    CurvatureParams, ball_volume, kernel_power, quadrature, s_array, s_generic, sigma_array,
)

logger = logging.getLogger(__name__)

KINDS = ("model", "tabulated", "constant", "user")


# ============================================================================
# DENSITY TYPE
# ============================================================================

@dataclass(frozen=True)
class Density1D:
    """A nonnegative density on [0, D].

    ``evaluator`` maps a numpy array of positions to density values.
    ``breakpoints`` are interior kinks where quadrature splits the range;
    ``antiderivative`` (optional) gives exact integrals for piecewise
    linear tables. ``spec`` carries what is needed to serialize the density.
    """

    domain_length: float
    evaluator: Callable = field(repr=False)
    kind: str = "user"
    breakpoints: tuple = ()
    antiderivative: Optional[Callable] = field(default=None, repr=False)
    grid_n: int = DEFAULT_CONFIG.grid_n
    spec: Optional[dict] = None

    def __post_init__(self):
        if not self.domain_length > 0:
            raise DomainError(f"domain_length must be positive, got {self.domain_length}")
        if self.kind not in KINDS:
            raise InputError(f"Unknown density kind '{self.kind}'")

    def __call__(self, x):
        values = np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)
        if values.ndim == 0:
            return float(values)
        return values

    @cached_property
    def grid(self):
        """Uniform grid cache (positions, values); immutable after construction"""
        xs = np.linspace(0.0, self.domain_length, self.grid_n)
        values = self(xs)
        values.setflags(write=False)
        xs.setflags(write=False)
        return xs, values

    def grid_max(self):
        return float(np.max(self.grid[1]))

    def integral(self, lo=0.0, hi=None, config=DEFAULT_CONFIG):
        """Integral of the density over [lo, hi] (clipped to [0, D])"""
        if hi is None:
            hi = self.domain_length
        lo, hi = max(lo, 0.0), min(hi, self.domain_length)
        if hi <= lo:
            return 0.0
        if self.antiderivative is not None:
            return float(self.antiderivative(hi) - self.antiderivative(lo))
        cuts = [lo] + [b for b in self.breakpoints if lo < b < hi] + [hi]
        return sum(
            quadrature(lambda t, lib: self(float(t)), left, right, config)
            for left, right in zip(cuts[:-1], cuts[1:])
        )

    def reversed(self):
        """The density x -> h(D - x)"""
        D = self.domain_length
        return Density1D(
            domain_length=D,
            evaluator=lambda x: self.evaluator(D - x),
            kind="user",
            breakpoints=tuple(sorted(D - b for b in self.breakpoints)),
            grid_n=self.grid_n,
        )

    def scaled(self, factor):
        """factor * h, e.g. a normalized density turned into a measure of total mass factor"""
        anti = self.antiderivative
        spec = dict(self.spec, scale=self.spec.get("scale", 1.0) * factor) if self.spec else None
        return Density1D(
            domain_length=self.domain_length,
            evaluator=lambda x: factor * self.evaluator(x),
            kind=self.kind,
            breakpoints=self.breakpoints,
            antiderivative=(lambda x: factor * anti(x)) if anti is not None else None,
            grid_n=self.grid_n,
            spec=spec,
        )

    def to_dict(self):
        if self.spec is None:
            raise InputError("User-supplied densities cannot be serialized")
        return dict(self.spec)


@dataclass(frozen=True)
class ModelDensityParams:
    """Selects the optimal density h_a for (K, N, D) and split point a"""

    params: CurvatureParams
    a: float

    def __post_init__(self):
        if not 0 < self.a < self.params.D:
            raise DomainError(f"Split point a must lie in (0, D={self.params.D}), got {self.a}")


# ============================================================================
# BOUNDARY FUNCTION AND MODEL FAMILY
# ============================================================================

def left_kernel_integral(params, x, config=DEFAULT_CONFIG):
    """Integral of s_kappa(D - y)^(N-1) over [0, x]"""
    kappa, m, D = params.kappa, params.exponent, params.D
    return quadrature(lambda y, lib: kernel_power(kappa, D - y, m, lib), 0.0, x, config)


def right_kernel_integral(params, x, config=DEFAULT_CONFIG):
    """Integral of s_kappa(y)^(N-1) over [x, D]"""
    kappa, m = params.kappa, params.exponent
    return quadrature(lambda y, lib: kernel_power(kappa, y, m, lib), x, params.D, config)


def f_boundary(params, x, config=DEFAULT_CONFIG):
    """f_{K,N,D}(x): reciprocal of the two-integral sum on (0, D), zero at the endpoints"""
    D = params.D
    if not 0 <= x <= D:
        raise DomainError(f"f_boundary requires x in [0, {D}], got {x}")
    if x == 0 or x == D:
        return 0.0
    kappa, m = params.kappa, params.exponent
    first = left_kernel_integral(params, x, config) / float(s_generic(kappa, D - x)) ** m
    second = right_kernel_integral(params, x, config) / float(s_generic(kappa, x)) ** m
    return 1.0 / (first + second)


def _model_evaluator(params, a, fa):
    kappa, m, D = params.kappa, params.exponent, params.D
    left_scale = float(s_generic(kappa, D - a)) ** m
    right_scale = float(s_generic(kappa, a)) ** m

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        left = np.clip(s_array(kappa, D - x), 0.0, None) ** m / left_scale
        right = np.clip(s_array(kappa, x), 0.0, None) ** m / right_scale
        return fa * np.where(x <= a, left, right)

    return evaluate


def model_density(mp, config=DEFAULT_CONFIG):
    """The optimal two-branch density h_a; both branches equal f(a) at x = a"""
    params, a = mp.params, mp.a
    fa = f_boundary(params, a, config)
    return Density1D(
        domain_length=params.D,
        evaluator=_model_evaluator(params, a, fa),
        kind="model",
        breakpoints=(a,),
        grid_n=config.grid_n,
        spec={"kind": "model", "K": params.K, "N": params.N, "D": params.D, "a": a},
    )


def constant_density(D, value=None, config=DEFAULT_CONFIG):
    """h = value on [0, D]; normalized (1/D) when value is omitted"""
    c = 1.0 / D if value is None else float(value)
    if c < 0:
        raise DomainError(f"Density value must be non-negative, got {c}")
    return Density1D(
        domain_length=D,
        evaluator=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        kind="constant",
        antiderivative=lambda x: c * x,
        grid_n=config.grid_n,
        spec={"kind": "constant", "D": D, "value": c},
    )


def tabulated_density(xs, hs, config=DEFAULT_CONFIG):
    """Piecewise linear density through (xs, hs); xs must start at 0 and increase strictly"""
    xs = np.asarray(xs, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if xs.ndim != 1 or xs.shape != hs.shape or len(xs) < 2:
        raise InputError("Tabulated density needs two equal-length columns with at least two rows")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(hs))):
        raise InputError("Tabulated density contains non-finite values")
    if np.any(np.diff(xs) <= 0):
        raise InputError("Tabulated grid must be strictly increasing")
    if xs[0] != 0:
        raise InputError(f"Tabulated grid must start at 0, starts at {xs[0]}")
    if np.any(hs < 0):
        raise InputError("Tabulated density must be non-negative")

    cumulative = integrate.cumulative_trapezoid(hs, xs, initial=0.0)
    slopes = np.diff(hs) / np.diff(xs)

    def antiderivative(x):
        i = int(np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2))
        dx = x - xs[i]
        return cumulative[i] + hs[i] * dx + 0.5 * slopes[i] * dx * dx

    return Density1D(
        domain_length=float(xs[-1]),
        evaluator=lambda x: np.interp(x, xs, hs),
        kind="tabulated",
        breakpoints=tuple(xs[1:-1]),
        antiderivative=antiderivative,
        grid_n=config.grid_n,
        spec={"kind": "tabulated", "x": xs.tolist(), "h": hs.tolist()},
    )


def load_tabulated_csv(path, config=DEFAULT_CONFIG):
    """Read a two-column CSV (x, h) with a header row"""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"Cannot read tabulated density from {path}: {e}") from e
    if frame.shape[1] < 2:
        raise InputError(f"{path}: expected columns (x, h), found {list(frame.columns)}")
    return tabulated_density(frame.iloc[:, 0].to_numpy(), frame.iloc[:, 1].to_numpy(), config)


def user_density(D, func, breakpoints=(), config=DEFAULT_CONFIG):
    """Wrap a scalar callable as a density on [0, D]"""
    return Density1D(
        domain_length=D,
        evaluator=np.vectorize(func, otypes=[float]),
        kind="user",
        breakpoints=tuple(breakpoints),
        grid_n=config.grid_n,
    )


def density_from_dict(spec, config=DEFAULT_CONFIG):
    """Inverse of Density1D.to_dict()"""
    kind = spec.get("kind")
    scale = spec.get("scale", 1.0)
    if kind == "model":
        params = CurvatureParams(K=spec["K"], N=spec["N"], D=spec["D"])
        density = model_density(ModelDensityParams(params, spec["a"]), config)
    elif kind == "constant":
        density = constant_density(spec["D"], spec.get("value"), config)
    elif kind == "tabulated":
        density = tabulated_density(spec["x"], spec["h"], config)
    else:
        raise InputError(f"Cannot build a density of kind '{kind}' from a file")
    return density.scaled(scale) if scale != 1.0 else density


# ============================================================================
# MCP CERTIFICATE
# ============================================================================

@dataclass(frozen=True)
class MCPViolation:
    x0: float
    x1: float
    t: float
    lhs: float
    rhs: float
    margin: float

    def to_dict(self):
        return {"x0": self.x0, "x1": self.x1, "t": self.t,
                "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin}


@dataclass
class MCPReport:
    """Outcome of a lattice check of h(t x1 + (1-t) x0) >= sigma^(1-t)(|x1-x0|)^(N-1) h(x0).

    Margins are (lhs - rhs) / h(x0), so they do not depend on the scale of h.
    """

    grid_n: int
    slack: float
    violations: list
    worst: Optional[MCPViolation]
    refined: Optional[MCPViolation] = None

    @property
    def passed(self):
        return not self.violations

    @property
    def worst_margin(self):
        candidates = [v.margin for v in (self.worst, self.refined) if v is not None]
        return min(candidates) if candidates else math.inf

    def to_dict(self):
        return {
            "passed": self.passed,
            "grid_n": self.grid_n,
            "slack": self.slack,
            "worst_margin": self.worst_margin,
            "worst": self.worst.to_dict() if self.worst else None,
            "refined": self.refined.to_dict() if self.refined else None,
            "violations": [v.to_dict() for v in self.violations],
        }


def _mcp_margins(h, params, x0, x1, t):
    """lhs, rhs, normalized margin for broadcast arrays of triples"""
    m = params.exponent
    point = t * x1 + (1 - t) * x0
    lhs = h(point)
    h0 = h(x0)
    sig = sigma_array(1 - t, np.abs(x1 - x0), params)
    with np.errstate(invalid="ignore", over="ignore"):
        rhs = np.where(h0 > 0, sig ** m * h0, 0.0)
        margin = np.where(h0 > 0, (lhs - rhs) / np.where(h0 > 0, h0, 1.0), lhs - rhs)
    return np.atleast_1d(lhs), np.atleast_1d(rhs), np.atleast_1d(margin)


def _refine_worst(h, params, start, n_cells, rounds=30, samples=5):
    """Shrink a box around the worst lattice triple, resampling a small lattice each round"""
    D = params.D
    best = start
    half_x, half_t = D / max(n_cells, 1), 1.0 / max(n_cells, 1)
    for _ in range(rounds):
        x0s = np.clip(np.linspace(best.x0 - half_x, best.x0 + half_x, samples), 0.0, D)
        x1s = np.clip(np.linspace(best.x1 - half_x, best.x1 + half_x, samples), 0.0, D)
        ts = np.clip(np.linspace(best.t - half_t, best.t + half_t, samples), 0.0, 1.0)
        X0, X1, T = (a.ravel() for a in np.meshgrid(x0s, x1s, ts, indexing="ij"))
        keep = X0 != X1
        X0, X1, T = X0[keep], X1[keep], T[keep]
        if X0.size:
            lhs, rhs, margin = _mcp_margins(h, params, X0, X1, T)
            i = int(np.argmin(margin))
            if margin[i] < best.margin:
                best = MCPViolation(float(X0[i]), float(X1[i]), float(T[i]),
                                    float(lhs[i]), float(rhs[i]), float(margin[i]))
        half_x /= 2
        half_t /= 2
    return best


def check_mcp_density(h, params, grid_n, config=DEFAULT_CONFIG):
    """Evaluate the MCP(K,N) density inequality on a grid_n^3 lattice of (x0, x1, t)"""
    if grid_n < 2:
        raise DomainError(f"grid_n must be at least 2, got {grid_n}")
    D = h.domain_length
    if params.D != D:
        params = params.with_diameter(D)
    xs = np.linspace(0.0, D, grid_n)
    ts = np.linspace(0.0, 1.0, grid_n)
    X0, X1, T = (a.ravel() for a in np.meshgrid(xs, xs, ts, indexing="ij"))
    keep = X0 != X1  # degenerate triples carry no information
    X0, X1, T = X0[keep], X1[keep], T[keep]
    lhs, rhs, margin = _mcp_margins(h, params, X0, X1, T)

    bad = np.flatnonzero(margin < config.mcp_slack)
    violations = [
        MCPViolation(float(X0[i]), float(X1[i]), float(T[i]), float(lhs[i]), float(rhs[i]), float(margin[i]))
        for i in bad
    ]
    i = int(np.argmin(margin))
    worst = MCPViolation(float(X0[i]), float(X1[i]), float(T[i]), float(lhs[i]), float(rhs[i]), float(margin[i]))
    refined = _refine_worst(h, params, worst, grid_n - 1)
    if violations:
        logger.warning("MCP check found %d violations, worst margin %.6g", len(violations), worst.margin)
    else:
        logger.debug("MCP check passed on %d triples, worst margin %.3g", margin.size, worst.margin)
    return MCPReport(grid_n=grid_n, slack=config.mcp_slack, violations=violations,
                     worst=worst, refined=refined)


# ============================================================================
# BOUNDS AND RATIOS
# ============================================================================

def _sup_bound_weight(params, x, config):
    """x * integral over t in [0,1] of sigma^(t)(x)^(N-1), i.e. k_x / s_kappa(x)^(N-1)"""
    if x <= 0:
        return 0.0
    kappa, m = params.kappa, params.exponent
    scale = float(s_generic(kappa, x))
    return quadrature(lambda y, lib: (s_generic(kappa, y, lib) / scale) ** m, 0.0, x, config)


def density_sup_bound(params, L, config=DEFAULT_CONFIG, samples=33):
    """Sup bound for normalized MCP(K,N) densities on an interval of length L.

    Contracting [0, L] towards an interior point x gives h(x) <= 1 / (w(x) + w(L - x))
    with w(x) = x * integral of sigma^(t)(x)^(N-1) over t in [0,1]. The bound is
    the minimum of that sum over x. For K <= 0 the minimum sits at the endpoint,
    which is 1 / (L * integral of sigma^(t)(L)^(N-1)); for K > 0 it may be interior.
    """
    if not 0 < L <= params.D:
        raise DomainError(f"density_sup_bound requires L in (0, {params.D}], got {L}")
    if params.K * L ** 2 >= params.exponent * math.pi ** 2:
        raise DomainError(f"L={L} reaches the conjugate radius")
    if params.K == 0:
        return params.N / L

    def total(x):
        return _sup_bound_weight(params, x, config) + _sup_bound_weight(params, L - x, config)

    # symmetric in x <-> L - x, so [0, L/2] suffices
    xs = np.linspace(0.0, L / 2, samples)
    values = [total(float(x)) for x in xs]
    i = int(np.argmin(values))
    best = values[i]
    lo, hi = float(xs[max(i - 1, 0)]), float(xs[min(i + 1, samples - 1)])
    if hi > lo:
        refined = optimize.minimize_scalar(total, bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-12 * L})
        best = min(best, float(refined.fun))
    logger.debug("density_sup_bound L=%g: minimum weight %.17g", L, best)
    return 1.0 / best


def bishop_gromov_ratio(h, center, r, params, config=DEFAULT_CONFIG):
    """m(B_r(center) clipped to [0, D]) / Vol_{K,N}(r), with m = h dx"""
    D = h.domain_length
    if not 0 <= center <= D:
        raise DomainError(f"center must lie in [0, {D}], got {center}")
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    mass = h.integral(center - r, center + r, config)
    return mass / ball_volume(params, r, config)


@dataclass
class MonotonicityReport:
    """Values along a grid and whether they decrease (strictly or not)"""

    grid: list
    values: list
    passed: bool
    slack: float

    def to_dict(self):
        return {"grid": list(self.grid), "values": list(self.values),
                "passed": self.passed, "slack": self.slack}


def check_bishop_gromov(h, center, radii, params, slack=1e-8, config=DEFAULT_CONFIG):
    """r -> bishop_gromov_ratio must be nonincreasing over ascending radii"""
    radii = sorted(radii)
    values = [bishop_gromov_ratio(h, center, r, params, config) for r in radii]
    passed = all(later <= earlier + slack for earlier, later in zip(values, values[1:]))
    return MonotonicityReport(grid=radii, values=values, passed=passed, slack=slack)
