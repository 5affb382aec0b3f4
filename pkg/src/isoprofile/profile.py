"""
isoprofile - Isoperimetric Profile
The exact profile I_{K,N,D}(v) = f(a(v)), its building blocks v_D(a) and a_D(v),
small-volume asymptotics and monotonicity utilities.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import optimize

from .config import DEFAULT_CONFIG
from .density import (
    ModelDensityParams, MonotonicityReport, f_boundary, left_kernel_integral, right_kernel_integral,
)
from .exceptions import DomainError, NumericError
from .kernels import CurvatureParams, k_const, kernel_power, quadrature, s_generic

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = ["K", "N", "D", "v", "a", "I", "I_asym", "ratio"]
MASS_TOL_FLOOR = 1e-4


@dataclass(frozen=True)
class ProfilePoint:
    """One evaluation of the profile: mass v, split point a, value I and its asymptote"""

    v: float
    a: float
    I: float
    I_asym: float

    @property
    def ratio(self):
        return self.I / self.I_asym

    def to_row(self, params):
        return {"K": params.K, "N": params.N, "D": params.D, "v": self.v, "a": self.a,
                "I": self.I, "I_asym": self.I_asym, "ratio": self.ratio}


def _check_mass(v):
    if not 0 < v < 1:
        raise DomainError(f"Mass v must lie in (0, 1), got {v}")


def _reject_boundary(params):
    if params.boundary:
        raise DomainError("K = N-1, D = pi is handled by sphere_boundary_profile")


# ============================================================================
# NEEDLE MASS AND ITS INVERSE
# ============================================================================

def needle_mass(mp, config=DEFAULT_CONFIG):
    """v_D(a): mass of [0, a] under h_a"""
    params, a = mp.params, mp.a
    kappa, m, D = params.kappa, params.exponent, params.D
    left = left_kernel_integral(params, a, config) / float(s_generic(kappa, D - a)) ** m
    right = right_kernel_integral(params, a, config) / float(s_generic(kappa, a)) ** m
    # h_a = f(a) * kernel and f(a) = 1 / (left + right)
    return left / (left + right)


def _mass_residual(params, v, config):
    def residual(a):
        return needle_mass(ModelDensityParams(params, a), config) - v
    return residual


def inverse_mass(params, v, config=DEFAULT_CONFIG):
    """a_D(v): the unique split point with v_D(a) = v (v_D is increasing)"""
    _check_mass(v)
    _reject_boundary(params)
    D, N = params.D, params.N
    floor, ceiling = config.seed_eps * D, (1 - config.seed_eps) * D
    residual = _mass_residual(params, v, config)

    # Bracket outward from the small-volume seed (k_D v)^(1/N)
    seed = min(max((k_const(params, D, config) * v) ** (1 / N), floor), ceiling)
    lo = hi = seed
    while residual(lo) > 0:
        if lo == floor:
            raise NumericError(f"Mass {v} lies below v_D(eps D) for {params}")
        lo = max(lo / 2, floor)
    while residual(hi) < 0:
        if hi == ceiling:
            raise NumericError(f"Mass {v} lies above v_D((1-eps) D) for {params}")
        hi = min(hi + max(hi, (ceiling - hi) / 2), ceiling)
    if lo == hi:
        return lo

    # Mass-unit target, scaled down near the endpoints; never looser than inv_tol
    target = config.inv_tol * max(min(v, 1 - v), MASS_TOL_FLOOR)
    slope = max((residual(hi) - residual(lo)) / (hi - lo), np.finfo(float).tiny)
    xtol = max(target / (2 * slope), 1e-15)
    while True:
        a, result = optimize.brentq(
            residual, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps,
            maxiter=config.inv_maxiter, full_output=True, disp=False,
        )
        if not result.converged:
            raise NumericError(f"inverse_mass did not converge for v={v} after {result.iterations} iterations")
        error = abs(residual(a))
        if error <= target:
            break
        if xtol <= 1e-15:
            raise NumericError(f"inverse_mass residual {error:.3g} exceeds tolerance {target:.3g} at v={v}")
        xtol = max(xtol / 16, 1e-15)
    logger.debug("inverse_mass v=%g -> a=%.17g in %d iterations (xtol %.3g)", v, a, result.iterations, xtol)
    return a


# ============================================================================
# PROFILE
# ============================================================================

def asymptotic_profile(params, v, config=DEFAULT_CONFIG):
    """Small-volume approximant k_D^(-1/N) v^((N-1)/N)"""
    N = params.N
    return k_const(params, params.D, config) ** (-1 / N) * v ** ((N - 1) / N)


def isoperimetric_profile(params, v, config=DEFAULT_CONFIG):
    """I_{K,N,D}(v) = f_{K,N,D}(a_{K,N,D}(v))"""
    a = inverse_mass(params, v, config)
    return ProfilePoint(v=v, a=a, I=f_boundary(params, a, config),
                        I_asym=asymptotic_profile(params, v, config))


def profile_value(params, v, config=DEFAULT_CONFIG):
    """Profile value with the limits I(0) = I(1) = 0 at the mass endpoints"""
    if v <= 0 or v >= 1:
        return 0.0
    return isoperimetric_profile(params, v, config).I


def sphere_boundary_point(N, v, config=DEFAULT_CONFIG):
    """Profile point for K = N-1, D = pi where f_pi(x) = sin(x)^(N-1) / k_pi"""
    _check_mass(v)
    params = CurvatureParams.sphere_boundary(N)
    m = params.exponent
    k_pi = k_const(params, math.pi, config)

    def residual(a):
        return quadrature(lambda y, lib: kernel_power(1.0, y, m, lib), 0.0, a, config) / k_pi - v

    a, result = optimize.brentq(residual, 0.0, math.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                maxiter=config.inv_maxiter, full_output=True, disp=False)
    if not result.converged:
        raise NumericError(f"sphere_boundary_profile did not converge for v={v}")
    value = math.sin(a) ** m / k_pi
    asym = k_pi ** (-1 / N) * N ** (m / N) * v ** (m / N)
    return ProfilePoint(v=v, a=a, I=value, I_asym=asym)


def sphere_boundary_profile(N, v, config=DEFAULT_CONFIG):
    """I_{N-1,N,pi}(v)"""
    return sphere_boundary_point(N, v, config).I


def profile_D_monotonicity(K, N, v, D_grid, slack=1e-10, config=DEFAULT_CONFIG):
    """D -> I_{K,N,D}(v) must strictly decrease along an ascending grid (K <= 0)"""
    if K > 0:
        raise DomainError("Monotonicity in D is only claimed for K <= 0")
    _check_mass(v)
    D_grid = list(D_grid)
    if any(later <= earlier for earlier, later in zip(D_grid, D_grid[1:])):
        raise DomainError("D_grid must be strictly ascending")
    values = [isoperimetric_profile(CurvatureParams(K=K, N=N, D=D), v, config).I for D in D_grid]
    passed = all(earlier - later > slack for earlier, later in zip(values, values[1:]))
    return MonotonicityReport(grid=D_grid, values=values, passed=passed, slack=slack)


def check_mass_monotonicity(params, n_points=200, config=DEFAULT_CONFIG):
    """v_D(a) strictly increasing on an n-point interior grid of a"""
    grid = np.linspace(0.0, params.D, n_points + 2)[1:-1]
    values = [needle_mass(ModelDensityParams(params, float(a)), config) for a in grid]
    passed = all(later > earlier for earlier, later in zip(values, values[1:]))
    return MonotonicityReport(grid=grid.tolist(), values=values, passed=passed, slack=0.0)


# ============================================================================
# SWEEPS
# ============================================================================

def log_range(lo, hi, n):
    """n log-spaced values from lo to hi (either order)"""
    if n < 1 or lo <= 0 or hi <= 0:
        raise DomainError(f"Invalid log range {lo}:{hi}:{n}")
    if n == 1:
        return [float(lo)]
    return np.geomspace(lo, hi, n).tolist()


def profile_sweep(params, v_grid, config=DEFAULT_CONFIG):
    """Evaluate the profile on v_grid; rows come back in grid order"""
    v_grid = list(v_grid)
    if params.boundary:
        def evaluate(v):
            return sphere_boundary_point(params.N, v, config)
    else:
        def evaluate(v):
            return isoperimetric_profile(params, v, config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            points = list(pool.map(evaluate, v_grid))
    else:
        points = [evaluate(v) for v in v_grid]
    logger.info("Profile sweep: %d points for K=%g N=%g D=%g", len(points), params.K, params.N, params.D)
    return pd.DataFrame([p.to_row(params) for p in points], columns=PROFILE_COLUMNS)
