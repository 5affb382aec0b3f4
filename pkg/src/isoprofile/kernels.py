"""
isoprofile - Comparison Kernels
Comparison-geometry special functions and model volumes used by every other module.
"""

import logging
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate, optimize, special

from .config import DEFAULT_CONFIG
from .exceptions import DomainError, NumericError

logger = logging.getLogger(__name__)

# Relative tolerance when recognising D as the conjugate radius
BOUNDARY_RTOL = 1e-12


# ============================================================================
# PARAMETERS
# ============================================================================

@dataclass(frozen=True)
class CurvatureParams:
    """(K, N, D) triple; kappa = K/(N-1) governs every kernel.

    For K > 0 the diameter must stay strictly below the conjugate radius
    pi*sqrt((N-1)/K). ``boundary=True`` admits D equal to it, which is the
    K = N-1, D = pi case of the sphere.
    """

    K: float
    N: float
    D: float
    boundary: bool = False

    def __post_init__(self):
        if not self.N > 1:
            raise DomainError(f"N must exceed 1, got {self.N}")
        if not self.D > 0:
            raise DomainError(f"D must be positive, got {self.D}")
        radius = self.conjugate_radius
        if self.boundary:
            if not math.isfinite(radius) or not math.isclose(self.D, radius, rel_tol=BOUNDARY_RTOL):
                raise DomainError(
                    f"boundary=True requires K > 0 and D = {radius}, got K={self.K}, D={self.D}"
                )
        elif self.D >= radius:
            raise DomainError(
                f"D={self.D} must lie strictly below the conjugate radius {radius} for K={self.K}, N={self.N}"
            )

    @property
    def kappa(self):
        return self.K / (self.N - 1)

    @property
    def conjugate_radius(self):
        if self.K > 0:
            return math.pi / math.sqrt(self.kappa)
        return math.inf

    @property
    def exponent(self):
        """N - 1, the power carried by every density kernel"""
        return self.N - 1

    @classmethod
    def sphere_boundary(cls, N):
        """The flagged boundary case K = N-1, D = pi"""
        return cls(K=N - 1, N=N, D=math.pi, boundary=True)

    def with_diameter(self, D):
        """Same K, N with another diameter (needles of length L_q)"""
        return CurvatureParams(K=self.K, N=self.N, D=D)

    def to_dict(self):
        return {"K": self.K, "N": self.N, "D": self.D}


# ============================================================================
# QUADRATURE
# ============================================================================

def quadrature(integrand, lo, hi, config=DEFAULT_CONFIG):
    """Integrate ``integrand(t, lib)`` over [lo, hi].

    ``lib`` is ``math`` for the adaptive Gauss-Kronrod path and ``mpmath``
    in extended precision mode, so integrands are written once for both.
    """
    if hi < lo:
        raise DomainError(f"Empty integration range [{lo}, {hi}]")
    if hi == lo:
        return 0.0
    if config.extended:
        with mpmath.workdps(config.dps):
            return float(mpmath.quad(lambda t: integrand(t, mpmath), [lo, hi]))
    value, abserr = integrate.quad(
        integrand, lo, hi, args=(math,),
        epsabs=config.quad_abs, epsrel=config.quad_rel, limit=config.quad_limit,
    )
    if abserr > max(config.quad_abs, config.quad_rel * abs(value)) * 100:
        logger.warning("quadrature on [%g, %g] reported error %.3g for value %.17g", lo, hi, abserr, value)
    return value


def s_generic(kappa, theta, lib=math):
    """s_kappa without domain checks; ``lib`` is math or mpmath"""
    if kappa > 0:
        root = lib.sqrt(kappa)
        return lib.sin(root * theta) / root
    if kappa == 0:
        return theta
    root = lib.sqrt(-kappa)
    return lib.sinh(root * theta) / root


def s_array(kappa, theta):
    """Vectorized s_kappa on numpy arrays"""
    theta = np.asarray(theta, dtype=float)
    if kappa > 0:
        root = math.sqrt(kappa)
        return np.sin(root * theta) / root
    if kappa == 0:
        return theta.copy()
    root = math.sqrt(-kappa)
    return np.sinh(root * theta) / root


def kernel_power(kappa, theta, exponent, lib=math):
    """s_kappa(theta)^exponent, clamped at zero against rounding near the conjugate point"""
    value = s_generic(kappa, theta, lib)
    if value <= 0:
        return 0 * value
    return value ** exponent


# ============================================================================
# SPECIAL FUNCTIONS
# ============================================================================

def omega(N):
    """Volume of the unit ball in dimension N: pi^(N/2) / Gamma(N/2 + 1)"""
    if not N > 0:
        raise DomainError(f"omega requires N > 0, got {N}")
    return float(math.pi ** (N / 2) / special.gamma(N / 2 + 1))


def s_kappa(kappa, theta):
    """sin(sqrt(k) t)/sqrt(k), t, or sinh(sqrt(-k) t)/sqrt(-k) by the sign of kappa"""
    if theta < 0:
        raise DomainError(f"s_kappa requires theta >= 0, got {theta}")
    if kappa > 0 and theta >= math.pi / math.sqrt(kappa):
        raise DomainError(f"s_kappa requires theta < pi/sqrt(kappa) = {math.pi / math.sqrt(kappa)}, got {theta}")
    return float(s_generic(kappa, theta))


def _check_t_theta(t, theta):
    if not 0 <= t <= 1:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if theta < 0:
        raise DomainError(f"theta must be non-negative, got {theta}")


def sigma(t, theta, params):
    """Distortion coefficient sigma^(t)_{K,N-1}(theta); +inf past the conjugate point"""
    _check_t_theta(t, theta)
    if params.K * theta ** 2 >= params.exponent * math.pi ** 2:
        return math.inf
    if theta == 0:
        return float(t)
    kappa = params.kappa
    return float(s_generic(kappa, t * theta) / s_generic(kappa, theta))


def sigma_array(t, theta, params):
    """Vectorized sigma over broadcast arrays of t and theta"""
    t, theta = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(theta, dtype=float))
    out = np.array(t, dtype=float, copy=True)  # theta = 0 limit
    infinite = params.K * theta ** 2 >= params.exponent * math.pi ** 2
    regular = (theta > 0) & ~infinite
    out[infinite] = math.inf
    out[regular] = s_array(params.kappa, t[regular] * theta[regular]) / s_array(params.kappa, theta[regular])
    return out


def tau(t, theta, params):
    """tau^(t)_{K,N}(theta) = t^(1/N) sigma^(t)(theta)^((N-1)/N)"""
    value = sigma(t, theta, params)
    if math.isinf(value):
        return math.inf
    N = params.N
    return float(t ** (1 / N) * value ** ((N - 1) / N))


# ============================================================================
# MODEL VOLUMES
# ============================================================================

def k_const(params, L, config=DEFAULT_CONFIG):
    """k_L = integral of s_kappa(t)^(N-1) over [0, L]; Vol_{K,N}(L) = N omega_N k_L"""
    if L < 0:
        raise DomainError(f"k_const requires L >= 0, got {L}")
    if L > params.conjugate_radius:
        raise DomainError(f"L={L} exceeds the conjugate radius {params.conjugate_radius}")
    if params.K == 0:
        return L ** params.N / params.N
    kappa, exponent = params.kappa, params.exponent
    return quadrature(lambda t, lib: kernel_power(kappa, t, exponent, lib), 0.0, L, config)


def ball_volume(params, r, config=DEFAULT_CONFIG):
    """Vol_{K,N}(r) for any r in the kappa domain (not limited to r <= D)"""
    if r < 0:
        raise DomainError(f"Radius must be non-negative, got {r}")
    if r > params.conjugate_radius:
        raise DomainError(f"r={r} exceeds the conjugate radius {params.conjugate_radius}")
    if params.K == 0:
        return omega(params.N) * r ** params.N
    return params.N * omega(params.N) * k_const(params, r, config)


def model_volume(params, r, config=DEFAULT_CONFIG):
    """Vol_{K,N}(r) for 0 <= r <= D"""
    if not 0 <= r <= params.D:
        raise DomainError(f"model_volume requires 0 <= r <= D={params.D}, got {r}")
    return ball_volume(params, r, config)


def sharp_constant(N):
    """N^(1/N) omega_N^(1/N), the principal coefficient for MCP(K,N) spaces"""
    return (N * omega(N)) ** (1 / N)


def cd_constant(N):
    """N omega_N^(1/N), the coefficient for manifolds and CD(K,N) spaces"""
    return N * omega(N) ** (1 / N)


def k_ratio(params, delta, config=DEFAULT_CONFIG):
    """k_{D+delta} / k_D, bounded by 1 + C delta for small delta"""
    return k_const(params, params.D + delta, config) / k_const(params, params.D, config)


def vol_ratio_lower_bound(params, delta, config=DEFAULT_CONFIG):
    """Vol(D) / Vol(D + 2 delta): lower bound for the transported mass of a localization"""
    return ball_volume(params, params.D, config) / ball_volume(params, params.D + 2 * delta, config)


def reference_radius(K, N, config=DEFAULT_CONFIG):
    """Radius r with Vol_{K,N}(r) = 1 (used when rescaling K instead of D)"""
    if K == 0:
        return omega(N) ** (-1 / N)
    if K > 0:
        radius = math.pi / math.sqrt(K / (N - 1))
        trial = CurvatureParams(K=K, N=N, D=radius, boundary=True)
        if ball_volume(trial, radius, config) < 1:
            raise DomainError(f"Total model volume for K={K}, N={N} is below 1")
        hi = radius
    else:
        trial = CurvatureParams(K=K, N=N, D=1.0)
        hi = 1.0
        while ball_volume(trial, hi, config) < 1:
            hi *= 2
    try:
        return optimize.brentq(lambda r: ball_volume(trial, r, config) - 1, 0.0, hi, xtol=1e-14)
    except RuntimeError as e:
        raise NumericError(f"reference_radius failed to converge: {e}") from e
