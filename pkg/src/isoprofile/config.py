"""
isoprofile - Numerical Configuration
Tolerances, grid sizes and verification bands shared by every module.
"""

from dataclasses import dataclass, fields, replace

from .exceptions import InputError


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances and bands. Instances are immutable; use with_overrides()."""

    # Quadrature (adaptive Gauss-Kronrod via QUADPACK)
    quad_abs: float = 1e-12
    quad_rel: float = 1e-10
    quad_limit: int = 200

    # Monotone inversion of the needle mass
    inv_tol: float = 1e-10
    inv_maxiter: int = 200
    seed_eps: float = 1e-12

    # Verification
    mcp_slack: float = -1e-9
    grid_n: int = 4096  # density grid cache
    asymptotic_band: float = 0.02
    psi_band: float = 0.05
    bisect_tol: float = 1e-8  # oracle mass adjustment, mass units

    # Extended precision mode (mpmath)
    extended: bool = False
    dps: int = 30

    workers: int = 1

    def __post_init__(self):
        for name in ("quad_abs", "quad_rel", "inv_tol", "seed_eps",
                     "asymptotic_band", "psi_band", "bisect_tol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("quad_limit", "inv_maxiter", "grid_n", "dps", "workers"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.mcp_slack > 0:
            raise InputError("mcp_slack must be non-positive")

    def with_overrides(self, **overrides):
        """Return a copy with the non-None overrides applied"""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise InputError(f"Unknown configuration keys: {sorted(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


DEFAULT_CONFIG = NumericsConfig()
