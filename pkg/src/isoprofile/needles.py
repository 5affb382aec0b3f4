"""
isoprofile - Synthetic Needle Decompositions
Finite weighted families of needles standing in for a localization, the aggregated
profile bound, the sharpness family of model spaces and end-to-end checks of the
local isoperimetric conclusion.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import DEFAULT_CONFIG
from .density import (
    ModelDensityParams, check_mcp_density, density_from_dict, density_sup_bound, model_density,
)
from .exceptions import DomainError, InputError
from .geometry import IntervalSet, minkowski_content, set_measure
from .kernels import (
    CurvatureParams, ball_volume, omega, sharp_constant, vol_ratio_lower_bound,
)
from .profile import isoperimetric_profile, needle_mass

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-9
# Trace masses this close to 0 or 1 contribute the profile limit 0
MASS_EDGE_LOW = 1e-12
MASS_EDGE_HIGH = 1e-10
INEQUALITY_SLACK = 1e-8


# ============================================================================
# TYPES
# ============================================================================

@dataclass
class Needle:
    """One needle: weight w_q, length L_q, normalized density on [0, L_q] and the traces of E and B_D"""

    weight: float
    length: float
    density: object
    trace: IntervalSet
    ball_trace: Optional[IntervalSet] = None
    distance_to_center: Optional[float] = None  # metadata only

    def __post_init__(self):
        if self.weight < 0:
            raise DomainError(f"Needle weight must be non-negative, got {self.weight}")
        if not self.length > 0:
            raise DomainError(f"Needle length must be positive, got {self.length}")
        if not math.isclose(self.density.domain_length, self.length, rel_tol=1e-12):
            raise InputError(f"Density lives on [0, {self.density.domain_length}], needle has length {self.length}")
        if not math.isclose(self.trace.domain_length, self.length, rel_tol=1e-12):
            raise InputError("Needle trace must be given in needle coordinates [0, L_q]")

    def trace_mass(self, config=DEFAULT_CONFIG):
        return set_measure(self.trace, self.density, config)

    def content(self):
        return minkowski_content(self.trace, self.density)

    def validate(self, params, grid_n=40, config=DEFAULT_CONFIG):
        """Normalization, MCP certificate and sup bound for this needle"""
        own = params.with_diameter(self.length)
        bound = density_sup_bound(own, self.length, config)
        return {
            "normalized": abs(self.density.integral(config=config) - 1) <= 1e-8,
            "mcp": check_mcp_density(self.density, own, grid_n, config).passed,
            "sup_bound": self.density.grid_max() <= bound + 1e-9,
        }

    def to_dict(self):
        entry = {
            "weight": self.weight,
            "length": self.length,
            "density": self.density.to_dict(),
            "trace": self.trace.to_list(),
        }
        if self.ball_trace is not None:
            entry["ball_trace"] = self.ball_trace.to_list()
        if self.distance_to_center is not None:
            entry["distance_to_center"] = self.distance_to_center
        return entry


@dataclass
class NeedleDecomposition:
    """Needles plus the residual mass of the complement; total mass is 1"""

    needles: list
    residual_mass: float
    params: CurvatureParams
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if self.residual_mass < 0:
            raise DomainError(f"residual_mass must be non-negative, got {self.residual_mass}")
        if abs(self.total_weight + self.residual_mass - 1) > WEIGHT_TOL:
            raise InputError(
                f"Needle weights ({self.total_weight}) and residual mass ({self.residual_mass}) must sum to 1"
            )

    @property
    def total_weight(self):
        return math.fsum(needle.weight for needle in self.needles)

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "delta": self.delta,
            "residual_mass": self.residual_mass,
            "needles": [needle.to_dict() for needle in self.needles],
        }


# ============================================================================
# SERIALIZATION
# ============================================================================

def decomposition_from_dict(data, config=DEFAULT_CONFIG):
    try:
        p = data["params"]
        params = CurvatureParams(K=p["K"], N=p["N"], D=p["D"])
        needles = []
        for entry in data["needles"]:
            length = float(entry["length"])
            ball = entry.get("ball_trace")
            needles.append(Needle(
                weight=float(entry["weight"]),
                length=length,
                density=density_from_dict(entry["density"], config),
                trace=IntervalSet.from_pairs(entry.get("trace", []), length),
                ball_trace=IntervalSet.from_pairs(ball, length) if ball is not None else None,
                distance_to_center=entry.get("distance_to_center"),
            ))
        return NeedleDecomposition(needles=needles, residual_mass=float(data["residual_mass"]),
                                   params=params, delta=float(data["delta"]))
    except KeyError as e:
        raise InputError(f"Decomposition is missing field {e}") from e


def load_decomposition(path, config=DEFAULT_CONFIG):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"Cannot read decomposition from {path}: {e}") from e
    return decomposition_from_dict(data, config)


def save_decomposition(dec, path):
    Path(path).write_text(json.dumps(dec.to_dict(), indent=2) + "\n", encoding="utf-8")


# ============================================================================
# DISINTEGRATION AND AGGREGATION
# ============================================================================

def decomposed_measure(dec, sets, config=DEFAULT_CONFIG):
    """Sum over needles of w_q m_q(set_q), sets given in needle coordinates"""
    sets = list(sets)
    if len(sets) != len(dec.needles):
        raise InputError(f"Expected {len(dec.needles)} per-needle sets, got {len(sets)}")
    return math.fsum(needle.weight * set_measure(s, needle.density, config)
                     for needle, s in zip(dec.needles, sets))


@dataclass(frozen=True)
class NeedleTerm:
    index: int
    mass: float
    profile: float
    content: float
    flagged: bool


def profile_terms(dec, config=DEFAULT_CONFIG):
    """Per-needle trace mass, profile value I_{K,N,L_q}(mass) and Minkowski content, in list order"""
    terms = []
    for i, needle in enumerate(dec.needles):
        mass = needle.trace_mass(config)
        flagged = needle.weight > 0 and (mass <= MASS_EDGE_LOW or mass >= 1 - MASS_EDGE_HIGH)
        if flagged or needle.weight == 0:
            value = 0.0
            if flagged:
                logger.debug("Needle %d has trace mass %.3g; profile contribution set to 0", i, mass)
        else:
            value = isoperimetric_profile(dec.params.with_diameter(needle.length), mass, config).I
        terms.append(NeedleTerm(index=i, mass=mass, profile=value, content=needle.content(), flagged=flagged))
    return terms


def aggregate_profile_bound(dec, config=DEFAULT_CONFIG):
    """Sum over needles of w_q I_{K,N,L_q}(m_q(trace_q))"""
    terms = profile_terms(dec, config)
    return math.fsum(needle.weight * term.profile for needle, term in zip(dec.needles, terms))


@dataclass
class LocalizedReport:
    lhs: float
    rhs: float
    flagged: list
    passed: bool

    @property
    def slack(self):
        return self.lhs - self.rhs

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "passed": self.passed, "flagged": list(self.flagged)}


def check_localized_inequality(dec, config=DEFAULT_CONFIG):
    """Sum of w_q m_q^+(trace_q) against the aggregated profile bound"""
    terms = profile_terms(dec, config)
    lhs = math.fsum(needle.weight * term.content for needle, term in zip(dec.needles, terms))
    rhs = math.fsum(needle.weight * term.profile for needle, term in zip(dec.needles, terms))
    passed = lhs >= rhs - INEQUALITY_SLACK
    if not passed:
        logger.warning("Localized inequality violated: lhs=%.12g rhs=%.12g", lhs, rhs)
    return LocalizedReport(lhs=lhs, rhs=rhs, flagged=[t.index for t in terms if t.flagged], passed=passed)


def needle_ball_fraction(needle, config=DEFAULT_CONFIG):
    """m_q(B_D(x) restricted to the needle)"""
    if needle.ball_trace is None:
        raise InputError("Needle has no ball trace")
    return set_measure(needle.ball_trace, needle.density, config)


def mass_accounting(dec, config=DEFAULT_CONFIG):
    """Transported mass against Vol(D)/Vol(D+2 delta), and the needle ball fractions"""
    total = dec.total_weight
    bound = vol_ratio_lower_bound(dec.params, dec.delta, config)
    report = {
        "total_weight": total,
        "residual_mass": dec.residual_mass,
        "measured_C": (1 - total) / dec.delta,
        "vol_ratio_bound": bound,
        "meets_vol_ratio_bound": total >= bound - WEIGHT_TOL,
    }
    with_ball = [n for n in dec.needles if n.ball_trace is not None]
    if with_ball and total > 0:
        fractions = [needle_ball_fraction(n, config) for n in with_ball]
        ball_mass = math.fsum(n.weight * f for n, f in zip(with_ball, fractions))
        if ball_mass > 0:
            ratios = [f / ball_mass for f in fractions]
            report["ball_ratio_min"] = min(ratios)
            report["ball_ratio_max"] = max(ratios)
            report["ball_ratio_C"] = max(abs(r - 1) for r in ratios) / dec.delta
    return report


def split_by_length(dec, eta=0.0, config=DEFAULT_CONFIG):
    """Short needles (L < D/2) carry mass A; reported against (4N delta^(1/2) + 3 eta)/(h - 1)"""
    params, delta = dec.params, dec.delta
    short = [i for i, n in enumerate(dec.needles) if n.length < params.D / 2]
    A = math.fsum(dec.needles[i].weight for i in short)
    h = ball_volume(params, params.D, config) / ball_volume(params, params.D / 2, config)
    return {
        "short_needles": short,
        "long_needles": [i for i in range(len(dec.needles)) if i not in set(short)],
        "A": A,
        "h": h,
        "A_bound": (4 * params.N * math.sqrt(delta) + 3 * eta) / (h - 1),
    }


# ============================================================================
# GENERATOR
# ============================================================================

def _random_trace(rng, length, max_pieces=3):
    pieces = int(rng.integers(0, max_pieces + 1))
    if pieces == 0:
        return IntervalSet.empty(length)
    cuts = np.sort(rng.uniform(0.0, length, 2 * pieces))
    pairs = [(cuts[2 * i], cuts[2 * i + 1]) for i in range(pieces)]
    if rng.random() < 0.3:  # anchor at the start of the needle
        pairs[0] = (0.0, pairs[0][1])
    return IntervalSet.from_pairs(pairs, length)


def random_decomposition(params, delta, n_needles, rng, config=DEFAULT_CONFIG):
    """Seeded synthetic decomposition: lengths in [D/2, D + delta], model densities h_a"""
    if n_needles < 1:
        raise DomainError("n_needles must be positive")
    upper = params.D + delta
    if params.K > 0:
        upper = min(upper, params.conjugate_radius * (1 - 1e-6))
    residual = float(rng.uniform(0.0, 1 - vol_ratio_lower_bound(params, delta, config)))
    weights = rng.dirichlet(np.ones(n_needles)) * (1 - residual)
    needles = []
    for weight in weights:
        length = float(rng.uniform(params.D / 2, upper))
        a = float(rng.uniform(0.05, 0.95)) * length
        density = model_density(ModelDensityParams(params.with_diameter(length), a), config)
        distance = float(rng.uniform(0.0, delta))
        needles.append(Needle(
            weight=float(weight),
            length=length,
            density=density,
            trace=_random_trace(rng, length),
            ball_trace=IntervalSet.from_pairs([(0.0, min(length, params.D - distance))], length),
            distance_to_center=distance,
        ))
    residual = 1 - math.fsum(n.weight for n in needles)
    return NeedleDecomposition(needles=needles, residual_mass=max(residual, 0.0), params=params, delta=delta)


def optimal_decomposition(params, masses, weights, delta, config=DEFAULT_CONFIG):
    """Needles of length D carrying h_{a(v_q)} with trace [0, a(v_q)]: the attaining configuration"""
    if len(masses) != len(weights):
        raise InputError("masses and weights must have equal length")
    needles = []
    for v, weight in zip(masses, weights):
        point = isoperimetric_profile(params, v, config)
        needles.append(Needle(
            weight=float(weight),
            length=params.D,
            density=model_density(ModelDensityParams(params, point.a), config),
            trace=IntervalSet.from_pairs([(0.0, point.a)], params.D),
        ))
    residual = 1 - math.fsum(float(w) for w in weights)
    return NeedleDecomposition(needles=needles, residual_mass=residual, params=params, delta=delta)


# ============================================================================
# MODEL SPACES AND THE THEOREM CONCLUSION
# ============================================================================

@dataclass
class MeasureSpace1D:
    """([0, L], |.|, density dx) with a distinguished center and the radius D of the assumptions"""

    density: object
    center: float
    radius: float
    params: CurvatureParams


def ball_growth(h, x, D, r, config=DEFAULT_CONFIG):
    """f^X_{x,D}(r) = m(B_r(x)) / m(B_D(x))"""
    if not 0 < r <= D:
        raise DomainError(f"ball_growth requires 0 < r <= D={D}, got {r}")
    return h.integral(x - r, x + r, config) / h.integral(x - D, x + D, config)


def sharpness_family(params, a, config=DEFAULT_CONFIG):
    """m_a = Vol_{K,N}(D) h_a on [0, D], centered at 0"""
    density = model_density(ModelDensityParams(params, a), config)
    return MeasureSpace1D(density=density.scaled(ball_volume(params, params.D, config)),
                          center=0.0, radius=params.D, params=params)


def sharpness_ratio(params, a, config=DEFAULT_CONFIG):
    """m_a^+([0, a]) / (N^(1/N) omega_N^(1/N) m_a([0, a])^((N-1)/N)); tends to 1 as a -> 0"""
    mp = ModelDensityParams(params, a)
    if needle_mass(mp, config) >= 0.5:
        raise DomainError(f"a={a} is too large: v_D(a) must stay below 1/2")
    space = sharpness_family(params, a, config)
    E = IntervalSet.from_pairs([(0.0, a)], params.D)
    content = minkowski_content(E, space.density)
    mass = set_measure(E, space.density, config)
    return content / (sharp_constant(params.N) * mass ** ((params.N - 1) / params.N))


def rescaled_mass_conclusion(N, eta):
    """(1 - eta)^(1/N): the loss when the total-mass assumption only holds up to (1 - eta)"""
    if not 0 <= eta < 1:
        raise DomainError(f"eta must lie in [0, 1), got {eta}")
    return (1 - eta) ** (1 / N)


@dataclass
class TheoremReport:
    status: str  # passed | failed | reported | skipped | precondition-failed
    delta: float
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    psi_eff: Optional[float] = None
    mass: Optional[float] = None
    band: Optional[float] = None
    assumptions: dict = field(default_factory=dict)

    @property
    def slack(self):
        if self.lhs is None or self.rhs is None:
            return None
        return self.lhs - self.rhs

    @property
    def ok(self):
        return self.status in ("passed", "reported", "skipped")

    def to_dict(self):
        return {"status": self.status, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "psi_eff": self.psi_eff, "mass": self.mass, "delta": self.delta, "band": self.band,
                "assumptions": dict(self.assumptions)}


def verify_theorem_conclusion(space, E, delta, eta=None, growth_bound=None, model_family=False,
                              config=DEFAULT_CONFIG):
    """Realized deficit 1 - m^+(E) / (N^(1/N) omega_N^(1/N) m(E)^((N-1)/N)) with its assumptions.

    The deficit is asserted against config.psi_band only for the model family.
    Passing ``eta`` with K = N-1 adds the density-ratio assumption
    m(B_r)/(omega_N r^N) <= 1 + eta, evaluated at r = delta / 10.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    params, h = space.params, space.density
    mass = set_measure(E, h, config)
    if E.is_empty or mass <= 0:
        return TheoremReport(status="skipped", delta=delta, mass=mass)

    volume = ball_volume(params, space.radius, config)
    ball_mass = h.integral(space.center - space.radius, space.center + space.radius, config)
    assumptions = {
        "set_in_ball": E.within_ball(space.center, delta),
        "ball_mass": ball_mass >= volume * (1 - 1e-9),
    }
    if growth_bound is not None:
        radii = np.geomspace(delta / 100, delta, 10)
        assumptions["ball_growth"] = all(
            ball_growth(h, space.center, space.radius, float(r), config) <= growth_bound(float(r))
            for r in radii
        )
    if eta is not None and params.K > 0 and math.isclose(params.K, params.N - 1):
        r = delta / 10
        ratio = h.integral(space.center - r, space.center + r, config) / (omega(params.N) * r ** params.N)
        assumptions["density_ratio"] = ratio <= 1 + eta

    if not all(assumptions.values()):
        failed = [name for name, ok in assumptions.items() if not ok]
        logger.warning("Theorem preconditions failed: %s", ", ".join(failed))
        return TheoremReport(status="precondition-failed", delta=delta, mass=mass, assumptions=assumptions)

    lhs = minkowski_content(E, h)
    rhs = sharp_constant(params.N) * mass ** ((params.N - 1) / params.N)
    psi = 1 - lhs / rhs
    if model_family:
        status = "passed" if psi <= config.psi_band else "failed"
        band = config.psi_band
    else:
        status, band = "reported", None
    return TheoremReport(status=status, delta=delta, lhs=lhs, rhs=rhs, psi_eff=psi, mass=mass,
                         band=band, assumptions=assumptions)
