"""
isoprofile - Sets on a Segment
Interval sets, measures, eps-enlargements, outer Minkowski content on [0, D]
and a brute-force isoperimetric oracle for a fixed density.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .config import DEFAULT_CONFIG
from .exceptions import DomainError, InputError, NumericError

logger = logging.getLogger(__name__)

DEFAULT_FD_EPS = (1e-4, 1e-5, 1e-6)


# ============================================================================
# INTERVAL SETS
# ============================================================================

@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint closed intervals of [0, D] in canonical form.

    Build with ``IntervalSet.from_pairs`` so ordering and merging hold.
    """

    intervals: tuple
    domain_length: float

    @classmethod
    def from_pairs(cls, pairs, D):
        cleaned = []
        for pair in pairs:
            try:
                left, right = (float(value) for value in pair)
            except (TypeError, ValueError) as e:
                raise InputError(f"Interval {pair!r} is not a pair of numbers") from e
            if not 0 <= left <= right <= D:
                raise DomainError(f"Interval [{left}, {right}] is not inside [0, {D}]")
            cleaned.append((left, right))
        cleaned.sort()
        merged = []
        for left, right in cleaned:
            if merged and left <= merged[-1][1]:  # touching or overlapping
                merged[-1] = (merged[-1][0], max(merged[-1][1], right))
            else:
                merged.append((left, right))
        return cls(intervals=tuple(merged), domain_length=float(D))

    @classmethod
    def empty(cls, D):
        return cls(intervals=(), domain_length=float(D))

    @classmethod
    def full(cls, D):
        return cls(intervals=((0.0, float(D)),), domain_length=float(D))

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    @property
    def is_empty(self):
        return not self.intervals

    def boundary_points(self):
        """Endpoints lying in the open segment (0, D)"""
        D = self.domain_length
        points = []
        for left, right in self.intervals:
            if left > 0:
                points.append(left)
            if right < D:
                points.append(right)
        return points

    def difference(self, other):
        """Closure of self minus other (measure-theoretic difference)"""
        pieces = []
        for left, right in self.intervals:
            cursor = left
            for o_left, o_right in other.intervals:
                if o_right <= cursor or o_left >= right:
                    continue
                if o_left > cursor:
                    pieces.append((cursor, o_left))
                cursor = max(cursor, o_right)
            if cursor < right:
                pieces.append((cursor, right))
        return IntervalSet.from_pairs(pieces, self.domain_length)

    def reflected(self):
        """Image under x -> D - x"""
        D = self.domain_length
        return IntervalSet.from_pairs([(D - r, D - l) for l, r in self.intervals], D)

    def within_ball(self, center, radius):
        """True when every point lies within distance radius of center"""
        return all(center - radius <= left and right <= center + radius for left, right in self.intervals)

    def to_list(self):
        return [[left, right] for left, right in self.intervals]


# ============================================================================
# MEASURE AND CONTENT
# ============================================================================

def set_measure(E, h, config=DEFAULT_CONFIG):
    """Sum of the integrals of h over the intervals of E"""
    return sum(h.integral(left, right, config) for left, right in E)


def enlarge(E, eps):
    """E^eps: every interval widened by eps, clipped to [0, D], merged"""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    D = E.domain_length
    return IntervalSet.from_pairs([(max(0.0, l - eps), min(D, r + eps)) for l, r in E], D)


def minkowski_content(E, h):
    """Outer Minkowski content of E for continuous h: h summed over boundary points in (0, D)"""
    return float(sum(h(point) for point in E.boundary_points()))


def minkowski_estimates(E, h, eps_values=DEFAULT_FD_EPS, config=DEFAULT_CONFIG):
    """Difference quotients (m(E^eps) - m(E)) / eps, integrating only the added slivers"""
    return [set_measure(enlarge(E, eps).difference(E), h, config) / eps for eps in eps_values]


# ============================================================================
# BRUTE-FORCE ORACLE
# ============================================================================

class _CumulativeMass:
    """Mass of [0, x] from node sums plus one short quadrature"""

    def __init__(self, h, nodes, config):
        self.h = h
        self.nodes = nodes
        self.config = config
        pieces = [h.integral(lo, hi, config) for lo, hi in zip(nodes[:-1], nodes[1:])]
        self.at_nodes = np.concatenate([[0.0], np.cumsum(pieces)])
        self.total = float(self.at_nodes[-1])

    def __call__(self, x):
        i = int(np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, len(self.nodes) - 2))
        return float(self.at_nodes[i]) + self.h.integral(self.nodes[i], x, self.config)

    def inverse(self, target):
        """Smallest-bracket solution of mass([0, x]) = target"""
        if target <= 0:
            return 0.0
        if target >= self.total:
            return float(self.nodes[-1])
        j = int(np.clip(np.searchsorted(self.at_nodes, target, side="left") - 1, 0, len(self.nodes) - 2))
        lo, hi = float(self.nodes[j]), float(self.nodes[j + 1])
        x = optimize.brentq(lambda s: self(s) - target, lo, hi, xtol=1e-15,
                            rtol=4 * np.finfo(float).eps, maxiter=self.config.inv_maxiter)
        if abs(self(x) - target) > self.config.bisect_tol:
            raise NumericError(f"Could not adjust mass to {target} within {self.config.bisect_tol}")
        return x


def brute_force_min_content(h, v, grid_n, family="all", config=DEFAULT_CONFIG):
    """Least Minkowski content over single intervals of h-mass v.

    Candidates: [0, x], [x, D] and interior [x, y] with x on a grid_n
    lattice, the free endpoint adjusted to mass v. ``family`` restricts
    to "anchored" or "interior" candidates. Returns (content, IntervalSet);
    ties go to the smaller left endpoint, then the smaller right endpoint.
    """
    if not 0 < v < 1:
        raise DomainError(f"Mass v must lie in (0, 1), got {v}")
    if family not in ("all", "anchored", "interior"):
        raise InputError(f"Unknown candidate family '{family}'")
    if grid_n < 2:
        raise DomainError(f"grid_n must be at least 2, got {grid_n}")
    D = h.domain_length
    nodes = np.linspace(0.0, D, grid_n)
    cdf = _CumulativeMass(h, nodes, config)
    if v > cdf.total + config.bisect_tol:
        raise DomainError(f"Mass {v} exceeds the total mass {cdf.total} of the density")

    candidates = []
    if family in ("all", "anchored"):
        x = cdf.inverse(v)
        candidates.append((float(h(x)) if x < D else 0.0, 0.0, x))
        y = cdf.inverse(cdf.total - v)
        candidates.append((float(h(y)) if y > 0 else 0.0, y, D))

    if family in ("all", "interior"):
        starts = [i for i in range(1, grid_n) if cdf.at_nodes[i] + v < cdf.total - config.bisect_tol]

        def interior(i):
            x = float(nodes[i])
            y = cdf.inverse(float(cdf.at_nodes[i]) + v)
            return (float(h(x)) + float(h(y)), x, y)

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                candidates.extend(pool.map(interior, starts))
        else:
            candidates.extend(interior(i) for i in starts)

    if not candidates:
        raise DomainError(f"No {family} candidate reaches mass {v}")
    content, left, right = min(candidates)
    logger.debug("Oracle over %d candidates: content %.12g on [%g, %g]", len(candidates), content, left, right)
    return content, IntervalSet.from_pairs([(left, right)], D)
