"""Volume-based diversity: balls, measures, and built-in assignments.

A discrete volume assignment maps a tuple to a finite region (a ball)
over some ground-point space; the diversity of a set is the measure of
the union of its balls.  That shape makes every diversity function here
monotone and submodular by construction, and marginal gains are plain
measures of set differences rather than re-evaluations.

All discrete arithmetic is exact (Fractions).  The only floating-point
path is the Monte-Carlo estimator for Euclidean ball unions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Hashable, Iterable, Mapping

import numpy as np

from .errors import InputError, LimitExceededError, UniverseError
from .relcore import Database, Fact, fraction_text

MULTI_ATTRIBUTE_CAP = 16


class CountMeasure:
    """Counting measure: every ground point weighs 1."""

    kind = "count"

    def of(self, region: frozenset) -> Fraction:
        return Fraction(len(region))

    def __repr__(self):
        return "CountMeasure()"


@dataclass(frozen=True)
class WeightedMeasure:
    """Finite weighted measure with a default weight for unlisted points."""

    weights: Mapping[Hashable, Fraction]
    default: Fraction = Fraction(1)

    def __post_init__(self):
        if self.default < 0:
            raise InputError("default point weight must be non-negative")
        for point, w in self.weights.items():
            if w < 0:
                raise InputError(f"negative weight for point {point!r}")

    kind = "weighted"

    def weight_of(self, point) -> Fraction:
        return self.weights.get(point, self.default)

    def of(self, region: frozenset) -> Fraction:
        total = Fraction(0)
        for point in region:
            total += self.weights.get(point, self.default)
        return total


@dataclass(frozen=True)
class VolumeAssignment:
    """Discrete volume assignment: ball function plus measure."""

    name: str
    ball_fn: Callable[[Hashable], frozenset]
    measure: CountMeasure | WeightedMeasure
    universe: frozenset | None = None

    is_discrete = True

    def ball(self, t) -> frozenset:
        if self.universe is not None and t not in self.universe:
            raise UniverseError(f"{t!r} is outside the universe of the {self.name} volume")
        return self.ball_fn(t)

    def covered(self, s: Iterable) -> frozenset:
        region: set = set()
        for t in s:
            region |= self.ball(t)
        return frozenset(region)

    def diversity(self, s: Iterable) -> Fraction:
        """Measure of the union of balls; 0 on the empty set."""
        return self.measure.of(self.covered(s))

    def marginal(self, s: Iterable, t) -> Fraction:
        """Gain of adding t: the measure of ball(t) minus the covered region."""
        return self.measure.of(self.ball(t) - self.covered(s))

    def marginal_given_covered(self, covered: frozenset, t) -> Fraction:
        return self.measure.of(self.ball(t) - covered)

    def sym_diff_distance(self, a, b) -> Fraction:
        """Measure of the symmetric difference of the two balls (pseudo-metric)."""
        return self.measure.of(self.ball(a) ^ self.ball(b))

    def marginal_distance(self, a, b) -> Fraction:
        """diversity({a,b}) - diversity({b}); asymmetric in general."""
        return self.diversity((a, b)) - self.diversity((b,))


def elem_volume() -> VolumeAssignment:
    """Ball of a tuple = the set of values it contains."""
    return VolumeAssignment("elem", lambda t: frozenset(t.values), CountMeasure())


def pos_volume() -> VolumeAssignment:
    """Ball of a tuple = its (value, position) pairs, positions 1-based."""
    return VolumeAssignment(
        "pos", lambda t: frozenset((v, i + 1) for i, v in enumerate(t.values)),
        CountMeasure())


def elem_weighted(weights: Mapping, default=Fraction(1)) -> VolumeAssignment:
    measure = WeightedMeasure(dict(weights), Fraction(default))
    return VolumeAssignment("elem-w", lambda t: frozenset(t.values), measure)


def pos_weighted(weights: Mapping, default=Fraction(1)) -> VolumeAssignment:
    measure = WeightedMeasure(dict(weights), Fraction(default))
    return VolumeAssignment(
        "pos-w", lambda t: frozenset((v, i + 1) for i, v in enumerate(t.values)),
        measure)


def provenance_volume(q, db: Database, limit: int | None = None) -> VolumeAssignment:
    """Ball of an answer = all database facts appearing in any witness.

    Materializes the answer set and its provenance once; the universe is
    exactly the query's answers, and asking for anything else is an error.
    """
    from . import engine  # local import to avoid a cycle

    answers = engine.enumerate_answers(q, db)
    kwargs = {} if limit is None else {"limit": limit}
    prov = engine.provenance_map(q, db, answers.answers, **kwargs)

    def ball(t: Fact) -> frozenset:
        try:
            return prov[t]
        except KeyError:
            raise UniverseError(f"{t!r} is not an answer of the query") from None

    return VolumeAssignment("provenance", ball, CountMeasure(),
                            universe=frozenset(answers.answers))


# ---------------------------------------------------------------------------
# Euclidean balls (continuous, Monte-Carlo)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float


@dataclass(frozen=True)
class ContinuousBallSet:
    """Equal-radius closed balls around numeric centers."""

    centers: tuple[tuple[float, ...], ...]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InputError("ball radius must be positive")
        if not self.centers:
            raise InputError("a continuous ball set needs at least one center")
        dims = {len(c) for c in self.centers}
        if len(dims) != 1:
            raise InputError("ball centers must share one dimension")

    @property
    def dimension(self) -> int:
        return len(self.centers[0])


def _interval_union_length(balls: ContinuousBallSet) -> float:
    points = sorted(c[0] for c in balls.centers)
    r = balls.radius
    total = 0.0
    cur_lo = points[0] - r
    cur_hi = points[0] + r
    for x in points[1:]:
        lo, hi = x - r, x + r
        if lo > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    return total + (cur_hi - cur_lo)


def mc_ball_union_volume(balls: ContinuousBallSet, samples: int, seed: int = 0) -> MCEstimate:
    """Volume of a union of equal-radius balls.

    Dimension 1 is computed exactly by interval sweeping (stderr 0).
    Higher dimensions sample uniformly from the bounding box with a
    seeded generator, so results are deterministic per seed.
    """
    if samples < 1:
        raise InputError("sample count must be positive")
    if balls.dimension == 1:
        return MCEstimate(_interval_union_length(balls), 0.0)
    centers = np.asarray(balls.centers, dtype=float)
    r = float(balls.radius)
    lo = centers.min(axis=0) - r
    hi = centers.max(axis=0) + r
    box = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    batch_cap = 1 << 18
    while remaining > 0:
        n = min(remaining, batch_cap)
        pts = rng.uniform(lo, hi, size=(n, balls.dimension))
        # squared distance to the nearest center, chunked over centers
        best = np.full(n, np.inf)
        for start in range(0, len(centers), 512):
            chunk = centers[start:start + 512]
            d2 = ((pts[:, None, :] - chunk[None, :, :]) ** 2).sum(axis=2).min(axis=1)
            np.minimum(best, d2, out=best)
        hits += int((best <= r * r).sum())
        remaining -= n
    p = hits / samples
    value = box * p
    stderr = box * (p * (1 - p) / samples) ** 0.5
    return MCEstimate(value, stderr)


@dataclass(frozen=True)
class EuclideanBallVolume:
    """Diversity as Lebesgue volume of radius-r balls around numeric tuples."""

    radius: float
    samples: int = 200_000
    seed: int = 0

    name = "ball"
    is_discrete = False

    def center(self, t: Fact) -> tuple[float, ...]:
        if not all(v.is_number for v in t.values):
            raise InputError(f"{t!r} has non-numeric values; ball volumes need numbers")
        return tuple(float(v.payload) for v in t.values)

    def ball(self, t: Fact) -> ContinuousBallSet:
        return ContinuousBallSet((self.center(t),), self.radius)

    def ball_set(self, s: Iterable) -> ContinuousBallSet | None:
        centers = tuple(sorted({self.center(t) for t in s}))
        if not centers:
            return None
        return ContinuousBallSet(centers, self.radius)

    def diversity_estimate(self, s: Iterable) -> MCEstimate:
        balls = self.ball_set(s)
        if balls is None:
            return MCEstimate(0.0, 0.0)
        return mc_ball_union_volume(balls, self.samples, self.seed)

    def diversity(self, s: Iterable) -> float:
        return self.diversity_estimate(s).value

    def marginal(self, s: Iterable, t) -> float:
        items = list(s)
        return self.diversity(items + [t]) - self.diversity(items)


# ---------------------------------------------------------------------------
# Multi-attribute utility weights


@dataclass(frozen=True)
class MultiAttributeWeights:
    """Non-negative weights on attribute subsets of a finite universe.

    The utility of a selection S is the total weight of subsets S
    intersects.  Kept sparse: only strictly positive weights are stored.
    """

    universe: tuple
    weights: Mapping[frozenset, Fraction]

    def __post_init__(self):
        ground = frozenset(self.universe)
        if len(ground) != len(self.universe):
            raise InputError("universe elements must be distinct")
        for a, w in self.weights.items():
            if not a:
                raise InputError("the empty attribute set cannot carry weight")
            if not a <= ground:
                raise InputError(f"attribute set {sorted(map(repr, a))} leaves the universe")
            if w < 0:
                raise InputError("attribute weights must be non-negative")

    def diversity(self, s: Iterable) -> Fraction:
        chosen = frozenset(s)
        total = Fraction(0)
        for a, w in self.weights.items():
            if a & chosen:
                total += w
        return total


def volume_from_multiattribute(maw: MultiAttributeWeights,
                               cap: int = MULTI_ATTRIBUTE_CAP) -> VolumeAssignment:
    """Realize subset-utility weights as a volume assignment, exactly.

    Ground points are the positively weighted attribute sets themselves;
    an element's ball collects the sets containing it.  The weighted
    measure (default 0) then reproduces the utility on every selection.
    """
    if len(maw.universe) > cap:
        raise LimitExceededError(
            f"universe of size {len(maw.universe)} exceeds the cap of {cap}")
    positive = {a: w for a, w in maw.weights.items() if w > 0}
    ground = frozenset(maw.universe)

    def ball(x) -> frozenset:
        return frozenset(a for a in positive if x in a)

    return VolumeAssignment("multiattr", ball,
                            WeightedMeasure(positive, Fraction(0)),
                            universe=ground)


def multiattribute_from_volume(v: VolumeAssignment, universe: Iterable,
                               cap: int = MULTI_ATTRIBUTE_CAP) -> MultiAttributeWeights:
    """Express a discrete volume over a finite universe as subset weights.

    The weight of a subset A is the measure of the region covered by all
    of A's balls and none of the others; subsets with an empty common
    intersection are pruned early.
    """
    if not getattr(v, "is_discrete", False):
        raise InputError("only discrete volume assignments convert to subset weights")
    elements = tuple(universe)
    if len(elements) > cap:
        raise LimitExceededError(
            f"universe of size {len(elements)} exceeds the cap of {cap}")
    balls = {x: v.ball(x) for x in elements}
    weights: dict[frozenset, Fraction] = {}
    for size in range(1, len(elements) + 1):
        for combo in combinations(elements, size):
            inter = balls[combo[0]]
            for x in combo[1:]:
                inter = inter & balls[x]
                if not inter:
                    break
            if not inter:
                continue
            region = set(inter)
            for x in elements:
                if x not in combo:
                    region -= balls[x]
                    if not region:
                        break
            if not region:
                continue
            w = v.measure.of(frozenset(region))
            if w > 0:
                weights[frozenset(combo)] = w
    return MultiAttributeWeights(elements, weights)


def format_weight(w) -> str:
    """Stable text form for Fractions/floats in CLI payloads."""
    if isinstance(w, Fraction):
        return fraction_text(w)
    return repr(float(w))
