"""Rating generation: user behaviour traits, item quality and the default rating FIS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import cell_count
from .errors import ConfigError, DataError
from .fuzzy import FuzzyRule, FuzzySystem, LinguisticVariable, MembershipFunction, RuleBase
from .primitives import RngStream

BIAS_RANGE = (1.0, 5.0)
SPREAD_RANGE = (1.0, 4.0)
QUALITY_RANGE = (1.0, 5.0)

PREFERENCE_LABELS = ("hates", "lukewarm", "likes", "loves")
SPREAD_LABELS = ("tight", "wide")
BIAS_LABELS = ("low", "mid", "high")
QUALITY_LABELS = ("bad", "ok", "good", "great")
RATING_LABELS = ("vlow", "low", "mid", "high", "vhigh")

# (spread, bias, quality) -> rating for users who hate the item's categories
HATES_RULES = {
    ("tight", "low", "bad"): "vlow", ("tight", "low", "ok"): "vlow",
    ("tight", "low", "good"): "vlow", ("tight", "low", "great"): "low",
    ("tight", "mid", "bad"): "vlow", ("tight", "mid", "ok"): "vlow",
    ("tight", "mid", "good"): "low", ("tight", "mid", "great"): "low",
    ("tight", "high", "bad"): "vlow", ("tight", "high", "ok"): "low",
    ("tight", "high", "good"): "low", ("tight", "high", "great"): "mid",
    ("wide", "low", "bad"): "vlow", ("wide", "low", "ok"): "vlow",
    ("wide", "low", "good"): "vlow", ("wide", "low", "great"): "vlow",
    ("wide", "mid", "bad"): "vlow", ("wide", "mid", "ok"): "vlow",
    ("wide", "mid", "good"): "vlow", ("wide", "mid", "great"): "mid",
    ("wide", "high", "bad"): "vlow", ("wide", "high", "ok"): "vlow",
    ("wide", "high", "good"): "mid", ("wide", "high", "great"): "mid",
}


def _tri(a, b, c):
    return MembershipFunction.triangular(a, b, c)


def default_rating_variables(resolution: float = 0.01) -> dict[str, LinguisticVariable]:
    """Uniform partitions of each universe; keys are the variable names."""
    third = 1.0 / 3.0
    q1, q2 = 1.0 + 4.0 / 3.0, 1.0 + 8.0 / 3.0
    variables = [
        LinguisticVariable("preference", (0.0, 1.0), {
            "hates": _tri(0.0, 0.0, third),
            "lukewarm": _tri(0.0, third, 2 * third),
            "likes": _tri(third, 2 * third, 1.0),
            "loves": _tri(2 * third, 1.0, 1.0),
        }),
        LinguisticVariable("spread", SPREAD_RANGE, {
            "tight": MembershipFunction.trapezoidal(1.0, 1.0, 1.75, 3.25),
            "wide": MembershipFunction.trapezoidal(1.75, 3.25, 4.0, 4.0),
        }),
        LinguisticVariable("bias", BIAS_RANGE, {
            "low": _tri(1.0, 1.0, 3.0),
            "mid": _tri(1.0, 3.0, 5.0),
            "high": _tri(3.0, 5.0, 5.0),
        }),
        LinguisticVariable("quality", QUALITY_RANGE, {
            "bad": MembershipFunction.trapezoidal(1.0, 1.0, 1.0, q1),
            "ok": _tri(1.0, q1, q2),
            "good": _tri(q1, q2, 5.0),
            "great": MembershipFunction.trapezoidal(q2, 5.0, 5.0, 5.0),
        }),
        LinguisticVariable("rating", (1.0, 5.0), {
            "vlow": _tri(1.0, 1.0, 2.0),
            "low": _tri(1.0, 2.0, 3.0),
            "mid": _tri(2.0, 3.0, 4.0),
            "high": _tri(3.0, 4.0, 5.0),
            "vhigh": _tri(4.0, 5.0, 5.0),
        }, resolution),
    ]
    return {v.name: v for v in variables}


def _mirror(spread: str, bias: str, quality: str) -> tuple[str, str, str]:
    return (spread, BIAS_LABELS[len(BIAS_LABELS) - 1 - BIAS_LABELS.index(bias)],
            QUALITY_LABELS[len(QUALITY_LABELS) - 1 - QUALITY_LABELS.index(quality)])


def default_rating_level(preference: str, spread: str, bias: str, quality: str) -> int:
    """Index into ``RATING_LABELS`` of the default consequent.

    'hates' is the published block and 'lukewarm' is that block one level
    up. 'loves' mirrors 'hates' (bias, quality and rating reversed) and
    'likes' mirrors 'lukewarm', so wide-spread users are pushed to the
    extremes at both ends of the scale.
    """
    top = len(RATING_LABELS) - 1
    level = RATING_LABELS.index
    if preference == "hates":
        return level(HATES_RULES[spread, bias, quality])
    if preference == "lukewarm":
        return level(HATES_RULES[spread, bias, quality]) + 1
    if preference == "likes":
        return top - 1 - level(HATES_RULES[_mirror(spread, bias, quality)])
    if preference == "loves":
        return top - level(HATES_RULES[_mirror(spread, bias, quality)])
    raise ConfigError(f"unknown preference label {preference!r}")


def default_rating_rules() -> RuleBase:
    """The full 96-rule base, ordered preference, spread, bias, quality."""
    rules = []
    for pref in PREFERENCE_LABELS:
        for spread in SPREAD_LABELS:
            for bias in BIAS_LABELS:
                for quality in QUALITY_LABELS:
                    rating = RATING_LABELS[default_rating_level(pref, spread, bias, quality)]
                    rules.append(FuzzyRule(
                        (("preference", pref), ("spread", spread), ("bias", bias), ("quality", quality)),
                        ("rating", rating),
                    ))
    return RuleBase(tuple(rules))


def default_rating_system(resolution: float = 0.01) -> FuzzySystem:
    v = default_rating_variables(resolution)
    return FuzzySystem([v["preference"], v["spread"], v["bias"], v["quality"]], v["rating"], default_rating_rules())


@dataclass(frozen=True)
class Behaviors:
    bias: np.ndarray
    spread: np.ndarray


@dataclass(frozen=True)
class SparseRatings:
    user_ids: np.ndarray
    item_ids: np.ndarray
    ratings: np.ndarray
    n_users: int
    n_items: int

    def __len__(self) -> int:
        return len(self.ratings)

    @property
    def density(self) -> float:
        cells = self.n_users * self.n_items
        return len(self) / cells if cells else 0.0

    def dense(self) -> np.ndarray:
        """Users x items view with zeros for unrated cells."""
        out = np.zeros((self.n_users, self.n_items))
        out[self.user_ids, self.item_ids] = self.ratings
        return out


def assign_behaviors(n_users: int, rng: RngStream, *, bias_range=BIAS_RANGE, spread_range=SPREAD_RANGE) -> Behaviors:
    bias = rng.uniform(*bias_range, size=n_users)
    spread = rng.uniform(*spread_range, size=n_users)
    return Behaviors(bias, spread)


def assign_quality(n_items: int, rng: RngStream, *, quality_range=QUALITY_RANGE) -> np.ndarray:
    return rng.uniform(*quality_range, size=n_items)


def select_rated_cells(n_users: int, n_items: int, density: float, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """``round(density * n * m)`` distinct (user, item) cells, uniform, in row-major order."""
    if not 0.0 < density <= 1.0:
        raise ConfigError(f"ratings density must lie in (0, 1], got {density}")
    flat = rng.sample_without_replacement(n_users * n_items, cell_count(density, n_users, n_items))
    return flat // n_items, flat % n_items


def generate_ratings(affinity, behaviors: Behaviors, quality, cells, system: FuzzySystem | None = None,
                     *, workers: int = 1, cache: bool = False) -> SparseRatings:
    """Run the rating FIS on every selected cell."""
    affinity = np.asarray(affinity, dtype=float)
    quality = np.asarray(quality, dtype=float)
    users, items = (np.asarray(c, dtype=np.int64) for c in cells)
    n_users, n_items = affinity.shape
    if len(behaviors.bias) != n_users or len(quality) != n_items:
        raise DataError("behaviour/quality vectors do not match the affinity matrix")
    if users.size and (users.min() < 0 or users.max() >= n_users or items.min() < 0 or items.max() >= n_items):
        raise DataError("rated cell refers to a user or item outside the affinity matrix")
    system = system or default_rating_system()
    values = system.evaluate({
        "preference": affinity[users, items],
        "spread": behaviors.spread[users],
        "bias": behaviors.bias[users],
        "quality": quality[items],
    }, workers=workers, cache=cache)
    return SparseRatings(users, items, values, n_users, n_items)
