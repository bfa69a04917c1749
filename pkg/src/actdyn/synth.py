"""Synthetic fixtures: the Zachary Karate Club network, seeded random
initial activities, and trending weekly activity scenarios.

All randomness goes through numpy's default_rng (PCG64), so fixtures are
bit-reproducible from their seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum

import numpy as np

from .errors import InputError
from .graph import CollaborationNetwork
from .preprocess import ActivitySeries

# Canonical 34-node, 78-edge Zachary club (0-indexed, i < j).
_KARATE_EDGES = (
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8),
    (0, 10), (0, 11), (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31),
    (1, 2), (1, 3), (1, 7), (1, 13), (1, 17), (1, 19), (1, 21), (1, 30),
    (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28), (2, 32),
    (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
    (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33),
    (15, 32), (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33),
    (22, 32), (22, 33), (23, 25), (23, 27), (23, 29), (23, 32), (23, 33),
    (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33), (27, 33),
    (28, 31), (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32),
    (31, 33), (32, 33),
)

# Scenario weeks get calendar labels; the anchor is an arbitrary fixed Monday.
_SCENARIO_EPOCH = date(2014, 1, 6)


class ScenarioKind(Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    VARIABLE = "variable"


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    n_weeks: int = 13  # 10 + 3 lead weeks
    seed: int = 0
    base_level: float = 10.0
    step: float = 1.0

    def __post_init__(self):
        if self.n_weeks < 2:
            raise InputError("n_weeks must be >= 2")
        if not (self.base_level > 0):
            raise InputError("base_level must be > 0")
        if self.step < 0:
            raise InputError("step must be >= 0")


def karate_club() -> CollaborationNetwork:
    """The standard 34-node, 78-edge Zachary club; spectral radius 6.726."""
    users = [str(i) for i in range(34)]
    return CollaborationNetwork(users, [(str(a), str(b)) for a, b in _KARATE_EDGES])


def random_initial_activity(
    net: CollaborationNetwork, lo: float = 0.0, hi: float = 0.1, seed: int = 0
) -> np.ndarray:
    """Uniform iid activity per node in [lo, hi), reproducible by seed."""
    if not (0 <= lo < hi):
        raise InputError("need 0 <= lo < hi")
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, net.n)


def scenario_series(spec: ScenarioSpec, net: CollaborationNetwork) -> ActivitySeries:
    """Weekly activity whose aggregate follows the requested trend.

    Increasing grows by `step` per week from base_level; decreasing shrinks
    by `step` per week, floored at zero; variable fluctuates uniformly in
    base_level +- step (also floored). The aggregate is split across users
    proportionally to degree+1 so isolated nodes still receive activity.
    """
    w = np.arange(spec.n_weeks, dtype=float)
    if spec.kind is ScenarioKind.INCREASING:
        aggregate = spec.base_level + spec.step * w
    elif spec.kind is ScenarioKind.DECREASING:
        aggregate = np.maximum(spec.base_level - spec.step * w, 0.0)
    else:
        rng = np.random.default_rng(spec.seed)
        aggregate = np.maximum(
            spec.base_level + spec.step * rng.uniform(-1.0, 1.0, spec.n_weeks), 0.0
        )

    weights = net.degree + 1.0
    weights /= weights.sum()
    values = np.outer(weights, aggregate)
    weeks = [_SCENARIO_EPOCH + timedelta(weeks=int(i)) for i in range(spec.n_weeks)]
    return ActivitySeries(
        users=net.users, weeks=weeks, values=values, provenance="raw"
    )
