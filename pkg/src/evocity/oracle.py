"""Machine-readable design briefs and a scripted stand-in for the human.

A brief is a weighted list of attribute goals; the oracle scores each
candidate's attribute vector against it, picks the two best (with an
optional dose of inconsistency, because real designers wander), and decides
acceptance once the best candidate clears the brief's threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .evolution import ParentSelection, Population, SOURCE_ORACLE
from .features import ATTRIBUTE_ORDER, CandidateAttributes

GOAL_MAXIMIZE = "maximize"
GOAL_MINIMIZE = "minimize"
GOAL_APPROXIMATELY = "approximately"
GOAL_EQUALS = "equals"

# Fixed normalizers for maximize/minimize satisfaction, matching the
# default engine configuration (60-storey cap, 100x100 grid).
ATTRIBUTE_SCALE = {
    "water_fraction": 1.0,
    "avg_building_height": 60.0,
    "building_count": 10000.0,
    "centre_height_ratio": 5.0,
}

DEFAULT_ACCEPT_SCORE = 0.9
DEFAULT_INCONSISTENCY_RATE = 0.1


@dataclass(frozen=True)
class Target:
    attribute: str
    goal: str
    weight: float = 1.0
    value: float | None = None       # approximately
    tolerance: float | None = None   # approximately
    category: str | None = None      # equals

    def __post_init__(self) -> None:
        if self.attribute not in ATTRIBUTE_ORDER:
            raise ValueError(f"unknown attribute {self.attribute!r}")
        if self.weight <= 0:
            raise ValueError("target weight must be > 0")
        if self.goal == GOAL_APPROXIMATELY:
            if self.value is None or self.tolerance is None or self.tolerance <= 0:
                raise ValueError("approximately needs a value and a positive tolerance")
        elif self.goal == GOAL_EQUALS:
            if self.category is None:
                raise ValueError("equals needs a category")
        elif self.goal not in (GOAL_MAXIMIZE, GOAL_MINIMIZE):
            raise ValueError(f"unknown goal {self.goal!r}")

    def satisfaction(self, attrs: CandidateAttributes) -> float:
        value = attrs.value(self.attribute)
        if self.goal == GOAL_EQUALS:
            return 1.0 if value == self.category else 0.0
        if self.goal == GOAL_APPROXIMATELY:
            return max(0.0, 1.0 - abs(float(value) - self.value) / self.tolerance)
        scale = ATTRIBUTE_SCALE[self.attribute]
        ratio = min(max(float(value) / scale, 0.0), 1.0)
        return ratio if self.goal == GOAL_MAXIMIZE else 1.0 - ratio


@dataclass
class Brief:
    name: str
    targets: list[Target]
    accept_score: float = DEFAULT_ACCEPT_SCORE
    description: str = ""

    def __post_init__(self) -> None:
        if not self.targets:
            raise ValueError("a brief needs at least one target")
        if not 0.0 < self.accept_score <= 1.0:
            raise ValueError("accept_score must lie in (0, 1]")
        total = sum(t.weight for t in self.targets)
        # Weights are normalized once, at load.
        self.targets = [
            Target(
                attribute=t.attribute, goal=t.goal, weight=t.weight / total,
                value=t.value, tolerance=t.tolerance, category=t.category,
            )
            for t in self.targets
        ]


@dataclass
class RunStats:
    mode: str
    interactive_generations: int
    total_generations: int
    wall_clock_seconds: float
    accepted: bool
    final_score: float

    def __post_init__(self) -> None:
        if self.interactive_generations > self.total_generations:
            raise ValueError("interactive generations cannot exceed total")

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "interactiveGenerations": self.interactive_generations,
            "totalGenerations": self.total_generations,
            "wallClockSeconds": self.wall_clock_seconds,
            "accepted": self.accepted,
            "finalScore": self.final_score,
        }


def score_candidate(brief: Brief, attrs: CandidateAttributes) -> float:
    """Weighted mean of per-target satisfactions, in [0, 1]."""
    return sum(t.weight * t.satisfaction(attrs) for t in brief.targets)


def oracle_select(
    brief: Brief,
    pop: Population,
    attrs: list[CandidateAttributes],
    rng: np.random.Generator,
    inconsistency_rate: float = DEFAULT_INCONSISTENCY_RATE,
) -> ParentSelection:
    """Pick the two best-scoring candidates, sometimes wandering off-script.

    With probability ``inconsistency_rate`` one of the two picks is swapped
    for a uniformly random candidate outside the argmax pair.
    """
    if len(attrs) != len(pop.candidates):
        raise ValueError("attribute rows must align with the population")
    n = len(attrs)
    scores = [score_candidate(brief, a) for a in attrs]
    ranked = sorted(range(n), key=lambda i: (-scores[i], i))
    picks = [ranked[0], ranked[1]]
    if inconsistency_rate > 0 and rng.random() < inconsistency_rate:
        others = [i for i in range(n) if i not in picks]
        if others:
            slot = int(rng.integers(0, 2))
            picks[slot] = int(rng.choice(others))
    return ParentSelection(picks[0], picks[1], source=SOURCE_ORACLE)


def acceptance_check(
    brief: Brief, pop: Population, attrs: list[CandidateAttributes]
) -> tuple[bool, float]:
    """Whether the best candidate clears the brief's accept threshold."""
    if len(attrs) != len(pop.candidates):
        raise ValueError("attribute rows must align with the population")
    best = max(score_candidate(brief, a) for a in attrs)
    return best >= brief.accept_score, best


# ----------------------------------------------------------------------
# Brief files
# ----------------------------------------------------------------------

def _target_from_json(d: dict) -> Target:
    from .features import INTERNAL_ATTRIBUTE_NAMES

    attribute = d["attribute"]
    attribute = INTERNAL_ATTRIBUTE_NAMES.get(attribute, attribute)
    goal = d["goal"]
    if isinstance(goal, str):
        return Target(attribute=attribute, goal=goal, weight=d.get("weight", 1.0))
    if GOAL_APPROXIMATELY in goal:
        spec = goal[GOAL_APPROXIMATELY]
        return Target(
            attribute=attribute, goal=GOAL_APPROXIMATELY, weight=d.get("weight", 1.0),
            value=float(spec["value"]), tolerance=float(spec["tolerance"]),
        )
    if GOAL_EQUALS in goal:
        return Target(
            attribute=attribute, goal=GOAL_EQUALS, weight=d.get("weight", 1.0),
            category=goal[GOAL_EQUALS],
        )
    raise ValueError(f"unparseable goal {goal!r}")


def brief_from_json_dict(d: dict) -> Brief:
    return Brief(
        name=d["name"],
        targets=[_target_from_json(t) for t in d["targets"]],
        accept_score=d.get("acceptScore", DEFAULT_ACCEPT_SCORE),
        description=d.get("description", ""),
    )


def load_brief(path: str | Path) -> Brief:
    with open(path, encoding="utf-8") as fh:
        return brief_from_json_dict(json.load(fh))


def bundled_brief_names() -> list[str]:
    root = resources.files("evocity").joinpath("briefs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled_brief(name: str) -> Brief:
    path = resources.files("evocity").joinpath("briefs", f"{name}.json")
    with path.open(encoding="utf-8") as fh:
        return brief_from_json_dict(json.load(fh))
