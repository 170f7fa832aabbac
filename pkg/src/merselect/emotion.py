"""Categorical labels on the valence-arousal plane.

Quadrants follow the usual colour legend (Q1 happy/excited ... Q4 calm/content).
Hevner's eight adjective clusters are laid out two per quadrant as 45-degree
sectors, counter-clockwise from the positive valence axis.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence


class QuadrantLabel(str, Enum):
    Q1_happy_excited = "Q1_happy_excited"
    Q2_angry_afraid = "Q2_angry_afraid"
    Q3_sad_depressed = "Q3_sad_depressed"
    Q4_calm_content = "Q4_calm_content"


QUADRANTS = tuple(QuadrantLabel)
QUADRANT_COLORS = {
    QuadrantLabel.Q1_happy_excited: "red",
    QuadrantLabel.Q2_angry_afraid: "green",
    QuadrantLabel.Q3_sad_depressed: "blue",
    QuadrantLabel.Q4_calm_content: "gold",
}

# Hevner's cycle keeps its circular order, starting at sector 0 (0-45 deg).
DEFAULT_HEVNER_LABELS = (
    "happy", "exciting", "vigorous", "dignified", "sad", "dreamy", "serene", "graceful",
)


class EmotionError(ValueError):
    pass


@dataclass(frozen=True)
class VaPoint:
    valence: float
    arousal: float

    def __post_init__(self):
        for name in ("valence", "arousal"):
            v = getattr(self, name)
            if not math.isfinite(v) or abs(v) > 1.0:
                raise EmotionError(f"{name} {v!r} is outside [-1, 1]")


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned region ``v_min < V <= v_max, a_min < A <= a_max``."""

    label: str
    v_min: float
    v_max: float
    a_min: float
    a_max: float

    def contains(self, p: VaPoint) -> bool:
        return self.v_min < p.valence <= self.v_max and self.a_min < p.arousal <= self.a_max


@dataclass(frozen=True)
class HevnerLayout:
    labels: tuple = DEFAULT_HEVNER_LABELS
    mode: str = "angular"
    regions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "regions", tuple(self.regions))
        if len(self.labels) != 8:
            raise EmotionError(f"a Hevner layout needs exactly 8 labels, got {len(self.labels)}")
        if self.mode not in ("angular", "rectangular"):
            raise EmotionError(f"unknown layout mode {self.mode!r}")
        if self.mode == "rectangular" and not self.regions:
            raise EmotionError("rectangular mode needs at least one region")


def quadrant_of(p: VaPoint) -> QuadrantLabel:
    """Quadrant with axis points assigned to the non-negative side."""
    if p.valence >= 0:
        return QuadrantLabel.Q1_happy_excited if p.arousal >= 0 else QuadrantLabel.Q4_calm_content
    return QuadrantLabel.Q2_angry_afraid if p.arousal >= 0 else QuadrantLabel.Q3_sad_depressed


def sector_index(p: VaPoint) -> int:
    """floor(angle / 45 deg) with angle = atan2(A, V) in [0, 360).

    Evaluated with sign and magnitude comparisons rather than atan2, so points
    on the diagonals and axes land exactly where the formula puts them.
    """
    v, a = p.valence, p.arousal
    if v == 0 and a == 0:
        raise EmotionError("the origin has no direction")
    av, aa = abs(v), abs(a)
    if a >= 0 and v > 0:                      # [0, 90)
        return 0 if aa < av else 1
    if a > 0 and v <= 0:                      # [90, 180)
        return 2 if av < aa else 3
    if a <= 0 and v < 0:                      # [180, 270)
        return 4 if aa < av else 5
    return 6 if av < aa else 7                # [270, 360)


def hevner_cluster_of(p: VaPoint, layout: HevnerLayout = HevnerLayout()) -> str:
    if layout.mode == "angular":
        return layout.labels[sector_index(p)]
    for region in layout.regions:
        if region.contains(p):
            return region.label
    raise EmotionError(f"point ({p.valence}, {p.arousal}) is not inside any configured region")


def categorize_dataset(annotations: Iterable, mode: str = "quadrant", layout: Optional[HevnerLayout] = None):
    """Label ``(id, VaPoint)`` pairs; returns ``(labelled, counts)``."""
    layout = layout or HevnerLayout()
    if mode not in ("quadrant", "hevner"):
        raise EmotionError(f"unknown mode {mode!r}")
    labelled = []
    for sid, p in annotations:
        label = quadrant_of(p).value if mode == "quadrant" else hevner_cluster_of(p, layout)
        labelled.append((sid, label))
    counts = Counter(label for _, label in labelled)
    return labelled, dict(counts)


def label_order(mode: str, layout: Optional[HevnerLayout] = None) -> Sequence[str]:
    if mode == "quadrant":
        return [q.value for q in QUADRANTS]
    layout = layout or HevnerLayout()
    if layout.mode == "rectangular":
        return list(dict.fromkeys(r.label for r in layout.regions))
    return list(layout.labels)
