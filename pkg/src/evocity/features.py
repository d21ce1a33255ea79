"""Candidate abstraction: the compact attribute vector a selection agent sees.

Ten-thousand-cell grids reduce to five values — water fraction, street
style, average building height, building count, and the height of the city
centre relative to the rest of the city — plus a selected/rejected label
once a candidate has been judged.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .genome import CENTRE_RADIUS, WATER, CityGenome

LABEL_SELECTED = "selected"
LABEL_REJECTED = "rejected"
LABEL_UNLABELED = "unlabeled"

# Declaration order; classifiers break ties by this order.
NUMERIC_ATTRIBUTES = ("water_fraction", "avg_building_height", "building_count", "centre_height_ratio")
CATEGORICAL_ATTRIBUTES = ("street_style",)
ATTRIBUTE_ORDER = (
    "water_fraction",
    "street_style",
    "avg_building_height",
    "building_count",
    "centre_height_ratio",
)

# snake_case internally, camelCase on the wire and in training files
PUBLIC_ATTRIBUTE_NAMES = {
    "water_fraction": "waterFraction",
    "street_style": "streetStyle",
    "avg_building_height": "avgBuildingHeight",
    "building_count": "buildingCount",
    "centre_height_ratio": "centreHeightRatio",
}
INTERNAL_ATTRIBUTE_NAMES = {v: k for k, v in PUBLIC_ATTRIBUTE_NAMES.items()}
_JSON_KEYS = PUBLIC_ATTRIBUTE_NAMES
_FROM_JSON_KEYS = INTERNAL_ATTRIBUTE_NAMES


@dataclass(frozen=True)
class CandidateAttributes:
    water_fraction: float
    street_style: str
    avg_building_height: float
    building_count: int
    centre_height_ratio: float
    label: str = LABEL_UNLABELED

    def value(self, attribute: str):
        return getattr(self, attribute)

    def with_label(self, label: str) -> CandidateAttributes:
        return replace(self, label=label)

    def to_json_dict(self) -> dict:
        d = {_JSON_KEYS[name]: getattr(self, name) for name in ATTRIBUTE_ORDER}
        d["label"] = self.label
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> CandidateAttributes:
        kwargs = {_FROM_JSON_KEYS[k]: v for k, v in d.items() if k in _FROM_JSON_KEYS}
        return cls(label=d.get("label", LABEL_UNLABELED), **kwargs)


def extract_attributes(g: CityGenome) -> CandidateAttributes:
    """Compute the five-attribute abstraction of a genome (label: unlabeled).

    centre_height_ratio compares mean building height within CENTRE_RADIUS
    cells of a centre against mean building height beyond it; it is 0 when
    no buildings exist outside that neighbourhood (nothing to compare), and
    1 when heights are uniform on both sides.
    """
    total = g.ground.size
    water_fraction = float(np.count_nonzero(g.ground == WATER)) / total

    occupied = g.buildings > 0
    building_count = int(np.count_nonzero(occupied))
    if building_count:
        avg_building_height = float(g.heightmap[occupied].mean())
    else:
        avg_building_height = 0.0

    centre_mask = g.city == 1
    dist = ndimage.distance_transform_edt(~centre_mask)
    inner = occupied & (dist <= CENTRE_RADIUS)
    outer = occupied & (dist > CENTRE_RADIUS)
    if not np.any(outer):
        centre_height_ratio = 0.0
    else:
        inner_mean = float(g.heightmap[inner].mean()) if np.any(inner) else 0.0
        outer_mean = float(g.heightmap[outer].mean())
        centre_height_ratio = inner_mean / outer_mean if outer_mean > 0 else 0.0

    return CandidateAttributes(
        water_fraction=water_fraction,
        street_style=g.street_style,
        avg_building_height=avg_building_height,
        building_count=building_count,
        centre_height_ratio=centre_height_ratio,
    )
