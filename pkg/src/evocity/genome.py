"""City DNA: five aligned integer grids plus a street-style gene.

A candidate city is encoded as 2D grids sharing one shape:

* ``ground``     0 = water, 1 = land
* ``heightmap``  building height in storeys (0 where there is no building)
* ``streets``    0 = none, 1 = street
* ``buildings``  0 = none, 1 = box, 2 = cylinder
* ``city``       1 marks a city-centre cell (1..3 of them, always on land)

plus ``street_style`` in {"NewYork", "European"}.

The genetic operators (``random_genome``, ``crossover``, ``mutate``) are pure
functions of their inputs and the generator passed in, and always return
genomes satisfying the invariants above; ``repair`` is the shared
normalization pass that enforces them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

WATER = 0
LAND = 1
STREET = 1
BUILDING_NONE = 0
BUILDING_BOX = 1
BUILDING_CYLINDER = 2

STYLE_NEW_YORK = "NewYork"
STYLE_EUROPEAN = "European"
STREET_STYLES = (STYLE_NEW_YORK, STYLE_EUROPEAN)

MAX_CITY_CENTRES = 3
# Window radius used both for "surrounding mean height" during centre
# repair and for the centre neighbourhood in feature extraction.
CENTRE_RADIUS = 5

# Per-grid mutation scales: the effective per-locus probability is
# scale * rate.  Applying the raw rate to every cell would randomize the
# whole genome each generation, so each grid gets a small multiplier.
GROUND_FLIP_SCALE = 0.05
HEIGHT_PERTURB_SCALE = 0.5
HEIGHT_PERTURB_SIGMA = 3.0
STREET_TOGGLE_SCALE = 0.02
BUILDING_RESAMPLE_SCALE = 0.1
CENTRE_RELOCATE_SCALE = 0.05
STYLE_FLIP_DIVISOR = 10.0

# Resample distribution over (none, box, cylinder).  Chosen close to the
# stationary density of freshly generated cities so the building count does
# not drift systematically under mutation alone.
BUILDING_RESAMPLE_P = (0.62, 0.32, 0.06)

_GRID_NAMES = ("ground", "heightmap", "streets", "buildings", "city")


class DimensionMismatch(ValueError):
    """Raised when two genomes do not share the same grid shape."""


class InvalidRate(ValueError):
    """Raised when a mutation rate is outside [0, 1]."""


@dataclass(frozen=True)
class GridDim:
    width: int = 100
    height: int = 100

    def __post_init__(self) -> None:
        if self.width < 4 or self.height < 4:
            raise ValueError(f"grid must be at least 4x4, got {self.width}x{self.height}")

    @property
    def shape(self) -> tuple[int, int]:
        # numpy arrays are indexed (row, col) == (y, x)
        return (self.height, self.width)

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass
class EvolutionConfig:
    dim: GridDim = field(default_factory=GridDim)
    population_size: int = 9
    mutation_rate: float = 0.2
    max_height: int = 60
    centre_variance: float = 0.15
    crossover_block_size: int = 10
    seed: int = 0
    water_fraction: float = 0.3
    elitism: bool = True

    def __post_init__(self) -> None:
        if self.population_size < 3:
            raise ValueError("population_size must be >= 3")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise InvalidRate(f"mutation_rate {self.mutation_rate} not in [0, 1]")
        if self.max_height < 1:
            raise ValueError("max_height must be positive")
        if self.centre_variance < 0:
            raise ValueError("centre_variance must be >= 0")
        if self.crossover_block_size < 1:
            raise ValueError("crossover_block_size must be positive")
        if not 0.0 <= self.water_fraction <= 1.0:
            raise ValueError("water_fraction must be in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class CityGenome:
    ground: np.ndarray
    heightmap: np.ndarray
    streets: np.ndarray
    buildings: np.ndarray
    city: np.ndarray
    street_style: str

    def __post_init__(self) -> None:
        shapes = {g.shape for g in self.grids()}
        if len(shapes) != 1:
            raise DimensionMismatch(f"grids do not share one shape: {shapes}")
        if self.street_style not in STREET_STYLES:
            raise ValueError(f"unknown street style {self.street_style!r}")

    def grids(self) -> tuple[np.ndarray, ...]:
        return (self.ground, self.heightmap, self.streets, self.buildings, self.city)

    @property
    def dim(self) -> GridDim:
        h, w = self.ground.shape
        return GridDim(width=w, height=h)

    def copy(self) -> CityGenome:
        return CityGenome(
            ground=self.ground.copy(),
            heightmap=self.heightmap.copy(),
            streets=self.streets.copy(),
            buildings=self.buildings.copy(),
            city=self.city.copy(),
            street_style=self.street_style,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CityGenome):
            return NotImplemented
        return self.street_style == other.street_style and all(
            np.array_equal(a, b) for a, b in zip(self.grids(), other.grids())
        )

    def to_json_dict(self) -> dict:
        h, w = self.ground.shape
        return {
            "dim": {"width": w, "height": h},
            "streetStyle": self.street_style,
            "ground": self.ground.tolist(),
            "heightmap": self.heightmap.tolist(),
            "streets": self.streets.tolist(),
            "buildings": self.buildings.tolist(),
            "city": self.city.tolist(),
        }

    def canonical_json(self) -> str:
        # Field order is fixed by to_json_dict so the digest is stable.
        return json.dumps(self.to_json_dict(), separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    @classmethod
    def from_json_dict(cls, d: dict) -> CityGenome:
        def grid(name: str) -> np.ndarray:
            return np.asarray(d[name], dtype=np.int16)

        return cls(
            ground=grid("ground"),
            heightmap=grid("heightmap"),
            streets=grid("streets"),
            buildings=grid("buildings"),
            city=grid("city"),
            street_style=d["streetStyle"],
        )


def validate_invariants(g: CityGenome) -> list[str]:
    """Return a list of invariant violations (empty when the genome is valid)."""
    problems = []
    water = g.ground == WATER
    no_building = g.buildings == BUILDING_NONE
    street = g.streets == STREET
    if np.any(g.heightmap[water | street | no_building] != 0):
        problems.append("heightmap nonzero without a building on land off-street")
    if np.any(g.buildings[water] != BUILDING_NONE) or np.any(g.streets[water] != 0):
        problems.append("buildings or streets on water")
    if np.any(g.buildings[street] != BUILDING_NONE):
        problems.append("building on a street cell")
    n_centres = int(np.sum(g.city == 1))
    if not 1 <= n_centres <= MAX_CITY_CENTRES:
        problems.append(f"{n_centres} city centres (expected 1..{MAX_CITY_CENTRES})")
    if np.any(g.ground[g.city == 1] != LAND):
        problems.append("city centre on water")
    if np.any(g.heightmap < 0):
        problems.append("negative height")
    return problems


# ----------------------------------------------------------------------
# Repair
# ----------------------------------------------------------------------

def _neighbourhood_mean_height(heightmap: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Mean height inside a (2r+1)-square window around each given cell."""
    h, w = heightmap.shape
    r = CENTRE_RADIUS
    means = np.empty(len(cells), dtype=float)
    for k, (i, j) in enumerate(cells):
        window = heightmap[max(0, i - r):i + r + 1, max(0, j - r):j + r + 1]
        means[k] = float(window.mean())
    return means


def repair(g: CityGenome) -> CityGenome:
    """Normalize a genome so every invariant holds.

    Water clears streets, buildings, and heights; streets clear buildings
    and heights; cells without buildings have height zero; the city-centre
    count is forced back into 1..3 (promoting the tallest land cell when
    none survives, keeping the centres with the tallest surroundings when
    too many do).  Idempotent, and the identity on a valid genome.
    """
    out = g.copy()
    if not np.any(out.ground == LAND):
        # Degenerate all-water genome: reclaim one central cell so a centre
        # can exist at all.
        h, w = out.ground.shape
        out.ground[h // 2, w // 2] = LAND

    water = out.ground == WATER
    out.streets[water] = 0
    out.buildings[water] = BUILDING_NONE
    out.buildings[out.streets == STREET] = BUILDING_NONE
    np.clip(out.heightmap, 0, None, out=out.heightmap)
    out.heightmap[out.buildings == BUILDING_NONE] = 0

    out.city[water] = 0
    centres = np.argwhere(out.city == 1)
    if len(centres) == 0:
        flat = np.where(out.ground.ravel() == LAND, out.heightmap.ravel(), -1)
        idx = int(np.argmax(flat))  # ties resolve to the lowest flat index
        out.city.ravel()[idx] = 1
    elif len(centres) > MAX_CITY_CENTRES:
        means = _neighbourhood_mean_height(out.heightmap, centres)
        flat_idx = centres[:, 0] * out.city.shape[1] + centres[:, 1]
        order = np.lexsort((flat_idx, -means))
        for i, j in centres[order[MAX_CITY_CENTRES:]]:
            out.city[i, j] = 0
    return out


# ----------------------------------------------------------------------
# Random initialization
# ----------------------------------------------------------------------

def _water_mask(dim: GridDim, water_fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Half-plane-plus-noise coastline covering ~water_fraction of the grid."""
    if water_fraction <= 0.0:
        return np.zeros(dim.shape, dtype=bool)
    if water_fraction >= 1.0:
        return np.ones(dim.shape, dtype=bool)
    h, w = dim.shape
    theta = rng.uniform(0.0, 2.0 * np.pi)
    yy, xx = np.mgrid[0:h, 0:w]
    proj = xx * np.cos(theta) + yy * np.sin(theta)
    span = proj.max() - proj.min()
    proj = (proj - proj.min()) / (span if span > 0 else 1.0)
    noise = ndimage.uniform_filter(rng.normal(0.0, 1.0, size=dim.shape), size=7)
    noise *= 0.10 / max(noise.std(), 1e-9)
    fieldv = proj + noise
    # Thresholding at the requested quantile pins the realized fraction.
    cut = np.quantile(fieldv, water_fraction)
    return fieldv < cut


def _newyork_streets(dim: GridDim, land: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    streets = np.zeros(dim.shape, dtype=np.int16)
    ky = int(rng.integers(5, 13))
    kx = int(rng.integers(5, 13))
    oy = int(rng.integers(0, ky))
    ox = int(rng.integers(0, kx))
    streets[oy::ky, :] = STREET
    streets[:, ox::kx] = STREET
    streets[~land] = 0
    return streets


def _european_streets(
    dim: GridDim, land: np.ndarray, centre: tuple[int, int], rng: np.random.Generator
) -> np.ndarray:
    """Radial spokes plus concentric rings around the primary centre."""
    h, w = dim.shape
    cy, cx = centre
    yy, xx = np.mgrid[0:h, 0:w]
    dy = yy - cy
    dx = xx - cx
    dist = np.hypot(dy, dx)
    angle = np.arctan2(dy, dx)

    n_spokes = int(rng.integers(6, 11))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    sector = 2.0 * np.pi / n_spokes
    dtheta = np.abs(((angle - phase + sector / 2) % sector) - sector / 2)
    spokes = (dtheta * dist < 0.6) & (dist > 1.5)

    step = int(rng.integers(6, 11))
    ring_offset = np.abs(((dist + step / 2) % step) - step / 2)
    rings = (ring_offset < 0.55) & (dist > step / 2)

    streets = np.where(spokes | rings, STREET, 0).astype(np.int16)
    streets[~land] = 0
    return streets


def _height_field(
    dim: GridDim,
    centres: np.ndarray,
    max_height: int,
    centre_variance: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Linear falloff from the nearest centre, with per-cell variance."""
    centre_mask = np.zeros(dim.shape, dtype=bool)
    centre_mask[centres[:, 0], centres[:, 1]] = True
    dist = ndimage.distance_transform_edt(~centre_mask)
    falloff = 0.35 * min(dim.width, dim.height)
    base = 2.0
    profile = base + (max_height - base) * np.clip(1.0 - dist / falloff, 0.0, 1.0)
    jitter = 1.0 + rng.uniform(-centre_variance, centre_variance, size=dim.shape)
    heights = np.rint(profile * jitter).astype(np.int16)
    return np.clip(heights, 1, max_height)


def random_genome(config: EvolutionConfig, rng: np.random.Generator) -> CityGenome:
    """Generate one random valid city.

    Coastline from a noisy half-plane mask, 1..3 city centres on land,
    streets laid out for a randomly chosen style, buildings denser and
    taller near the centres.
    """
    dim = config.dim
    water = _water_mask(dim, config.water_fraction, rng)
    ground = np.where(water, WATER, LAND).astype(np.int16)
    if not np.any(ground == LAND):
        ground[dim.shape[0] // 2, dim.shape[1] // 2] = LAND
    land = ground == LAND

    land_idx = np.flatnonzero(land.ravel())
    n_centres = int(rng.integers(1, MAX_CITY_CENTRES + 1))
    n_centres = min(n_centres, len(land_idx))
    picked = rng.choice(land_idx, size=n_centres, replace=False)
    city = np.zeros(dim.shape, dtype=np.int16)
    city.ravel()[picked] = 1
    centres = np.argwhere(city == 1)

    style = STREET_STYLES[int(rng.integers(0, 2))]
    if style == STYLE_NEW_YORK:
        streets = _newyork_streets(dim, land, rng)
    else:
        primary = (int(centres[0, 0]), int(centres[0, 1]))
        streets = _european_streets(dim, land, primary, rng)

    heights = _height_field(dim, centres, config.max_height, config.centre_variance, rng)

    centre_mask = np.zeros(dim.shape, dtype=bool)
    centre_mask[centres[:, 0], centres[:, 1]] = True
    dist = ndimage.distance_transform_edt(~centre_mask)
    falloff = 0.35 * min(dim.width, dim.height)
    density = 0.25 + 0.35 * np.clip(1.0 - dist / falloff, 0.0, 1.0)
    eligible = land & (streets == 0)
    placed = eligible & (rng.random(dim.shape) < density)
    kind = np.where(rng.random(dim.shape) < 0.15, BUILDING_CYLINDER, BUILDING_BOX)
    buildings = np.where(placed, kind, BUILDING_NONE).astype(np.int16)

    genome = CityGenome(
        ground=ground,
        heightmap=np.where(buildings > 0, heights, 0).astype(np.int16),
        streets=streets,
        buildings=buildings,
        city=city,
        street_style=style,
    )
    return repair(genome)


# ----------------------------------------------------------------------
# Crossover
# ----------------------------------------------------------------------

def block_grid_shape(dim: GridDim, block_size: int) -> tuple[int, int]:
    return (-(-dim.shape[0] // block_size), -(-dim.shape[1] // block_size))


def splice_blocks(
    a: CityGenome, b: CityGenome, take_a: np.ndarray, block_size: int, style_from_a: bool
) -> CityGenome:
    """Assemble a child by copying aligned blocks from one parent or the other.

    ``take_a`` is a boolean array over the block grid (row-major);  the same
    mask is applied to all five grids so terrain, streets, buildings and
    heights of a block travel together.  No repair is applied here.
    """
    if a.ground.shape != b.ground.shape:
        raise DimensionMismatch(f"parents differ in shape: {a.ground.shape} vs {b.ground.shape}")
    h, w = a.ground.shape
    cell_mask = np.repeat(np.repeat(take_a, block_size, axis=0), block_size, axis=1)[:h, :w]
    picked = {
        name: np.where(cell_mask, getattr(a, name), getattr(b, name))
        for name in _GRID_NAMES
    }
    return CityGenome(
        street_style=a.street_style if style_from_a else b.street_style,
        **picked,
    )


def crossover(
    a: CityGenome, b: CityGenome, config: EvolutionConfig, rng: np.random.Generator
) -> CityGenome:
    """Block-uniform crossover: one coin per block, shared across all grids."""
    if a.ground.shape != b.ground.shape:
        raise DimensionMismatch(f"parents differ in shape: {a.ground.shape} vs {b.ground.shape}")
    nby, nbx = block_grid_shape(a.dim, config.crossover_block_size)
    take_a = rng.random((nby, nbx)) < 0.5
    style_from_a = bool(rng.random() < 0.5)
    return repair(splice_blocks(a, b, take_a, config.crossover_block_size, style_from_a))


# ----------------------------------------------------------------------
# Mutation
# ----------------------------------------------------------------------

def _local_building_height(heightmap: np.ndarray, buildings: np.ndarray) -> np.ndarray:
    """Per-cell mean height of nearby buildings (fallback 6 where none)."""
    occupied = (buildings > 0).astype(float)
    h_sum = ndimage.uniform_filter(heightmap * occupied, size=11, mode="constant")
    n_sum = ndimage.uniform_filter(occupied, size=11, mode="constant")
    with np.errstate(invalid="ignore"):
        mean = np.where(n_sum > 0, h_sum / np.maximum(n_sum, 1e-12), 6.0)
    return mean


def mutate(
    g: CityGenome, rate: float, config: EvolutionConfig, rng: np.random.Generator
) -> CityGenome:
    """Per-locus mutation followed by invariant repair.

    Each grid mutates with its own scaled probability: ground flips
    water/land, streets toggle, buildings resample their archetype
    (new buildings get a height near the local skyline), heights take
    Gaussian nudges, centres occasionally relocate, and the street style
    flips with probability rate/10.
    """
    if not 0.0 <= rate <= 1.0:
        raise InvalidRate(f"rate {rate} not in [0, 1]")
    out = g.copy()
    shape = out.ground.shape

    flip = rng.random(shape) < GROUND_FLIP_SCALE * rate
    out.ground = np.where(flip, 1 - out.ground, out.ground).astype(np.int16)

    toggle = rng.random(shape) < STREET_TOGGLE_SCALE * rate
    out.streets = np.where(toggle, 1 - out.streets, out.streets).astype(np.int16)

    resample = rng.random(shape) < BUILDING_RESAMPLE_SCALE * rate
    draws = rng.choice(
        np.array([BUILDING_NONE, BUILDING_BOX, BUILDING_CYLINDER], dtype=np.int16),
        size=shape,
        p=BUILDING_RESAMPLE_P,
    )
    old_buildings = out.buildings
    out.buildings = np.where(resample, draws, out.buildings).astype(np.int16)

    created = (out.buildings > 0) & (old_buildings == BUILDING_NONE)
    if np.any(created):
        local = _local_building_height(g.heightmap, g.buildings)
        drawn = np.rint(local + rng.normal(0.0, HEIGHT_PERTURB_SIGMA, size=shape))
        out.heightmap = np.where(
            created,
            np.clip(drawn, 1, config.max_height).astype(np.int16),
            out.heightmap,
        )

    perturb = rng.random(shape) < HEIGHT_PERTURB_SCALE * rate
    nudges = np.rint(rng.normal(0.0, HEIGHT_PERTURB_SIGMA, size=shape)).astype(np.int16)
    moved = np.clip(out.heightmap + nudges, 0, config.max_height).astype(np.int16)
    out.heightmap = np.where(perturb & (out.buildings > 0), moved, out.heightmap)

    centres = np.argwhere(out.city == 1)
    for i, j in centres:
        if rng.random() < CENTRE_RELOCATE_SCALE * rate:
            land_idx = np.flatnonzero((out.ground == LAND).ravel() & (out.city.ravel() == 0))
            if len(land_idx) == 0:
                continue
            out.city[i, j] = 0
            out.city.ravel()[int(rng.choice(land_idx))] = 1

    if rng.random() < rate / STYLE_FLIP_DIVISOR:
        out.street_style = (
            STYLE_EUROPEAN if out.street_style == STYLE_NEW_YORK else STYLE_NEW_YORK
        )

    return repair(out)
