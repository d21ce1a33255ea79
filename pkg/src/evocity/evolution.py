"""Population lifecycle: seeding, breeding from two parents, diversity.

Each child of a generation is bred from its own derived random stream
(seed, generation, child), so breeding order — serial or parallel — cannot
change the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .genome import CityGenome, EvolutionConfig, crossover, mutate, random_genome
from .rng import child_stream

SOURCE_HUMAN = "Human"
SOURCE_AGENT = "Agent"
SOURCE_ORACLE = "Oracle"
SOURCE_RANDOM = "Random"
SELECTION_SOURCES = (SOURCE_HUMAN, SOURCE_AGENT, SOURCE_ORACLE, SOURCE_RANDOM)


class IndexOutOfRange(IndexError):
    """Raised when a parent index does not address a candidate."""


class EqualParents(ValueError):
    """Raised when both parent indices are the same candidate."""


@dataclass(frozen=True)
class ParentSelection:
    first_index: int
    second_index: int
    source: str = SOURCE_HUMAN

    def __post_init__(self) -> None:
        if self.first_index == self.second_index:
            raise EqualParents(f"parent indices must differ, got {self.first_index} twice")
        if self.source not in SELECTION_SOURCES:
            raise ValueError(f"unknown selection source {self.source!r}")

    def validate_for(self, population: Population) -> None:
        n = len(population.candidates)
        for idx in (self.first_index, self.second_index):
            if not 0 <= idx < n:
                raise IndexOutOfRange(f"parent index {idx} outside population of {n}")


@dataclass
class Population:
    candidates: list[CityGenome] = field(default_factory=list)
    generation_index: int = 0


def seed_population(config: EvolutionConfig) -> Population:
    """Generation 0: independent random genomes, one stream per slot."""
    candidates = [
        random_genome(config, child_stream(config.seed, 0, i))
        for i in range(config.population_size)
    ]
    return Population(candidates=candidates, generation_index=0)


def regenerate_population(config: EvolutionConfig, generation_index: int) -> Population:
    """A fresh random population for the given generation (no parent linkage)."""
    candidates = [
        random_genome(config, child_stream(config.seed, generation_index, i))
        for i in range(config.population_size)
    ]
    return Population(candidates=candidates, generation_index=generation_index)


def breed(
    parents: ParentSelection,
    pop: Population,
    config: EvolutionConfig,
    effective_mutation_rate: float,
) -> Population:
    """Breed the next generation from the two selected parents.

    With elitism the parents themselves occupy slots 0 and 1 verbatim; the
    remaining slots are mutate(crossover(a, b)) children.
    """
    parents.validate_for(pop)
    a = pop.candidates[parents.first_index]
    b = pop.candidates[parents.second_index]
    gen = pop.generation_index + 1

    children: list[CityGenome] = []
    start = 0
    if config.elitism:
        children.append(a.copy())
        children.append(b.copy())
        start = 2
    for i in range(start, config.population_size):
        rng = child_stream(config.seed, gen, i)
        child = crossover(a, b, config, rng)
        children.append(mutate(child, effective_mutation_rate, config, rng))
    return Population(candidates=children, generation_index=gen)


def _pair_distance(a: CityGenome, b: CityGenome) -> float:
    """Normalized Hamming distance averaged over the five grids plus style."""
    total = 0.0
    for ga, gb in zip(a.grids(), b.grids()):
        total += float(np.mean(ga != gb))
    total += float(a.street_style != b.street_style)
    return total / 6.0


def diversity(pop: Population) -> float:
    """Mean pairwise distance across the population, in [0, 1]."""
    if not pop.candidates:
        raise ValueError("population is empty")
    n = len(pop.candidates)
    if n == 1:
        return 0.0
    acc = 0.0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            acc += _pair_distance(pop.candidates[i], pop.candidates[j])
            pairs += 1
    return acc / pairs
