"""Evolutionary design engine for grid-based virtual cities.

Candidate cities are five aligned integer grids plus a street-style gene.
Populations of nine evolve from two parents chosen per generation — by a
human through the HTTP service, by a scripted preference oracle, or by a
learning agent trained online on the human's earlier picks.
"""

from .agent import (
    AgentConfig,
    BayesModel,
    DecisionTree,
    TrainingSet,
    classify,
    effective_mutation_rate,
    fit_bayes,
    format_tree,
    induce_tree,
    record_selection,
    select_as_agent,
)
from .evolution import (
    ParentSelection,
    Population,
    breed,
    diversity,
    seed_population,
)
from .features import CandidateAttributes, extract_attributes
from .genome import (
    CityGenome,
    EvolutionConfig,
    GridDim,
    crossover,
    mutate,
    random_genome,
    repair,
)
from .oracle import (
    Brief,
    RunStats,
    acceptance_check,
    load_brief,
    load_bundled_brief,
    oracle_select,
    score_candidate,
)
from .render import ViewConfig, encode_png, render_genome, render_hash

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "BayesModel",
    "Brief",
    "CandidateAttributes",
    "CityGenome",
    "DecisionTree",
    "EvolutionConfig",
    "GridDim",
    "ParentSelection",
    "Population",
    "RunStats",
    "TrainingSet",
    "ViewConfig",
    "acceptance_check",
    "breed",
    "classify",
    "crossover",
    "diversity",
    "effective_mutation_rate",
    "encode_png",
    "extract_attributes",
    "fit_bayes",
    "format_tree",
    "induce_tree",
    "load_brief",
    "load_bundled_brief",
    "mutate",
    "oracle_select",
    "random_genome",
    "record_selection",
    "render_genome",
    "render_hash",
    "repair",
    "score_candidate",
    "seed_population",
    "select_as_agent",
]
