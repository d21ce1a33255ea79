"""The learning selection agent.

Labeled candidates from interactive generations accumulate into a training
set; from it the agent induces either a decision tree (top-down, binary
numeric splits chosen by gain ratio, no pruning) or a naive Bayes model
(Gaussian numerics, smoothed categoricals).  Fitted models classify new
candidates, rank them by how strongly they look "selected", pick two
parents, and report a confidence that modulates the mutation rate: when
the agent is unsure, mutation is boosted to widen the search.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .evolution import ParentSelection, Population, SOURCE_AGENT
from .features import (
    ATTRIBUTE_ORDER,
    CATEGORICAL_ATTRIBUTES,
    LABEL_REJECTED,
    LABEL_SELECTED,
    NUMERIC_ATTRIBUTES,
    PUBLIC_ATTRIBUTE_NAMES,
    CandidateAttributes,
)
from .genome import STREET_STYLES

# Class order fixes every majority tie deterministically.
CLASS_ORDER = (LABEL_REJECTED, LABEL_SELECTED)

# Gains at or below this are treated as zero; gain ratios are compared
# after rounding to 10 decimals so that float noise cannot flip a tie.
GAIN_EPS = 1e-12
RATIO_DECIMALS = 10

MUTATION_RATE_CAP = 0.5

CLASSIFIER_TREE = "Tree"
CLASSIFIER_BAYES = "Bayes"


class SingleClassTrainingSet(ValueError):
    """Raised when fitting is attempted on one-class data."""


@dataclass
class AgentConfig:
    classifier_kind: str = CLASSIFIER_TREE
    min_leaf: int = 2
    confidence_threshold: float = 0.6
    mutation_boost: float = 1.5

    def __post_init__(self) -> None:
        if self.classifier_kind not in (CLASSIFIER_TREE, CLASSIFIER_BAYES):
            raise ValueError(f"unknown classifier kind {self.classifier_kind!r}")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if not 0.5 < self.confidence_threshold < 1.0:
            raise ValueError("confidence_threshold must lie in (0.5, 1)")
        if self.mutation_boost < 1.0:
            raise ValueError("mutation_boost must be >= 1")


# ----------------------------------------------------------------------
# Training set
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TrainingInstance:
    attrs: CandidateAttributes
    run_id: str
    generation_index: int
    candidate_index: int

    def to_json_dict(self) -> dict:
        d = self.attrs.to_json_dict()
        d["runId"] = self.run_id
        d["generationIndex"] = self.generation_index
        d["candidateIndex"] = self.candidate_index
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> TrainingInstance:
        return cls(
            attrs=CandidateAttributes.from_json_dict(d),
            run_id=d.get("runId", ""),
            generation_index=d.get("generationIndex", 0),
            candidate_index=d.get("candidateIndex", 0),
        )


@dataclass
class TrainingSet:
    instances: list[TrainingInstance] = field(default_factory=list)
    run_id: str = ""

    def __len__(self) -> int:
        return len(self.instances)

    def labels(self) -> list[str]:
        return [inst.attrs.label for inst in self.instances]

    def has_both_classes(self) -> bool:
        labels = set(self.labels())
        return LABEL_SELECTED in labels and LABEL_REJECTED in labels

    def to_jsonl(self) -> str:
        return "".join(json.dumps(i.to_json_dict(), separators=(",", ":")) + "\n"
                       for i in self.instances)

    @classmethod
    def from_jsonl(cls, text: str, run_id: str = "") -> TrainingSet:
        instances = [TrainingInstance.from_json_dict(json.loads(line))
                     for line in text.splitlines() if line.strip()]
        return cls(instances=instances, run_id=run_id)


def record_selection(
    ts: TrainingSet,
    pop: Population,
    sel: ParentSelection,
    attrs: list[CandidateAttributes],
) -> TrainingSet:
    """Label one presented generation: the two picks selected, the rest rejected."""
    if len(attrs) != len(pop.candidates):
        raise ValueError(
            f"{len(attrs)} attribute rows for {len(pop.candidates)} candidates"
        )
    sel.validate_for(pop)
    picked = {sel.first_index, sel.second_index}
    new = list(ts.instances)
    for i, a in enumerate(attrs):
        label = LABEL_SELECTED if i in picked else LABEL_REJECTED
        new.append(TrainingInstance(
            attrs=a.with_label(label),
            run_id=ts.run_id,
            generation_index=pop.generation_index,
            candidate_index=i,
        ))
    return TrainingSet(instances=new, run_id=ts.run_id)


# ----------------------------------------------------------------------
# Decision tree
# ----------------------------------------------------------------------

@dataclass
class TreeLeaf:
    label: str
    n: int
    class_counts: dict[str, int]

    @property
    def confidence(self) -> float:
        return self.class_counts[self.label] / self.n


@dataclass
class TreeSplit:
    attribute: str
    threshold: float | None          # None for categorical splits
    # numeric: {"le": node, "gt": node}; categorical: {category: node}
    children: dict

    def route(self, attrs: CandidateAttributes):
        value = attrs.value(self.attribute)
        if self.threshold is not None:
            return self.children["le"] if value <= self.threshold else self.children["gt"]
        if value in self.children:
            return self.children[value]
        # Unseen category: follow the heaviest branch.
        return max(self.children.values(), key=_node_size)


@dataclass
class DecisionTree:
    root: object                     # TreeLeaf | TreeSplit
    training_accuracy: float
    n_instances: int


def _node_size(node) -> int:
    if isinstance(node, TreeLeaf):
        return node.n
    return sum(_node_size(c) for c in node.children.values())


def _entropy(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts[counts > 0] / n
    return float(-(p * np.log2(p)).sum())


def _class_counts(y: np.ndarray) -> np.ndarray:
    # y holds indices into CLASS_ORDER
    return np.bincount(y, minlength=len(CLASS_ORDER))


def _majority_label(counts: np.ndarray) -> str:
    # Ties resolve to the earliest class in CLASS_ORDER.
    return CLASS_ORDER[int(np.argmax(counts))]


def _split_quality(parent_entropy: float, n: int, parts: list[np.ndarray]) -> tuple[float, float]:
    """(gain, gain_ratio) for a candidate partition given per-part class counts."""
    cond = 0.0
    split_info = 0.0
    for counts in parts:
        nk = counts.sum()
        frac = nk / n
        cond += frac * _entropy(counts)
        split_info -= frac * math.log2(frac)
    gain = parent_entropy - cond
    if split_info <= 0.0:
        return gain, 0.0
    return gain, gain / split_info


def _best_split(
    numeric: np.ndarray,
    categorical: list[np.ndarray],
    y: np.ndarray,
    min_leaf: int,
    numeric_names: tuple[str, ...],
    categorical_names: tuple[str, ...],
):
    """Best (attribute, threshold) by gain ratio under the tie-break discipline.

    Attributes are scanned in declaration order and, for numerics,
    thresholds in ascending order; a candidate replaces the incumbent only
    when its rounded gain ratio is strictly greater, so earlier attributes
    and lower thresholds win ties.
    """
    n = len(y)
    parent_entropy = _entropy(_class_counts(y))
    best = None  # (rounded_ratio, attr_name, threshold, partition_masks)

    numeric_cols = {name: k for k, name in enumerate(numeric_names)}
    for attr in ATTRIBUTE_ORDER:
        if attr in numeric_cols:
            values = numeric[:, numeric_cols[attr]]
            order = np.argsort(values, kind="stable")
            sv = values[order]
            sy = y[order]
            cum = np.cumsum(np.eye(len(CLASS_ORDER), dtype=int)[sy], axis=0)
            for i in range(n - 1):
                if sv[i] == sv[i + 1]:
                    continue
                nl = i + 1
                if nl < min_leaf or n - nl < min_leaf:
                    continue
                left = cum[i]
                right = cum[-1] - left
                gain, ratio = _split_quality(parent_entropy, n, [left, right])
                if gain <= GAIN_EPS:
                    continue
                rounded = round(ratio, RATIO_DECIMALS)
                if best is None or rounded > best[0]:
                    threshold = float((sv[i] + sv[i + 1]) / 2.0)
                    if threshold >= sv[i + 1]:  # adjacent floats: keep the cut left
                        threshold = float(sv[i])
                    mask = values <= threshold
                    best = (rounded, attr, threshold, {"le": mask, "gt": ~mask})
        else:
            col = categorical[categorical_names.index(attr)]
            cats = sorted(set(col.tolist()))
            if len(cats) < 2:
                continue
            masks = {c: col == c for c in cats}
            if any(mask.sum() < min_leaf for mask in masks.values()):
                continue
            parts = [_class_counts(y[mask]) for mask in masks.values()]
            gain, ratio = _split_quality(parent_entropy, n, parts)
            if gain <= GAIN_EPS:
                continue
            rounded = round(ratio, RATIO_DECIMALS)
            if best is None or rounded > best[0]:
                best = (rounded, attr, None, masks)
    return best


def _build(
    numeric: np.ndarray,
    categorical: list[np.ndarray],
    y: np.ndarray,
    min_leaf: int,
    numeric_names: tuple[str, ...],
    categorical_names: tuple[str, ...],
):
    counts = _class_counts(y)
    n = len(y)
    pure = int((counts > 0).sum()) <= 1
    if pure or n < 2 * min_leaf:
        return TreeLeaf(
            label=_majority_label(counts),
            n=n,
            class_counts={c: int(counts[k]) for k, c in enumerate(CLASS_ORDER)},
        )
    best = _best_split(numeric, categorical, y, min_leaf, numeric_names, categorical_names)
    if best is None:
        return TreeLeaf(
            label=_majority_label(counts),
            n=n,
            class_counts={c: int(counts[k]) for k, c in enumerate(CLASS_ORDER)},
        )
    _, attr, threshold, masks = best
    children = {}
    for key, mask in masks.items():
        children[key] = _build(
            numeric[mask], [c[mask] for c in categorical], y[mask],
            min_leaf, numeric_names, categorical_names,
        )
    return TreeSplit(attribute=attr, threshold=threshold, children=children)


def _as_arrays(ts: TrainingSet):
    numeric = np.array(
        [[inst.attrs.value(a) for a in NUMERIC_ATTRIBUTES] for inst in ts.instances],
        dtype=float,
    )
    categorical = [
        np.array([inst.attrs.value(a) for a in ts.instances], dtype=object)
        for a in CATEGORICAL_ATTRIBUTES
    ]
    label_index = {c: k for k, c in enumerate(CLASS_ORDER)}
    y = np.array([label_index[inst.attrs.label] for inst in ts.instances], dtype=int)
    return numeric, categorical, y


def induce_tree(ts: TrainingSet, cfg: AgentConfig) -> DecisionTree:
    """Induce a decision tree from scratch on the full training set."""
    if not ts.has_both_classes():
        raise SingleClassTrainingSet("training set must contain both classes")
    numeric, categorical, y = _as_arrays(ts)
    root = _build(numeric, categorical, y, cfg.min_leaf,
                  NUMERIC_ATTRIBUTES, CATEGORICAL_ATTRIBUTES)
    tree = DecisionTree(root=root, training_accuracy=0.0, n_instances=len(ts))
    hits = sum(
        classify(tree, inst.attrs)[0] == inst.attrs.label for inst in ts.instances
    )
    tree.training_accuracy = hits / len(ts)
    return tree


# ----------------------------------------------------------------------
# Naive Bayes
# ----------------------------------------------------------------------

VARIANCE_FLOOR = 1e-6


@dataclass
class BayesModel:
    priors: dict[str, float]
    # per class: {attr: (mean, variance)}
    gaussians: dict[str, dict[str, tuple[float, float]]]
    # per class: {attr: {category: probability}}
    categoricals: dict[str, dict[str, dict[str, float]]]


def fit_bayes(ts: TrainingSet, cfg: AgentConfig) -> BayesModel:
    """Class priors, per-class Gaussians, and smoothed category tables."""
    if not ts.has_both_classes():
        raise SingleClassTrainingSet("training set must contain both classes")
    numeric, categorical, y = _as_arrays(ts)
    n = len(y)
    priors = {}
    gaussians: dict[str, dict[str, tuple[float, float]]] = {}
    categoricals: dict[str, dict[str, dict[str, float]]] = {}
    for k, cls in enumerate(CLASS_ORDER):
        mask = y == k
        nk = int(mask.sum())
        priors[cls] = nk / n
        gaussians[cls] = {}
        for col, attr in enumerate(NUMERIC_ATTRIBUTES):
            vals = numeric[mask, col]
            gaussians[cls][attr] = (
                float(vals.mean()),
                max(float(vals.var()), VARIANCE_FLOOR),
            )
        categoricals[cls] = {}
        for ci, attr in enumerate(CATEGORICAL_ATTRIBUTES):
            col_vals = categorical[ci][mask]
            table = {}
            for cat in STREET_STYLES:
                count = int(np.sum(col_vals == cat))
                table[cat] = (count + 1) / (nk + len(STREET_STYLES))
            categoricals[cls][attr] = table
    return BayesModel(priors=priors, gaussians=gaussians, categoricals=categoricals)


def _bayes_log_posteriors(model: BayesModel, a: CandidateAttributes) -> dict[str, float]:
    logs = {}
    for cls in CLASS_ORDER:
        lp = math.log(model.priors[cls]) if model.priors[cls] > 0 else -math.inf
        for attr, (mean, var) in model.gaussians[cls].items():
            x = float(a.value(attr))
            lp += -0.5 * math.log(2.0 * math.pi * var) - (x - mean) ** 2 / (2.0 * var)
        for attr, table in model.categoricals[cls].items():
            value = a.value(attr)
            p = table.get(value, 1.0 / (sum(table.values()) + len(table)))
            lp += math.log(p)
        logs[cls] = lp
    return logs


# ----------------------------------------------------------------------
# Classification and selection
# ----------------------------------------------------------------------

def classify(model, a: CandidateAttributes) -> tuple[str, float]:
    """(label, confidence) — leaf majority for trees, MAP posterior for Bayes."""
    if isinstance(model, DecisionTree):
        node = model.root
        while isinstance(node, TreeSplit):
            node = node.route(a)
        return node.label, node.confidence
    if isinstance(model, BayesModel):
        logs = _bayes_log_posteriors(model, a)
        peak = max(logs.values())
        weights = {c: math.exp(v - peak) for c, v in logs.items()}
        z = sum(weights.values())
        posteriors = {c: w / z for c, w in weights.items()}
        label = max(CLASS_ORDER, key=lambda c: (posteriors[c], -CLASS_ORDER.index(c)))
        return label, posteriors[label]
    raise TypeError(f"cannot classify with {type(model).__name__}")


def selected_score(model, a: CandidateAttributes) -> float:
    """P(selected)-style score in [0, 1]."""
    label, confidence = classify(model, a)
    if label == LABEL_SELECTED:
        return confidence
    return 1.0 - confidence


def select_as_agent(
    model,
    attrs: list[CandidateAttributes],
    rng: np.random.Generator | None = None,
) -> tuple[ParentSelection, float]:
    """Pick the two most promising candidates; ties go to the lower index.

    With no fittable model (single-class history) a uniform-random distinct
    pair is chosen instead (mean confidence 0.5); ``rng`` is only consulted
    on that fallback path.
    """
    n = len(attrs)
    if n < 2:
        raise ValueError("need at least two candidates to select parents")
    if model is None:
        if rng is None:
            raise ValueError("fallback selection needs a random generator")
        first, second = (int(i) for i in rng.choice(n, size=2, replace=False))
        return ParentSelection(first, second, source=SOURCE_AGENT), 0.5
    scores = [selected_score(model, a) for a in attrs]
    ranked = sorted(range(n), key=lambda i: (-scores[i], i))
    first, second = ranked[0], ranked[1]
    mean_confidence = (scores[first] + scores[second]) / 2.0
    return ParentSelection(first, second, source=SOURCE_AGENT), mean_confidence


def effective_mutation_rate(base: float, mean_confidence: float, cfg: AgentConfig) -> float:
    """Boost the mutation rate when the agent is unsure of its picks."""
    if not 0.0 <= base <= 1.0:
        raise ValueError(f"base rate {base} not in [0, 1]")
    if mean_confidence < cfg.confidence_threshold:
        return min(base * cfg.mutation_boost, MUTATION_RATE_CAP)
    return base


# ----------------------------------------------------------------------
# Tree export
# ----------------------------------------------------------------------

def tree_to_json_dict(tree: DecisionTree) -> dict:
    def node_dict(node):
        if isinstance(node, TreeLeaf):
            return {
                "kind": "leaf",
                "label": node.label,
                "n": node.n,
                "counts": dict(node.class_counts),
            }
        return {
            "kind": "split",
            "attribute": PUBLIC_ATTRIBUTE_NAMES[node.attribute],
            "threshold": node.threshold,
            "children": {str(k): node_dict(v) for k, v in node.children.items()},
        }

    return {
        "trainingAccuracy": tree.training_accuracy,
        "nInstances": tree.n_instances,
        "root": node_dict(tree.root),
    }


def tree_from_json_dict(d: dict) -> DecisionTree:
    from .features import INTERNAL_ATTRIBUTE_NAMES

    def node(obj):
        if obj["kind"] == "leaf":
            return TreeLeaf(label=obj["label"], n=obj["n"], class_counts=dict(obj["counts"]))
        return TreeSplit(
            attribute=INTERNAL_ATTRIBUTE_NAMES[obj["attribute"]],
            threshold=obj["threshold"],
            children={k: node(v) for k, v in obj["children"].items()},
        )

    return DecisionTree(
        root=node(d["root"]),
        training_accuracy=d["trainingAccuracy"],
        n_instances=d["nInstances"],
    )


def format_tree(tree: DecisionTree) -> str:
    """Indented text dump: one line per branch, counts at the leaves."""
    lines = [
        f"decision tree: {tree.n_instances} instances, "
        f"training accuracy {tree.training_accuracy:.2f}"
    ]

    def leaf_suffix(leaf: TreeLeaf) -> str:
        errors = leaf.n - leaf.class_counts[leaf.label]
        return f"{leaf.label} ({leaf.n}/{errors})"

    def walk(node, depth: int) -> None:
        pad = "|   " * depth
        if isinstance(node, TreeLeaf):
            lines.append(f"{pad}{leaf_suffix(node)}")
            return
        public = PUBLIC_ATTRIBUTE_NAMES[node.attribute]
        if node.threshold is not None:
            for op, key in (("<=", "le"), (">", "gt")):
                child = node.children[key]
                head = f"{pad}{public} {op} {node.threshold:.6g}"
                if isinstance(child, TreeLeaf):
                    lines.append(f"{head}: {leaf_suffix(child)}")
                else:
                    lines.append(head)
                    walk(child, depth + 1)
        else:
            for cat in sorted(node.children):
                child = node.children[cat]
                head = f"{pad}{public} = {cat}"
                if isinstance(child, TreeLeaf):
                    lines.append(f"{head}: {leaf_suffix(child)}")
                else:
                    lines.append(head)
                    walk(child, depth + 1)

    walk(tree.root, 0)
    return "\n".join(lines)
