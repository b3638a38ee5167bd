"""Offline learning of plan-ranking models.

Dataset preparation draws random seed partial plans from a growing pool,
refines each to a solution with a base feature heuristic, and records the
feature vector together with the number of new actions the refinement added.
A correlation filter picks features; ordinary least squares fits the model.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from random import Random
from typing import Optional, Sequence

import numpy as np

from .grounding import GroundTask
from .heuristics import FEATURE_NAMES, FeatureVector, build_tables, feature_vector
from .plans import PartialPlan, null_plan
from .search import FeatureEvaluator, SearchLimits, gbfs

log = logging.getLogger("poclkit.learning")

BASE_FEATURES = ("h_add", "h_add_w", "h_add_r", "h_add_w_r")
MAX_FIT_INSTANCES = 350


class DatasetError(Exception):
    pass


class EmptyDatasetError(DatasetError):
    """No seed refined to a solution within the limits."""


class DegenerateDatasetError(DatasetError):
    """The target column is constant; nothing to regress on."""


class MalformedModelError(Exception):
    def __init__(self, message: str, fld: str = ""):
        self.field = fld
        super().__init__(message)


@dataclass
class TrainingInstance:
    features: FeatureVector
    target: int
    seed_plan: Optional[PartialPlan] = None
    solution_plan: Optional[PartialPlan] = None


@dataclass
class DrawRecord:
    """One seed draw during dataset prep, for auditing pool updates."""
    problem: str
    seed_index: int
    solved: bool
    pool_before: int
    pool_after: int


@dataclass
class Dataset:
    domain_name: str
    base_heuristic: str
    instances: list[TrainingInstance]
    rng_seed: int
    draws: list[DrawRecord] = field(default_factory=list)

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([inst.features for inst in self.instances], dtype=float)
        y = np.array([inst.target for inst in self.instances], dtype=float)
        return x, y


@dataclass
class DatasetConfig:
    seeds_per_problem: int = 10
    seed_max_generated: int = 500_000
    seed_wall_time: float = 180.0
    rng_seed: int = 0
    strategy: str = "mw-loc"
    max_copies: Optional[int] = 2


def generate_dataset(tasks: Sequence[GroundTask], base_heuristic: str,
                     config: Optional[DatasetConfig] = None,
                     domain_name: str = "") -> Dataset:
    """Run the seed-pool refinement loop over every task and collect instances.

    Each draw takes a random plan from the pool and refines it with the base
    heuristic. A successful refinement emits one instance (features of the
    seed, target = new actions added) and feeds the plans generated along the
    way back into the pool; a failed one contributes neither.
    """
    if config is None:
        config = DatasetConfig()
    if base_heuristic not in FEATURE_NAMES:
        raise ValueError(f"unknown base heuristic {base_heuristic!r}")
    if not domain_name and tasks:
        domain_name = tasks[0].domain_name

    dataset = Dataset(domain_name, base_heuristic, [], config.rng_seed)
    limits = SearchLimits(config.seed_max_generated, config.seed_wall_time)
    for pidx, task in enumerate(tasks):
        rng = Random(f"{config.rng_seed}:{pidx}")
        tables = build_tables(task)
        evaluator = FeatureEvaluator(base_heuristic, tables)
        pool: list[PartialPlan] = [null_plan(task)]
        for draw in range(config.seeds_per_problem):
            before = len(pool)
            sp = pool[rng.randrange(before)]
            result = gbfs(task, evaluator, config.strategy, limits, tables,
                          root=sp, max_copies=config.max_copies, collect_generated=True)
            if result.solved:
                target = result.plan.action_count - sp.action_count
                dataset.instances.append(TrainingInstance(
                    feature_vector(sp, tables), target, sp, result.plan))
                pool.extend(result.generated_plans)
            dataset.draws.append(DrawRecord(task.problem_name, draw, result.solved,
                                            before, len(pool)))
            log.debug("problem=%s draw=%d solved=%s pool=%d",
                      task.problem_name, draw, result.solved, len(pool))

    if not dataset.instances:
        raise EmptyDatasetError("no seed refined to a solution within the limits")
    return dataset


# ── Feature selection ────────────────────────────────────────────────────────

def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def correlation_select(dataset: Dataset, low_threshold: float = 0.1,
                       high_threshold: float = 0.95) -> tuple[int, ...]:
    """Indices of features to keep: drop target-uncorrelated and constant
    columns, then the weaker member of any near-duplicate pair. Never empty."""
    if not (0.0 <= low_threshold <= 1.0 and 0.0 <= high_threshold <= 1.0):
        raise ValueError("correlation thresholds must lie in [0, 1]")
    if len(dataset.instances) < 2:
        raise DatasetError("need at least 2 instances for feature selection")
    x, y = dataset.matrix()
    if y.std() == 0.0:
        raise DegenerateDatasetError("target is constant")

    target_r = [_pearson(x[:, i], y) for i in range(x.shape[1])]
    relevant = [i for i in range(x.shape[1])
                if x[:, i].std() > 0.0 and abs(target_r[i]) >= low_threshold]

    kept: list[int] = []
    for i in sorted(relevant, key=lambda i: -abs(target_r[i])):
        if all(abs(_pearson(x[:, i], x[:, j])) <= high_threshold for j in kept):
            kept.append(i)

    if not kept:
        kept = [max(range(x.shape[1]), key=lambda i: abs(target_r[i]))]
    return tuple(sorted(kept))


# ── Model fitting and prediction ─────────────────────────────────────────────

@dataclass
class LinearModel:
    weights: tuple[float, ...]       # one per masked feature
    intercept: float
    mask: tuple[int, ...]            # indices into FEATURE_NAMES
    metadata: dict = field(default_factory=dict)

    def predict(self, features: FeatureVector) -> float:
        total = self.intercept
        for w, i in zip(self.weights, self.mask):
            f = features[i]
            if f == math.inf:
                return math.inf
            total += w * f
        return max(0.0, total)


def fit_linear(dataset: Dataset, mask: Sequence[int]) -> LinearModel:
    """Ordinary least squares over the masked features via normal equations.

    Datasets above MAX_FIT_INSTANCES rows are subsampled (seeded by the
    dataset's rng seed). A near-singular Gram matrix gets a small ridge term,
    recorded in the model metadata.
    """
    mask = tuple(mask)
    x, y = dataset.matrix()
    if y.std() == 0.0:
        raise DegenerateDatasetError("target is constant")
    n = len(y)
    if n < len(mask) + 1:
        raise DatasetError(f"{n} instances cannot fit {len(mask)} weights + intercept")

    if n > MAX_FIT_INSTANCES:
        rng = Random(f"fit:{dataset.rng_seed}")
        keep = sorted(rng.sample(range(n), MAX_FIT_INSTANCES))
        x, y = x[keep], y[keep]
        n = MAX_FIT_INSTANCES

    design = np.column_stack([np.ones(n), x[:, mask]])
    gram = design.T @ design
    rhs = design.T @ y
    metadata = {
        "domain": dataset.domain_name,
        "base_heuristic": dataset.base_heuristic,
        "technique": "linear_regression",
        "instances": n,
        "seed": dataset.rng_seed,
    }
    if np.linalg.cond(gram) > 1e12:
        gram = gram + 1e-8 * np.eye(gram.shape[0])
        metadata["ridge"] = 1e-8
    beta = np.linalg.solve(gram, rhs)

    residuals = y - design @ beta
    ss_res = float(residuals @ residuals)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    metadata["r2"] = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    metadata["residual_std"] = float(residuals.std())

    return LinearModel(tuple(float(b) for b in beta[1:]), float(beta[0]), mask, metadata)


def predict(model: LinearModel, features: FeatureVector) -> float:
    return model.predict(features)


# ── Persistence ──────────────────────────────────────────────────────────────

def save_model(model: LinearModel, path: str) -> None:
    doc = {
        "domain": model.metadata.get("domain", ""),
        "base_heuristic": model.metadata.get("base_heuristic", ""),
        "technique": model.metadata.get("technique", "linear_regression"),
        "mask": [FEATURE_NAMES[i] for i in model.mask],
        "weights": list(model.weights),
        "intercept": model.intercept,
        "instances": model.metadata.get("instances", 0),
        "seed": model.metadata.get("seed", 0),
    }
    for key in ("r2", "residual_std", "ridge"):
        if key in model.metadata:
            doc[key] = model.metadata[key]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path: str) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedModelError(f"{path}: not valid JSON ({exc})") from exc

    for key in ("mask", "weights", "intercept"):
        if key not in doc:
            raise MalformedModelError(f"{path}: missing field {key!r}", key)
    names = doc["mask"]
    if not isinstance(names, list) or any(n not in FEATURE_NAMES for n in names):
        raise MalformedModelError(f"{path}: mask must list known feature names", "mask")
    weights = doc["weights"]
    if not isinstance(weights, list) or len(weights) != len(names):
        raise MalformedModelError(
            f"{path}: weights length {len(weights)} != mask length {len(names)}", "weights")
    try:
        weights = tuple(float(w) for w in weights)
        intercept = float(doc["intercept"])
    except (TypeError, ValueError) as exc:
        raise MalformedModelError(f"{path}: non-numeric weight or intercept", "weights") from exc

    metadata = {
        "domain": doc.get("domain", ""),
        "base_heuristic": doc.get("base_heuristic", ""),
        "technique": doc.get("technique", "linear_regression"),
        "instances": doc.get("instances", 0),
        "seed": doc.get("seed", 0),
    }
    for key in ("r2", "residual_std", "ridge"):
        if key in doc:
            metadata[key] = doc[key]
    mask = tuple(FEATURE_NAMES.index(n) for n in names)
    return LinearModel(weights, intercept, mask, metadata)


DATASET_HEADER = FEATURE_NAMES + ("target",)


def save_dataset(dataset: Dataset, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_HEADER)
        for inst in dataset.instances:
            writer.writerow([repr(v) for v in inst.features] + [inst.target])


def load_dataset(path: str, domain_name: str = "", base_heuristic: str = "",
                 rng_seed: int = 0) -> Dataset:
    """Read a dataset CSV. The CSV carries no provenance metadata, so domain,
    base heuristic, and seed must be supplied if they matter downstream."""
    instances = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != DATASET_HEADER:
            raise DatasetError(f"{path}: expected header {','.join(DATASET_HEADER)}")
        for row in reader:
            if len(row) != len(DATASET_HEADER):
                raise DatasetError(f"{path}: row with {len(row)} columns")
            values = [float(v) for v in row[:-1]]
            instances.append(TrainingInstance(FeatureVector(*values), int(float(row[-1]))))
    dataset = Dataset(domain_name, base_heuristic, instances, rng_seed)
    if not instances:
        raise EmptyDatasetError(f"{path}: no instances")
    return dataset
