"""Feature heuristics over partial plans.

Six features per plan: the action count, the open-condition count, and four
delete-relaxation sums (additive cost and additive effort, each with and
without credit for facts an existing step can already supply). The cost
tables are computed once per task from the initial state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .grounding import GroundTask
from .plans import PartialPlan

INF = math.inf

FEATURE_NAMES = ("h_gval", "h_oc", "h_add", "h_add_w", "h_add_r", "h_add_w_r")


class FeatureVector(NamedTuple):
    h_gval: float
    h_oc: float
    h_add: float
    h_add_w: float
    h_add_r: float
    h_add_w_r: float


@dataclass(frozen=True)
class CostTable:
    """Least fixpoint of the delete-relaxed additive recursion over facts."""
    variant: str                 # "plain" | "effort"
    fact_cost: tuple[float, ...]

    def cost(self, fact: int) -> float:
        return self.fact_cost[fact]


@dataclass(frozen=True)
class CostTables:
    plain: CostTable
    effort: CostTable


def additive_costs(task: GroundTask, variant: str = "plain") -> CostTable:
    """Bellman-style sweeps to the fixpoint of
    cost(f) = 0 for f in init, else min over adders a of w(a) + sum cost(pre(a)).

    w(a) is 1 for the plain variant and |pre(a)| + 1 for the effort variant.
    Unreachable facts stay at +inf.
    """
    if variant not in ("plain", "effort"):
        raise ValueError(f"unknown cost-table variant {variant!r}")
    cost = [INF] * len(task.facts)
    for f in task.init:
        cost[f] = 0.0
    weights = [1.0 if variant == "plain" else float(len(a.pre) + 1) for a in task.actions]

    changed = True
    while changed:
        changed = False
        for act in task.actions:
            total = weights[act.id]
            for p in act.pre:
                cp = cost[p]
                if cp == INF:
                    total = INF
                    break
                total += cp
            if total == INF:
                continue
            for f in act.add:
                if total < cost[f]:
                    cost[f] = total
                    changed = True
    return CostTable(variant, tuple(cost))


def build_tables(task: GroundTask) -> CostTables:
    return CostTables(additive_costs(task, "plain"), additive_costs(task, "effort"))


def eval_g(plan: PartialPlan) -> float:
    """Number of real actions in the plan (dummies excluded)."""
    return float(plan.action_count)


def eval_oc(plan: PartialPlan) -> float:
    """Number of open conditions (unsupported preconditions)."""
    return float(len(plan.open_conds))


def _reusable(plan: PartialPlan, fact: int, consumer: int) -> bool:
    # Some existing step (other than the consumer) adds the fact and could be
    # consistently ordered before the consumer.
    for sid, act in plan.steps.items():
        if sid != consumer and fact in act.add and plan.can_order(sid, consumer):
            return True
    return False


def eval_add(plan: PartialPlan, table: CostTable, reuse: bool = False) -> float:
    """Sum of table costs over open conditions; with ``reuse`` a condition an
    existing step can consistently supply contributes 0."""
    total = 0.0
    for fact, consumer in plan.open_conds:
        if reuse and _reusable(plan, fact, consumer):
            continue
        c = table.fact_cost[fact]
        if c == INF:
            return INF
        total += c
    return total


def feature_vector(plan: PartialPlan, tables: CostTables) -> FeatureVector:
    """All six features, in the fixed (g, oc, add, add_w, add_r, add_w_r) order.

    One pass over the open conditions; the reusability test is shared by the
    two discounted sums.
    """
    add = add_w = add_r = add_w_r = 0.0
    for fact, consumer in plan.open_conds:
        plain = tables.plain.fact_cost[fact]
        effort = tables.effort.fact_cost[fact]
        add += plain
        add_w += effort
        if not _reusable(plan, fact, consumer):
            add_r += plain
            add_w_r += effort
    return FeatureVector(eval_g(plan), eval_oc(plan), add, add_w, add_r, add_w_r)


def feature_value(name: str, plan: PartialPlan, tables: CostTables) -> float:
    """One named feature, cheaper than assembling the full vector."""
    if name == "h_gval":
        return eval_g(plan)
    if name == "h_oc":
        return eval_oc(plan)
    if name == "h_add":
        return eval_add(plan, tables.plain, reuse=False)
    if name == "h_add_w":
        return eval_add(plan, tables.effort, reuse=False)
    if name == "h_add_r":
        return eval_add(plan, tables.plain, reuse=True)
    if name == "h_add_w_r":
        return eval_add(plan, tables.effort, reuse=True)
    raise ValueError(f"unknown feature {name!r}")
