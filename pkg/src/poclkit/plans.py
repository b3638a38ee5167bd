"""Partial plans and their refinement semantics.

A partial plan is a set of steps, ordering constraints, causal links, open
conditions, and threats. Plans are persistent values: ``apply`` returns a new
plan and never mutates its input. The ordering closure is kept as one "comes
after" bitmask per step and updated incrementally on edge insertion.

Step 0 is the initial dummy (adds the initial state), step 1 the goal dummy
(whose preconditions are the goal); real steps are numbered from 2.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from random import Random
from typing import NamedTuple, Optional, Union

from .grounding import GroundAction, GroundTask

INIT_STEP = 0
GOAL_STEP = 1


class CausalLink(NamedTuple):
    producer: int
    fact: int
    consumer: int


class OpenCondition(NamedTuple):
    fact: int
    consumer: int


class Threat(NamedTuple):
    step: int
    link: CausalLink


Flaw = Union[OpenCondition, Threat]


@dataclass(frozen=True)
class Resolver:
    """One way to remove a flaw. ``new-step`` resolvers cost 1, others 0."""
    kind: str  # "reuse" | "new-step" | "promotion" | "demotion"
    fact: Optional[int] = None
    consumer: Optional[int] = None
    producer: Optional[int] = None
    action: Optional[GroundAction] = None
    ordering: Optional[tuple[int, int]] = None

    @property
    def cost(self) -> int:
        return 1 if self.kind == "new-step" else 0


@dataclass
class PartialPlan:
    steps: dict[int, GroundAction]
    orderings: frozenset[tuple[int, int]]
    after: dict[int, int]                     # step -> bitmask of steps strictly after it
    links: frozenset[CausalLink]
    open_conds: frozenset[OpenCondition]
    threats: tuple[Threat, ...]               # in introduction order, oldest first
    newest_step: int

    @property
    def action_count(self) -> int:
        return len(self.steps) - 2

    def ordered(self, before: int, after_step: int) -> bool:
        """Is ``before ≺ after_step`` entailed by the ordering closure?"""
        return bool((self.after[before] >> after_step) & 1)

    def can_order(self, before: int, after_step: int) -> bool:
        """Could ``before ≺ after_step`` be added without creating a cycle?"""
        return before != after_step and not self.ordered(after_step, before)

    def __repr__(self) -> str:
        return (f"PartialPlan(actions={self.action_count}, oc={len(self.open_conds)}, "
                f"threats={len(self.threats)})")


def _add_edge(after: dict[int, int], x: int, y: int) -> bool:
    """Insert x ≺ y into the closure in place; False if it would cycle."""
    if x == y or (after[y] >> x) & 1:
        return False
    if (after[x] >> y) & 1:
        return True
    gain = after[y] | (1 << y)
    xbit = 1 << x
    for u, mask in after.items():
        if u == x or mask & xbit:
            after[u] = mask | gain
    return True


def _threat_live(after: dict[int, int], threat: Threat) -> bool:
    t, (p, _, c) = threat
    return not ((after[t] >> p) & 1) and not ((after[c] >> t) & 1)


def _threats_on_link(plan_steps: dict[int, GroundAction], after: dict[int, int],
                     link: CausalLink) -> list[Threat]:
    found = []
    for sid, act in plan_steps.items():
        if sid == link.producer or sid == link.consumer:
            continue
        if link.fact in act.delete:
            th = Threat(sid, link)
            if _threat_live(after, th):
                found.append(th)
    return found


def _threats_by_step(after: dict[int, int], sid: int, act: GroundAction,
                     links: frozenset[CausalLink]) -> list[Threat]:
    found = []
    for link in links:
        if sid == link.producer or sid == link.consumer:
            continue
        if link.fact in act.delete:
            th = Threat(sid, link)
            if _threat_live(after, th):
                found.append(th)
    return found


def _threat_sort_key(th: Threat) -> tuple[int, int, int, int]:
    return (th.link.consumer, th.link.fact, th.step, th.link.producer)


def init_action(task: GroundTask) -> GroundAction:
    return GroundAction(-1, "<init>", frozenset(), task.init, frozenset())


def goal_action(task: GroundTask) -> GroundAction:
    return GroundAction(-2, "<goal>", task.goal, frozenset(), frozenset())


def null_plan(task: GroundTask) -> PartialPlan:
    """The empty plan: the two dummies, a0 ≺ a_inf, one open condition per goal."""
    return PartialPlan(
        steps={INIT_STEP: init_action(task), GOAL_STEP: goal_action(task)},
        orderings=frozenset({(INIT_STEP, GOAL_STEP)}),
        after={INIT_STEP: 1 << GOAL_STEP, GOAL_STEP: 0},
        links=frozenset(),
        open_conds=frozenset(OpenCondition(g, GOAL_STEP) for g in task.goal),
        threats=(),
        newest_step=GOAL_STEP,
    )


def is_solution(plan: PartialPlan) -> bool:
    return not plan.open_conds and not plan.threats


def collect_flaws(plan: PartialPlan) -> list[Flaw]:
    """All flaws, threats first, each kind sorted by (consumer, fact)."""
    threats = sorted(plan.threats, key=_threat_sort_key)
    ocs = sorted(plan.open_conds, key=lambda oc: (oc.consumer, oc.fact))
    return list(threats) + list(ocs)


def resolvers(plan: PartialPlan, flaw: Flaw, task: GroundTask,
              max_copies: Optional[int] = 2) -> list[Resolver]:
    """All refinements removing ``flaw``; empty list means a dead end.

    ``max_copies`` bounds how many steps may share one ground-action id,
    cutting achieve/destroy loops; ``None`` disables the filter.
    """
    out: list[Resolver] = []
    if isinstance(flaw, Threat):
        t, link = flaw
        if plan.can_order(t, link.producer):
            out.append(Resolver("promotion", ordering=(t, link.producer)))
        if plan.can_order(link.consumer, t):
            out.append(Resolver("demotion", ordering=(link.consumer, t)))
        return out

    q, c = flaw
    for sid in sorted(plan.steps):
        if q in plan.steps[sid].add and plan.can_order(sid, c):
            out.append(Resolver("reuse", fact=q, consumer=c, producer=sid))
    copies: dict[int, int] = {}
    if max_copies is not None:
        for act in plan.steps.values():
            if act.id >= 0:
                copies[act.id] = copies.get(act.id, 0) + 1
    for aid in task.adders[q]:
        if max_copies is not None and copies.get(aid, 0) >= max_copies:
            continue
        out.append(Resolver("new-step", fact=q, consumer=c, action=task.actions[aid]))
    return out


def apply_resolver(plan: PartialPlan, resolver: Resolver) -> Optional[PartialPlan]:
    """A new plan with the resolver applied, or None if an ordering cycles."""
    after = dict(plan.after)

    if resolver.kind in ("promotion", "demotion"):
        x, y = resolver.ordering
        if not _add_edge(after, x, y):
            return None
        return PartialPlan(
            steps=plan.steps,
            orderings=plan.orderings | {(x, y)},
            after=after,
            links=plan.links,
            open_conds=plan.open_conds,
            threats=tuple(th for th in plan.threats if _threat_live(after, th)),
            newest_step=plan.newest_step,
        )

    q, c = resolver.fact, resolver.consumer
    if resolver.kind == "reuse":
        p = resolver.producer
        if not _add_edge(after, p, c):
            return None
        link = CausalLink(p, q, c)
        threats = [th for th in plan.threats if _threat_live(after, th)]
        threats += sorted(_threats_on_link(plan.steps, after, link), key=_threat_sort_key)
        return PartialPlan(
            steps=plan.steps,
            orderings=plan.orderings | {(p, c)},
            after=after,
            links=plan.links | {link},
            open_conds=plan.open_conds - {OpenCondition(q, c)},
            threats=tuple(threats),
            newest_step=plan.newest_step,
        )

    act = resolver.action
    sid = max(plan.steps) + 1
    steps = {**plan.steps, sid: act}
    after[sid] = 0
    for x, y in ((INIT_STEP, sid), (sid, GOAL_STEP), (sid, c)):
        if not _add_edge(after, x, y):
            return None
    link = CausalLink(sid, q, c)
    links = plan.links | {link}
    threats = [th for th in plan.threats if _threat_live(after, th)]
    fresh = _threats_by_step(after, sid, act, plan.links)
    fresh += _threats_on_link(plan.steps, after, link)
    threats += sorted(fresh, key=_threat_sort_key)
    return PartialPlan(
        steps=steps,
        orderings=plan.orderings | {(INIT_STEP, sid), (sid, GOAL_STEP), (sid, c)},
        after=after,
        links=links,
        open_conds=(plan.open_conds - {OpenCondition(q, c)})
        | {OpenCondition(f, sid) for f in act.pre},
        threats=tuple(threats),
        newest_step=sid,
    )


# ── Linearization, scheduling, validation ────────────────────────────────────

def _successors(plan: PartialPlan) -> dict[int, list[int]]:
    succ: dict[int, list[int]] = {sid: [] for sid in plan.steps}
    for a, b in plan.orderings:
        succ[a].append(b)
    return succ


def linearize(plan: PartialPlan) -> list[int]:
    """Deterministic topological order of all steps, a0 first, a_inf last."""
    succ = _successors(plan)
    indeg = {sid: 0 for sid in plan.steps}
    for a, b in plan.orderings:
        indeg[b] += 1
    ready = [sid for sid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        sid = heapq.heappop(ready)
        order.append(sid)
        for nxt in succ[sid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, nxt)
    return order


def random_linearization(plan: PartialPlan, rng: Random) -> list[int]:
    """A uniformly arbitrary topological order (for validation sampling)."""
    succ = _successors(plan)
    indeg = {sid: 0 for sid in plan.steps}
    for a, b in plan.orderings:
        indeg[b] += 1
    ready = sorted(sid for sid, d in indeg.items() if d == 0)
    order: list[int] = []
    while ready:
        sid = ready.pop(rng.randrange(len(ready)))
        order.append(sid)
        for nxt in sorted(succ[sid]):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
    return order


def earliest_slots(plan: PartialPlan) -> dict[int, int]:
    """Earliest-start slot (0-based) for each real step under unit durations."""
    level = {sid: 0 for sid in plan.steps}
    pred: dict[int, list[int]] = {sid: [] for sid in plan.steps}
    for a, b in plan.orderings:
        pred[b].append(a)
    for sid in linearize(plan):
        if pred[sid]:
            level[sid] = max(level[p] for p in pred[sid]) + 1
    return {sid: level[sid] - 1 for sid in plan.steps if sid not in (INIT_STEP, GOAL_STEP)}


def makespan(plan: PartialPlan) -> int:
    """Depth of the earliest-start parallel schedule, dummies excluded."""
    slots = earliest_slots(plan)
    return max(slots.values()) + 1 if slots else 0


def step_sequence(plan: PartialPlan, order: Optional[list[int]] = None) -> list[GroundAction]:
    """The plan's real actions in linearization order."""
    if order is None:
        order = linearize(plan)
    return [plan.steps[sid] for sid in order if sid not in (INIT_STEP, GOAL_STEP)]


def validate(task: GroundTask, sequence: list[GroundAction]) -> bool:
    """Simulate from init; True iff all preconditions hold and the goal is reached."""
    state = set(task.init)
    for act in sequence:
        if not act.pre <= state:
            return False
        state -= act.delete
        state |= act.add
    return task.goal <= state


def format_plan(plan: PartialPlan) -> str:
    """Text form: one ``slot: (action args)`` line per step plus a makespan line."""
    slots = earliest_slots(plan)
    lines = [f"{slots[sid]}: ({plan.steps[sid].name})"
             for sid in sorted(slots, key=lambda s: (slots[s], s))]
    lines.append(f";; makespan={makespan(plan)}")
    return "\n".join(lines) + "\n"
