"""Grounding of parsed STRIPS domains into propositional tasks.

Grounding is eager and deterministic: facts and actions are numbered by
declaration order, and the fact set is the full set of type-consistent
instantiations of the declared predicates. Unit action costs throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

from .pddl import ROOT_TYPE, Atom, DomainAst, ProblemAst, TypedName, UndeclaredNameError, check_problem


@dataclass(frozen=True)
class GroundAction:
    """A fully instantiated unit-cost action over fact indices."""
    id: int
    name: str                 # "schema obj1 obj2 ..."
    pre: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]
    cost: int = 1

    def __str__(self) -> str:
        return f"({self.name})"


@dataclass
class GroundTask:
    """Grounded task: indexed facts and actions plus init/goal index sets."""
    domain_name: str
    problem_name: str
    facts: tuple[str, ...]
    actions: tuple[GroundAction, ...]
    init: frozenset[int]
    goal: frozenset[int]
    fact_ids: dict[str, int] = field(repr=False, default_factory=dict)

    def fact_name(self, index: int) -> str:
        return self.facts[index]

    @cached_property
    def adders(self) -> tuple[tuple[int, ...], ...]:
        """For each fact index, ids of actions that add it."""
        by_fact: list[list[int]] = [[] for _ in self.facts]
        for act in self.actions:
            for f in act.add:
                by_fact[f].append(act.id)
        return tuple(tuple(ids) for ids in by_fact)


def _atom_key(pred: str, args: tuple[str, ...]) -> str:
    return "(" + " ".join((pred,) + args) + ")" if args else f"({pred})"


def _is_subtype(ty: str, ancestor: str, parents: dict[str, str]) -> bool:
    if ancestor == ROOT_TYPE:
        return True
    cur = ty
    seen = set()
    while cur not in seen:
        if cur == ancestor:
            return True
        seen.add(cur)
        cur = parents.get(cur, ROOT_TYPE)
    return False


def _candidates(objects: tuple[TypedName, ...], ty: str, parents: dict[str, str]) -> list[str]:
    return [o.name for o in objects if _is_subtype(o.type, ty, parents)]


def ground(domain: DomainAst, problem: ProblemAst, prune_unreachable: bool = False) -> GroundTask:
    """Instantiate all type-consistent bindings of every schema and predicate.

    Bindings violating an ``=`` constraint are pruned. With
    ``prune_unreachable`` a delete-relaxed reachability pass additionally drops
    facts and actions that can never be reached from the initial state.
    """
    check_problem(domain, problem)
    parents = domain.type_parents()
    objects = domain.constants + problem.objects

    fact_ids: dict[str, int] = {}
    fact_names: list[str] = []

    def intern(pred: str, args: tuple[str, ...]) -> int:
        key = _atom_key(pred, args)
        idx = fact_ids.get(key)
        if idx is None:
            idx = len(fact_names)
            fact_ids[key] = idx
            fact_names.append(key)
        return idx

    for pname, pparams in domain.predicates:
        pools = [_candidates(objects, p.type, parents) for p in pparams]
        for combo in product(*pools):
            intern(pname, tuple(combo))

    def resolve(atom: Atom, binding: dict[str, str], where: str) -> int:
        args = tuple(binding.get(a, a) for a in atom.args)
        key = _atom_key(atom.pred, args)
        idx = fact_ids.get(key)
        if idx is None:
            raise UndeclaredNameError(f"atom {key} in {where} is not type-consistent")
        return idx

    actions: list[GroundAction] = []
    for schema in domain.schemas:
        pools = [_candidates(objects, p.type, parents) for p in schema.params]
        names = [p.name for p in schema.params]
        for combo in product(*pools):
            binding = dict(zip(names, combo))
            ok = True
            for eq in schema.eq_constraints:
                left = binding.get(eq.left, eq.left)
                right = binding.get(eq.right, eq.right)
                if (left == right) != eq.equal:
                    ok = False
                    break
            if not ok:
                continue
            pre = frozenset(resolve(a, binding, f"action {schema.name}") for a in schema.precond)
            add = frozenset(resolve(a, binding, f"action {schema.name}") for a in schema.add)
            dele = frozenset(resolve(a, binding, f"action {schema.name}") for a in schema.delete)
            name = " ".join((schema.name,) + combo)
            # add wins over delete (PDDL semantics); keeps add/delete disjoint
            actions.append(GroundAction(len(actions), name, pre, add, dele - add))

    init = frozenset(resolve(a, {}, ":init") for a in problem.init)
    goal = frozenset(resolve(a, {}, ":goal") for a in problem.goal)

    task = GroundTask(domain.name, problem.name, tuple(fact_names), tuple(actions),
                      init, goal, fact_ids)
    if prune_unreachable:
        task = _prune_unreachable(task)
    return task


def _prune_unreachable(task: GroundTask) -> GroundTask:
    """Drop facts/actions outside the delete-relaxed reachable set."""
    reachable = set(task.init)
    used: list[GroundAction] = []
    remaining = list(task.actions)
    changed = True
    while changed:
        changed = False
        rest = []
        for act in remaining:
            if act.pre <= reachable:
                used.append(act)
                if not act.add <= reachable:
                    reachable |= act.add
                    changed = True
            else:
                rest.append(act)
        remaining = rest

    keep_facts = sorted(reachable | task.goal)
    remap = {old: new for new, old in enumerate(keep_facts)}
    facts = tuple(task.facts[i] for i in keep_facts)
    actions = tuple(
        GroundAction(i, a.name,
                     frozenset(remap[f] for f in a.pre),
                     frozenset(remap[f] for f in a.add),
                     frozenset(remap[f] for f in a.delete if f in remap))
        for i, a in enumerate(sorted(used, key=lambda a: a.id)))
    return GroundTask(task.domain_name, task.problem_name, facts, actions,
                      frozenset(remap[f] for f in task.init),
                      frozenset(remap[f] for f in task.goal),
                      {name: i for i, name in enumerate(facts)})


def load_task(domain_path: str, problem_path: str, prune_unreachable: bool = False) -> GroundTask:
    from .pddl import load_domain, load_problem

    return ground(load_domain(domain_path), load_problem(problem_path),
                  prune_unreachable=prune_unreachable)
