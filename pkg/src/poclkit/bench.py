"""Benchmark harness: suites of problems x evaluators with IPC-style scores.

Per-problem scores for quality, nodes, and makespan are best/value ratios;
time gets full score at or under one second and falls off logarithmically.
Unsolved rows score zero everywhere. Cells run isolated in a worker pool and
the report is assembled in (problem, evaluator) order, so results do not
depend on completion order.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .grounding import load_task
from .heuristics import CostTables, build_tables
from .learning import load_model
from .plans import format_plan
from .search import (EnhancedEvaluator, FeatureEvaluator, ModelEvaluator, SearchLimits,
                     STRATEGIES, gbfs)

log = logging.getLogger("poclkit.bench")

EVALUATOR_SHORTHAND = {
    "gval": "h_gval",
    "oc": "h_oc",
    "add": "h_add",
    "add_w": "h_add_w",
    "add_r": "h_add_r",
    "add_w_r": "h_add_w_r",
}

REPORT_HEADER = ("problem", "evaluator", "solved", "plan_length", "makespan", "time_s",
                 "nodes_visited", "nodes_generated", "quality", "time_score",
                 "nodes_score", "makespan_score")


def build_evaluator(spec: str, tables: CostTables):
    """Evaluator from a spec string: a base feature shorthand or
    ``model:FILE`` / ``model:FILE:enhanced``. Fresh instance per call, so an
    enhanced evaluator's tracker is never shared between searches."""
    if spec.startswith("model:"):
        rest = spec[len("model:"):]
        enhanced = False
        if rest.endswith(":enhanced"):
            enhanced = True
            rest = rest[: -len(":enhanced")]
        evaluator = ModelEvaluator(load_model(rest), tables)
        return EnhancedEvaluator(evaluator) if enhanced else evaluator
    if spec in EVALUATOR_SHORTHAND:
        return FeatureEvaluator(EVALUATOR_SHORTHAND[spec], tables)
    raise ValueError(f"unknown evaluator spec {spec!r}")


# ── IPC-style scores ─────────────────────────────────────────────────────────

def quality_score(cost: Optional[float], best_cost: float) -> float:
    if cost is None:
        return 0.0
    return best_cost / cost


def time_score(t_seconds: Optional[float], t_best: float) -> float:
    if t_seconds is None:
        return 0.0
    if t_seconds <= 1.0:
        return 1.0
    return 1.0 / (1.0 + math.log10(t_seconds / max(t_best, 1.0)))


def nodes_score(value: Optional[float], best_value: float) -> float:
    if value is None:
        return 0.0
    return best_value / value


def makespan_score(value: Optional[float], best_value: float) -> float:
    if value is None:
        return 0.0
    return best_value / value


# ── Suite configuration ──────────────────────────────────────────────────────

@dataclass
class SuiteConfig:
    domain: str
    problems: list[str]
    evaluators: list[str]
    strategy: str = "mw-loc"
    max_generated: int = 1_000_000
    wall_time: float = 900.0
    out_dir: str = "bench-out"
    rng_seed: int = 0
    workers: int = 0                 # 0 = logical cores
    max_copies: Optional[int] = 2


def parse_suite_config(text: str, base_dir: str = ".") -> SuiteConfig:
    """Parse ``key=value`` lines; ``problem`` and ``evaluator`` repeat."""
    values: dict[str, str] = {}
    problems: list[str] = []
    evaluators: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"suite config line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "problem":
            problems.append(os.path.join(base_dir, value))
        elif key == "evaluator":
            if value.startswith("model:"):   # model paths are config-relative
                rest = value[len("model:"):]
                suffix = ""
                if rest.endswith(":enhanced"):
                    rest, suffix = rest[: -len(":enhanced")], ":enhanced"
                value = "model:" + os.path.join(base_dir, rest) + suffix
            evaluators.append(value)
        else:
            values[key] = value

    if "domain" not in values:
        raise ValueError("suite config is missing domain=")
    if not problems:
        raise ValueError("suite config needs at least one problem=")
    if not evaluators:
        raise ValueError("suite config needs at least one evaluator=")
    strategy = values.get("flaws", "mw-loc")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown flaw strategy {strategy!r}")

    return SuiteConfig(
        domain=os.path.join(base_dir, values["domain"]),
        problems=problems,
        evaluators=evaluators,
        strategy=strategy,
        max_generated=int(values.get("max_nodes", 1_000_000)),
        wall_time=float(values.get("timeout", 900.0)),
        out_dir=os.path.join(base_dir, values.get("out_dir", "bench-out")),
        rng_seed=int(values.get("seed", 0)),
        workers=int(values.get("workers", 0)),
        max_copies=None if values.get("max_copies", "2") == "none"
        else int(values.get("max_copies", 2)),
    )


# ── Suite execution ──────────────────────────────────────────────────────────

@dataclass
class CellResult:
    problem: str
    evaluator: str
    solved: bool
    plan_length: Optional[int]
    makespan: Optional[int]
    time_s: float
    visited: int
    generated: int
    plan_text: str = ""
    error: str = ""
    quality: float = 0.0
    time_score: float = 0.0
    nodes_score: float = 0.0
    makespan_score: float = 0.0


@dataclass
class ScoreReport:
    rows: list[CellResult]
    aggregates: dict[str, dict[str, float]]
    csv_path: str = ""

    def coverage(self, evaluator: str) -> int:
        return int(self.aggregates[evaluator]["coverage"])


def _run_cell(args: tuple) -> CellResult:
    domain_path, problem_path, eval_spec, strategy, max_generated, wall_time, max_copies = args
    problem_name = os.path.splitext(os.path.basename(problem_path))[0]
    try:
        task = load_task(domain_path, problem_path)
        tables = build_tables(task)
        evaluator = build_evaluator(eval_spec, tables)
        start = time.monotonic()
        result = gbfs(task, evaluator, strategy,
                      SearchLimits(max_generated, wall_time), tables,
                      max_copies=max_copies)
        elapsed = time.monotonic() - start
        if result.solved:
            return CellResult(problem_name, eval_spec, True, result.plan_length,
                              result.makespan, elapsed, result.visited, result.generated,
                              plan_text=format_plan(result.plan))
        return CellResult(problem_name, eval_spec, False, None, None, elapsed,
                          result.visited, result.generated, error=result.outcome)
    except Exception as exc:  # a failing cell must not abort the suite
        log.warning("cell %s/%s failed: %s", problem_name, eval_spec, exc)
        return CellResult(problem_name, eval_spec, False, None, None, 0.0, 0, 0,
                          error=str(exc))


def _score_rows(rows: list[CellResult]) -> None:
    by_problem: dict[str, list[CellResult]] = {}
    for row in rows:
        by_problem.setdefault(row.problem, []).append(row)
    for group in by_problem.values():
        solved = [r for r in group if r.solved]
        if not solved:
            continue
        best_length = max(1, min(r.plan_length for r in solved))
        best_nodes = max(1, min(r.visited for r in solved))
        best_makespan = max(1, min(r.makespan for r in solved))
        best_time = min(r.time_s for r in solved)
        for r in solved:
            r.quality = quality_score(max(1, r.plan_length), best_length)
            r.time_score = time_score(r.time_s, best_time)
            r.nodes_score = nodes_score(max(1, r.visited), best_nodes)
            r.makespan_score = makespan_score(max(1, r.makespan), best_makespan)


def _aggregate(rows: list[CellResult], evaluators: list[str]) -> dict[str, dict[str, float]]:
    agg = {e: {"coverage": 0, "quality": 0.0, "time": 0.0, "nodes": 0.0, "makespan": 0.0}
           for e in evaluators}
    for r in rows:
        a = agg[r.evaluator]
        a["coverage"] += int(r.solved)
        a["quality"] += r.quality
        a["time"] += r.time_score
        a["nodes"] += r.nodes_score
        a["makespan"] += r.makespan_score
    return agg


def _plan_filename(problem: str, evaluator: str) -> str:
    tag = re.sub(r"[^A-Za-z0-9_.-]+", "_", evaluator)
    return f"{problem}__{tag}.plan"


def write_report_csv(rows: list[CellResult], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_HEADER)
        for r in rows:
            writer.writerow([
                r.problem, r.evaluator, int(r.solved),
                "" if r.plan_length is None else r.plan_length,
                "" if r.makespan is None else r.makespan,
                f"{r.time_s:.3f}", r.visited, r.generated,
                f"{r.quality:.6f}", f"{r.time_score:.6f}",
                f"{r.nodes_score:.6f}", f"{r.makespan_score:.6f}",
            ])


def run_suite(config: SuiteConfig) -> ScoreReport:
    """Run every problem under every evaluator, score, and write the report."""
    cells = [(config.domain, problem, evaluator, config.strategy,
              config.max_generated, config.wall_time, config.max_copies)
             for problem in config.problems
             for evaluator in config.evaluators]

    workers = config.workers if config.workers > 0 else (os.cpu_count() or 1)
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(cell) for cell in cells]

    _score_rows(rows)
    aggregates = _aggregate(rows, config.evaluators)

    os.makedirs(config.out_dir, exist_ok=True)
    plans_dir = os.path.join(config.out_dir, "plans")
    os.makedirs(plans_dir, exist_ok=True)
    for row in rows:
        if row.solved:
            with open(os.path.join(plans_dir, _plan_filename(row.problem, row.evaluator)),
                      "w", encoding="utf-8") as fh:
                fh.write(row.plan_text)
    csv_path = os.path.join(config.out_dir, "report.csv")
    write_report_csv(rows, csv_path)
    log.info("suite done: %d cells, report at %s", len(rows), csv_path)
    return ScoreReport(rows, aggregates, csv_path)
