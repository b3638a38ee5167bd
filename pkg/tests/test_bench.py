"""IPC-style scoring arithmetic, suite runs, report format, CLI surface."""

from __future__ import annotations

import csv
import json
import os
import subprocess
import sys

import pytest

from poclkit import cli
from poclkit.bench import (SuiteConfig, build_evaluator, makespan_score, nodes_score,
                           parse_suite_config, quality_score, run_suite, time_score,
                           REPORT_HEADER)
from poclkit.heuristics import build_tables
from poclkit.learning import LinearModel, save_model
from poclkit.search import EnhancedEvaluator, FeatureEvaluator, ModelEvaluator

from conftest import fixture_path, load_fixture_task


# ── score arithmetic ─────────────────────────────────────────────────────────

def test_quality_score():
    assert quality_score(10, 10) == 1.0
    assert quality_score(12, 10) == pytest.approx(10 / 12, abs=1e-12)
    assert quality_score(None, 10) == 0.0


def test_time_score_full_under_one_second():
    assert time_score(0.4, 0.1) == 1.0
    assert time_score(1.0, 0.2) == 1.0


def test_time_score_log_falloff():
    assert time_score(10, 10) == 1.0
    assert time_score(100, 10) == pytest.approx(0.5, abs=1e-12)
    assert time_score(None, 1) == 0.0


def test_nodes_and_makespan_scores():
    assert nodes_score(500, 500) == 1.0
    assert nodes_score(1000, 500) == 0.5
    assert makespan_score(8, 4) == 0.5
    assert makespan_score(4, 4) == 1.0
    assert nodes_score(None, 1) == 0.0
    assert makespan_score(None, 1) == 0.0


# ── evaluator specs ──────────────────────────────────────────────────────────

def test_build_evaluator_base_features(gripper2_tables):
    for spec, feature in (("gval", "h_gval"), ("oc", "h_oc"), ("add", "h_add"),
                          ("add_w", "h_add_w"), ("add_r", "h_add_r"),
                          ("add_w_r", "h_add_w_r")):
        evaluator = build_evaluator(spec, gripper2_tables)
        assert isinstance(evaluator, FeatureEvaluator)
        assert evaluator.name == feature


def test_build_evaluator_model_specs(tmp_path, gripper2_tables):
    path = str(tmp_path / "m.json")
    save_model(LinearModel((1.0,), 0.0, (2,), {"base_heuristic": "h_add"}), path)
    plain = build_evaluator(f"model:{path}", gripper2_tables)
    assert isinstance(plain, ModelEvaluator)
    enhanced = build_evaluator(f"model:{path}:enhanced", gripper2_tables)
    assert isinstance(enhanced, EnhancedEvaluator)
    assert enhanced.tracker.observations == 0
    # fresh tracker per construction
    other = build_evaluator(f"model:{path}:enhanced", gripper2_tables)
    assert other.tracker is not enhanced.tracker


def test_build_evaluator_unknown_spec(gripper2_tables):
    with pytest.raises(ValueError):
        build_evaluator("h-add", gripper2_tables)


# ── suite config ─────────────────────────────────────────────────────────────

def test_parse_suite_config(tmp_path):
    text = """
    # comment
    domain = gripper.pddl
    problem = gripper-1.pddl
    problem = gripper-2.pddl
    evaluator = add
    evaluator = oc
    flaws = mc-loc
    max_nodes = 1234
    timeout = 5.5
    out_dir = out
    seed = 3
    workers = 1
    """
    config = parse_suite_config(text, base_dir="/base")
    assert config.domain == "/base/gripper.pddl"
    assert config.problems == ["/base/gripper-1.pddl", "/base/gripper-2.pddl"]
    assert config.evaluators == ["add", "oc"]
    assert config.strategy == "mc-loc"
    assert config.max_generated == 1234
    assert config.wall_time == 5.5
    assert config.rng_seed == 3
    assert config.workers == 1


def test_parse_suite_config_rejects_bad_lines():
    with pytest.raises(ValueError):
        parse_suite_config("domain gripper.pddl")
    with pytest.raises(ValueError):
        parse_suite_config("domain=d.pddl\nevaluator=add")   # no problems


def test_parse_suite_config_rebases_model_paths():
    text = """
    domain = d.pddl
    problem = p.pddl
    evaluator = add
    evaluator = model:m.json
    evaluator = model:m.json:enhanced
    """
    config = parse_suite_config(text, base_dir="/base")
    assert config.evaluators == ["add", "model:/base/m.json", "model:/base/m.json:enhanced"]


def _suite(tmp_path, problems=("gripper-1.pddl", "gripper-2.pddl"),
           evaluators=("add", "oc"), workers=1, max_nodes=20000):
    return SuiteConfig(
        domain=fixture_path("gripper.pddl"),
        problems=[fixture_path(p) for p in problems],
        evaluators=list(evaluators),
        strategy="mw-loc",
        max_generated=max_nodes,
        wall_time=20.0,
        out_dir=str(tmp_path / "out"),
        workers=workers,
    )


def test_run_suite_report(tmp_path):
    report = run_suite(_suite(tmp_path))
    assert len(report.rows) == 4
    for row in report.rows:
        assert row.solved
        assert 0.0 <= row.quality <= 1.0
        assert 0.0 <= row.nodes_score <= 1.0
    # the per-problem best solver scores exactly 1.0 on each metric
    for problem in ("gripper-1", "gripper-2"):
        rows = [r for r in report.rows if r.problem == problem]
        assert max(r.quality for r in rows) == 1.0
        assert max(r.nodes_score for r in rows) == 1.0
        assert max(r.makespan_score for r in rows) == 1.0
    # aggregates equal the column sums recomputed from the CSV
    with open(report.csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0].keys()) == REPORT_HEADER
    for evaluator in ("add", "oc"):
        sums = {k: 0.0 for k in ("quality", "time_score", "nodes_score", "makespan_score")}
        coverage = 0
        for row in rows:
            if row["evaluator"] == evaluator:
                coverage += int(row["solved"])
                for k in sums:
                    sums[k] += float(row[k])
        agg = report.aggregates[evaluator]
        assert coverage == agg["coverage"]
        assert sums["quality"] == pytest.approx(agg["quality"], abs=1e-6)
        assert sums["nodes_score"] == pytest.approx(agg["nodes"], abs=1e-6)
        assert sums["makespan_score"] == pytest.approx(agg["makespan"], abs=1e-6)


def test_run_suite_unsolved_rows_score_zero(tmp_path):
    config = _suite(tmp_path, problems=("gripper-1.pddl",), evaluators=("add",),
                    max_nodes=1)
    report = run_suite(config)
    row = report.rows[0]
    assert not row.solved
    assert row.quality == row.time_score == row.nodes_score == row.makespan_score == 0.0
    assert report.aggregates["add"]["coverage"] == 0


def test_run_suite_parallel_deterministic(tmp_path):
    def strip_time(path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        idx = rows[0].index("time_s")
        return [[v for i, v in enumerate(row) if i != idx] for row in rows]

    r1 = run_suite(_suite(tmp_path / "a", workers=2))
    r2 = run_suite(_suite(tmp_path / "b", workers=2))
    assert strip_time(r1.csv_path) == strip_time(r2.csv_path)


def test_run_suite_writes_plan_files(tmp_path):
    report = run_suite(_suite(tmp_path, problems=("gripper-1.pddl",), evaluators=("add",)))
    plans = os.listdir(os.path.join(report.csv_path.rsplit(os.sep, 1)[0], "plans"))
    assert len(plans) == 1
    assert plans[0].endswith(".plan")


def test_run_suite_survives_bad_problem(tmp_path):
    config = _suite(tmp_path)
    config.problems.append(str(tmp_path / "missing.pddl"))
    report = run_suite(config)
    bad = [r for r in report.rows if r.problem == "missing"]
    assert len(bad) == len(config.evaluators)
    assert all(not r.solved and r.error for r in bad)


# ── CLI ──────────────────────────────────────────────────────────────────────

def test_cli_solve_exit_codes(tmp_path, capsys):
    plan_out = str(tmp_path / "plan.txt")
    code = cli.main(["solve", fixture_path("gripper.pddl"), fixture_path("gripper-1.pddl"),
                     "--eval", "add", "--plan-out", plan_out])
    assert code == 0
    out = capsys.readouterr().out
    assert ";; outcome=solved" in out
    assert os.path.exists(plan_out)
    with open(plan_out) as fh:
        assert ";; makespan=" in fh.read()


def test_cli_solve_limit_exit_code(capsys):
    code = cli.main(["solve", fixture_path("gripper.pddl"), fixture_path("gripper-1.pddl"),
                     "--max-nodes", "1"])
    assert code == 1


def test_cli_solve_missing_file(capsys):
    code = cli.main(["solve", "/nonexistent/d.pddl", "/nonexistent/p.pddl"])
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_cli_solve_bad_eval_spec(capsys):
    code = cli.main(["solve", fixture_path("gripper.pddl"), fixture_path("gripper-1.pddl"),
                     "--eval", "bogus"])
    assert code == 3


def test_cli_usage_error():
    with pytest.raises(SystemExit) as err:
        cli.main(["solve"])   # missing required arguments
    assert err.value.code == 2


def test_cli_learn_dataset_and_fit(tmp_path, capsys):
    data = str(tmp_path / "data.csv")
    code = cli.main(["learn", "dataset", fixture_path("gripper.pddl"),
                     fixture_path("gripper-1.pddl"), fixture_path("gripper-2.pddl"),
                     "--base", "add", "--seeds-per-problem", "6", "--seed", "4",
                     "--out", data])
    assert code == 0
    assert os.path.exists(data)
    model = str(tmp_path / "model.json")
    code = cli.main(["learn", "fit", data, "--out", model])
    assert code == 0
    doc = json.loads(open(model).read())
    assert doc["technique"] == "linear_regression"
    assert len(doc["weights"]) == len(doc["mask"]) >= 1
    # the fitted model is usable as an evaluator spec
    code = cli.main(["solve", fixture_path("gripper.pddl"), fixture_path("gripper-1.pddl"),
                     "--eval", f"model:{model}:enhanced", "--max-nodes", "20000"])
    assert code == 0


def test_cli_bench(tmp_path, capsys):
    config_path = str(tmp_path / "suite.cfg")
    with open(config_path, "w") as fh:
        fh.write(f"""
domain = {fixture_path('gripper.pddl')}
problem = {fixture_path('gripper-1.pddl')}
evaluator = add
evaluator = oc
flaws = mw-loc
max_nodes = 20000
timeout = 10
out_dir = bench-out
workers = 1
""")
    code = cli.main(["bench", config_path])
    assert code == 0
    out = capsys.readouterr().out
    assert "coverage" in out
    assert os.path.exists(str(tmp_path / "bench-out" / "report.csv"))


def test_cli_entry_point_subprocess():
    env = dict(os.environ, PYTHONPATH=os.pathsep.join(sys.path))
    proc = subprocess.run([sys.executable, "-m", "poclkit.cli", "solve",
                           fixture_path("gripper.pddl"), fixture_path("gripper-1.pddl")],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert ";; outcome=solved" in proc.stdout


def test_pocl_log_env_controls_stderr(tmp_path):
    config_path = str(tmp_path / "suite.cfg")
    with open(config_path, "w") as fh:
        fh.write(f"domain = {fixture_path('gripper.pddl')}\n"
                 f"problem = {fixture_path('gripper-1.pddl')}\n"
                 "evaluator = add\nmax_nodes = 20000\ntimeout = 10\n"
                 f"out_dir = {tmp_path / 'out'}\nworkers = 1\n")
    env = dict(os.environ, PYTHONPATH=os.pathsep.join(sys.path))
    quiet = subprocess.run([sys.executable, "-m", "poclkit.cli", "bench", config_path],
                           capture_output=True, text=True,
                           env=dict(env, POCL_LOG="off"))
    chatty = subprocess.run([sys.executable, "-m", "poclkit.cli", "bench", config_path],
                            capture_output=True, text=True,
                            env=dict(env, POCL_LOG="info"))
    assert quiet.returncode == chatty.returncode == 0
    assert "suite done" not in quiet.stderr
    assert "suite done" in chatty.stderr
