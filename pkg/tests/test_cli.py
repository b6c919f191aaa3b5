from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path


from hardgen.cli import EXIT_BACKEND, EXIT_OK, EXIT_REJECTED, EXIT_USAGE, main
from hardgen.pairs import DifficultyEstimate, ProblemPair, TaskKind
from hardgen.pipeline import PoolRecord
from hardgen.store import dumps
from hardgen.verify import Verdict

SMOKE = """
task_kind = "integral"
rounds = 1
per_round = 5
rollouts = 4
seed = 2
output_dir = "out"

[setter]
kind = "MOCK_SETTER"
mode = "mixed"
rho = 0.3

[solver]
kind = "MOCK_SOLVER"
skill = 0.6
"""


def write_config(tmp_path: Path, text: str = SMOKE) -> Path:
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


def write_pool(path: Path, successes: list[int]) -> Path:
    lines = []
    for i, s in enumerate(successes):
        pair = ProblemPair(
            id=f"g{i}", task_kind=TaskKind.GENERAL_MATH, seed_id="s",
            problem_text=f"What is the sum of the first {i + 5} positive integers?",
            reference_solution=f"\\boxed{{{(i + 5) * (i + 6) // 2}}}", final_answer=str((i + 5) * (i + 6) // 2),
        )
        lines.append(dumps(PoolRecord(pair, Verdict.ok(), DifficultyEstimate(pair.id, 10, s), 0, i).to_dict()))
    path.write_text("\n".join(lines) + "\n")
    return path


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_verify_accepts(capsys):
    assert main(["verify", "--integrand", "2*x*cos(x^2)", "--anti", "sin(x^2)"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["accepted"] is True


def test_verify_rejects(capsys):
    assert main(["verify", "--integrand", "cos(x)", "--anti", "2*sin(x)"]) == EXIT_REJECTED
    assert json.loads(capsys.readouterr().out)["reasons"] == ["DERIVATIVE_MISMATCH"]


def test_verify_syntax_error(capsys):
    assert main(["verify", "--integrand", "cos(x", "--anti", "sin(x)"]) == EXIT_USAGE
    assert "syntax error" in capsys.readouterr().err


def test_usage_errors():
    assert main([]) == EXIT_USAGE
    assert main(["verify", "--integrand", "x"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE


def test_run_smoke(tmp_path, capsys):
    cfg = write_config(tmp_path)
    start = time.perf_counter()
    assert main(["run", str(cfg)]) == EXIT_OK
    assert time.perf_counter() - start < 10
    manifest = Path(json.loads(capsys.readouterr().out)["manifest"])
    # relative output_dir resolves against the config file's directory
    assert manifest == tmp_path / "out" / "manifest.json"
    assert (tmp_path / "out" / "pools" / "accepted.jsonl").exists()


def test_run_overrides(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["run", str(cfg), "--set", "per_round=3", "--out", str(tmp_path / "o2")]) == EXIT_OK
    manifest = json.loads((tmp_path / "o2" / "manifest.json").read_text())
    assert manifest["counts"]["candidates"] == 3
    assert main(["run", str(cfg), "--set", "nonsense=3"]) == EXIT_USAGE


def test_run_missing_config(tmp_path):
    assert main(["run", str(tmp_path / "missing.toml")]) == EXIT_USAGE


def test_run_bad_band(tmp_path):
    cfg = write_config(tmp_path, SMOKE.replace('seed = 2', 'seed = 2\npass_band = [0.9, 0.1]'))
    assert main(["run", str(cfg)]) == EXIT_USAGE
    assert not (tmp_path / "out").exists()


def test_run_unreachable_backend(tmp_path, capsys):
    text = SMOKE.replace('kind = "MOCK_SOLVER"\nskill = 0.6', 'kind = "HTTP"\nendpoint = "http://127.0.0.1:9/v1/completions"\nmax_attempts = 1\ntimeout = 1.0')
    cfg = write_config(tmp_path, text)
    assert main(["run", str(cfg)]) == EXIT_BACKEND
    assert "backend failure" in capsys.readouterr().err


def test_challenge_command(tmp_path, capsys):
    pool = write_pool(tmp_path / "pool.jsonl", [0, 0, 1, 5])
    before = digest(pool)
    assert main(["challenge", str(pool), "--out", str(tmp_path / "ch")]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["records"] == 2 and out["ids"] == ["g0", "g1"]
    assert len((tmp_path / "ch" / "challenge.jsonl").read_text().splitlines()) == 2
    assert digest(pool) == before


def test_challenge_empty(tmp_path, capsys):
    pool = write_pool(tmp_path / "pool.jsonl", [3, 4])
    assert main(["challenge", str(pool)]) == EXIT_REJECTED
    assert "empty selection" in capsys.readouterr().err


def test_challenge_refuses_to_overwrite_input(tmp_path):
    pool = write_pool(tmp_path / "challenge.jsonl", [0])
    before = digest(pool)
    assert main(["challenge", str(pool), "--out", str(tmp_path)]) == EXIT_USAGE
    assert digest(pool) == before


def test_filter_command(tmp_path, capsys):
    pool = write_pool(tmp_path / "pool.jsonl", [0, 5, 5, 10])
    before = digest(pool)
    assert main(["filter", str(pool), "--set", 'task_kind="general_math"']) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    stages = [s["stage"] for s in out["funnel"]["stages"]]
    assert stages[0] == "parsed" and stages[-1] == "pass_band"
    # sum-of-integers problems share one template, so dedup keeps a single record
    assert out["records"] <= 1
    assert (tmp_path / "filtered" / "funnel.json").exists()
    assert digest(pool) == before


def test_report_on_empty_pool(tmp_path, capsys):
    pool = tmp_path / "empty.jsonl"
    pool.write_text("")
    assert main(["report", str(pool), "--out", str(tmp_path / "rep")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["records"] == 0
    assert (tmp_path / "rep" / "bins.csv").exists()


def test_report_missing_pool(tmp_path):
    assert main(["report", str(tmp_path / "none.jsonl")]) == EXIT_USAGE


def test_export_sft_command(tmp_path, capsys):
    pool = write_pool(tmp_path / "pool.jsonl", [1, 2])
    out = tmp_path / "sft.jsonl"
    assert main(["export-sft", str(pool), "--out", str(out)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["records"] == 2
    assert len(out.read_text().splitlines()) == 2
    assert main(["export-sft", str(pool), "--out", str(pool)]) == EXIT_USAGE


def test_shipped_configs_load():
    from hardgen.config import load_config

    root = Path(__file__).resolve().parents[1] / "configs"
    for path in root.glob("*.toml"):
        load_config(path)
