"""Acceptance suite: one test per criterion, reported as PASS/FAIL lines."""

from __future__ import annotations

import random
import time
from fractions import Fraction
from pathlib import Path

import pytest
import sympy as sp

from conftest import FIXTURES
from exprgen import random_expr
from fakes import CountingBackend, judge_text
from hardgen import prompts, toymath
from hardgen.agents import BackendConfig, BackendKind, estimate_accuracy
from hardgen.analytics import bin_hardness_validity
from hardgen.config import RunConfig
from hardgen.expr import Const, add, parse
from hardgen.mocks import MockSetter, MockSolver
from hardgen.pairs import ProblemPair, TaskKind
from hardgen.pipeline import FUNNEL_STAGES, Backends, PoolRecord, build_pool, load_seed_pool, run, run_round
from hardgen.store import Store, dumps, read_jsonl, verify_manifest
from hardgen.stress import perturb_all
from hardgen.verify import ReasonCode, Stage, VerifierSettings, verify, verify_integral_pair
from oracle import X, finite_difference_suite, to_sympy

criterion = pytest.mark.criterion


# ---------------------------------------------------------------------- 1

# integrands built by reciprocal, rational and radical wrapping; antiderivatives
# are recovered by hand and confirmed below with sympy differentiation
WORKED_EXAMPLES = [
    ("(sin(ln(abs(x))) - cos(ln(abs(x))))/x^2", "-sin(ln(abs(x)))/x"),
    ("(-x^2 + 2*x*arctan(x))/(1 + x^2)^2", "(x - atan(x))/(1 + x^2)"),
    ("(exp(x)*(2*x + 1) - 1)/(2*sqrt(x))", "sqrt(x)*exp(x) - sqrt(x)"),
]


@criterion(1, "hard verifier accepts the three worked integral examples, each < 1 s")
@pytest.mark.parametrize("f, F", WORKED_EXAMPLES)
def test_c01_worked_integral_examples(f, F):
    residual = sp.diff(to_sympy(parse(F)), X) - to_sympy(parse(f))
    for v in (sp.Rational(3, 10), sp.Rational(11, 10), sp.Rational(27, 10), sp.Rational(21, 5)):
        assert abs(complex(residual.subs(X, v).evalf(50))) < 1e-40
    start = time.perf_counter()
    verdict = verify_integral_pair(f, F, "x")
    elapsed = time.perf_counter() - start
    assert verdict.accepted, verdict
    assert elapsed < 1.0


# ---------------------------------------------------------------------- 2


@criterion(2, "scale, spurious-term and sign-flip perturbations of >= 100 valid pairs are all rejected")
def test_c02_wrong_answer_stress(corpus):
    assert len(corpus) >= 100
    total = false_accepts = 0
    for item in corpus:
        F = parse(item["antiderivative"])
        for kind, G in perturb_all(F, "x").items():
            total += 1
            if verify_integral_pair(item["integrand"], G, "x", salt=f"{item['id']}/{kind}").accepted:
                false_accepts += 1
    assert total >= 300
    assert false_accepts == 0


# ---------------------------------------------------------------------- 3


@criterion(3, "F + c is accepted for every valid fixture pair and c in {-3, 1/2, 7}")
def test_c03_constant_shift(corpus):
    for item in corpus:
        F = parse(item["antiderivative"])
        assert verify_integral_pair(item["integrand"], F, "x").accepted, item["id"]
        for c in (Fraction(-3), Fraction(1, 2), Fraction(7)):
            assert verify_integral_pair(item["integrand"], add(F, Const(c)), "x", salt=item["id"]).accepted, (item["id"], c)


# ---------------------------------------------------------------------- 4


def _hack_round(tmp_path: Path, enabled: bool):
    config = RunConfig(
        per_round=200,
        seed=4,
        verifier_enabled=enabled,
        output_dir=str(tmp_path),
        setter=BackendConfig(BackendKind.MOCK_SETTER, options={"mode": "mixed", "rho": 0.5}),
        solver=BackendConfig(BackendKind.MOCK_SOLVER, options={"skill": 0.9}),
    )
    backends = Backends.from_config(config)
    result = run_round(config, 0, backends, Store(tmp_path), load_seed_pool(config))
    return backends.setter, result.records


@criterion(4, "setter reward is 0 on every invalid candidate with the verifier on and 1 with it off")
def test_c04_reward_gating(tmp_path):
    start = time.perf_counter()
    setter_on, on = _hack_round(tmp_path / "on", True)
    setter_off, off = _hack_round(tmp_path / "off", False)
    assert isinstance(setter_on, MockSetter) and isinstance(setter_off, MockSetter)
    assert len(on) == len(off) == 200
    invalid_on = [r for r in on if setter_on.is_hack(r.id)]
    invalid_off = [r for r in off if setter_off.is_hack(r.id)]
    assert [r.id for r in invalid_on] == [r.id for r in invalid_off]
    assert 60 <= len(invalid_on) <= 140
    assert all(r.reward == 0 and not r.verdict.accepted for r in invalid_on)
    assert all(r.reward == 1 for r in invalid_off)
    mean_on = sum(r.reward for r in on) / len(on)
    mean_off = sum(r.reward for r in off) / len(off)
    assert mean_on < mean_off
    assert time.perf_counter() - start < 30


# ---------------------------------------------------------------------- 5


def _calibration_pairs() -> list[ProblemPair]:
    # exact-answer problems keep grading cheap; the solver's draws are the same
    return [
        ProblemPair(
            id=f"cal-{i:03d}", task_kind=TaskKind.GENERAL_MATH, seed_id="cal",
            problem_text=t.text, reference_solution=t.solution(), final_answer=str(t.answer),
        )
        for i, t in enumerate(toymath.seed_problems(100, seed=55))
    ]


def _calibration(p: float) -> tuple[Fraction, str]:
    solver = MockSolver(skill=p, run_seed=2024)
    estimates = [estimate_accuracy(pair, 64, solver) for pair in _calibration_pairs()]
    mean = sum(e.acc for e in estimates) / len(estimates)
    blob = "".join(dumps(e.to_dict()) + "\n" for e in estimates)
    return mean, blob


@criterion(5, "mean estimated accuracy at K = 64 is within 0.03 of solver skill; estimates reproduce exactly")
@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_c05_difficulty_calibration(p):
    mean, blob = _calibration(p)
    assert abs(float(mean) - p) <= 0.03, float(mean)
    again_mean, again_blob = _calibration(p)
    assert again_mean == mean and again_blob == blob


# ---------------------------------------------------------------------- 6


@criterion(6, "replaying the 1,000-candidate fixture yields identical, monotone funnel reports")
def test_c06_funnel_determinism():
    records = [PoolRecord.from_dict(d) for d in read_jsonl(FIXTURES / "funnel_candidates.jsonl")]
    assert len(records) == 1000
    config = RunConfig(task_kind=TaskKind.GENERAL_MATH)
    first = build_pool(records, config).report
    second = build_pool([PoolRecord.from_dict(r.to_dict()) for r in records], config).report
    assert first.to_json() == second.to_json()
    assert [row.stage for row in first.rows] == list(FUNNEL_STAGES)
    counts = first.counts()
    assert counts == sorted(counts, reverse=True)
    assert counts == [1000, 1000, 906, 29, 29, 29, 28]


# ---------------------------------------------------------------------- 7


def _load_bins(name: str):
    import json

    data = json.loads((FIXTURES / "binning.json").read_text())[name]
    return [(Fraction(sum(d["outcomes"]), len(d["outcomes"])), d["valid"]) for d in data]


@criterion(7, "consensus-style retention leaves [0, 0.1) empty; verifier gating retains zero-pass valid items")
def test_c07_binning_contrast():
    consensus = _load_bins("consensus")
    assert all(acc >= Fraction(1, 10) for acc, _ in consensus)
    rows = bin_hardness_validity(consensus)
    assert rows[0].candidate_count == 0
    assert [r.candidate_count for r in rows] == [0, 6, 6, 8, 4, 3, 10, 2, 2, 9]

    gated = _load_bins("gated")
    rows = bin_hardness_validity(gated)
    assert [r.candidate_count for r in rows] == [15, 2, 4, 5, 4, 3, 4, 2, 3, 8]
    assert [r.valid_count for r in rows] == [11, 2, 2, 3, 3, 3, 2, 1, 3, 5]
    retained = bin_hardness_validity([s for s in gated if s[1]])
    assert retained[0].candidate_count == 11


# ---------------------------------------------------------------------- 8


@criterion(8, "200 random expressions match finite differences; 1,000 parse/print round trips hold")
def test_c08_numerical_calculus():
    count, valid, failures = finite_difference_suite(count=200)
    assert count == 200 and valid >= 1000
    assert failures == []
    rng = random.Random(8)
    for _ in range(1000):
        e = random_expr(rng, depth=3)
        assert parse(e.text) == e, e.text


# ---------------------------------------------------------------------- 9


def _smoke_config(out: Path) -> RunConfig:
    return RunConfig(
        rounds=2,
        per_round=20,
        difficulty_samples=8,
        rollouts=8,
        seed=7,
        output_dir=str(out),
        setter=BackendConfig(BackendKind.MOCK_SETTER, options={"mode": "mixed", "rho": 0.3}),
        solver=BackendConfig(BackendKind.MOCK_SOLVER, options={"skill": 0.7, "hardness_scale": 30.0}),
    )


@criterion(9, "mock end-to-end run (T=2, N=20, K=8) finishes < 60 s and reproduces byte-for-byte")
def test_c09_end_to_end(tmp_path):
    start = time.perf_counter()
    manifest = run(_smoke_config(tmp_path / "a"))
    assert time.perf_counter() - start < 60
    root = manifest.parent
    assert manifest.exists() and verify_manifest(root) == []
    assert list(read_jsonl(root / "pools" / "accepted.jsonl"))
    assert (root / "pools" / "challenge.jsonl").exists()
    setter = list(read_jsonl(root / "records" / "setter.jsonl"))
    assert len(setter) == 40
    for rec in setter:
        if not rec["metadata"]["accepted"]:
            assert Fraction(rec["reward"]) == 0
    accepted_ids = {r["pair"]["id"] for r in read_jsonl(root / "pools" / "candidates.jsonl") if r["verdict"]["accepted"]}
    assert all(r["pair_id"] in accepted_ids for r in read_jsonl(root / "records" / "solver.jsonl"))

    again = run(_smoke_config(tmp_path / "b"))
    assert again.read_bytes() == manifest.read_bytes()
    for rel in ("pools/candidates.jsonl", "pools/accepted.jsonl", "pools/challenge.jsonl", "records/setter.jsonl", "records/solver.jsonl"):
        assert (root / rel).read_bytes() == (again.parent / rel).read_bytes()


# --------------------------------------------------------------------- 10

SEED = ProblemPair(
    id="seed", task_kind=TaskKind.GENERAL_MATH, seed_id="seed",
    problem_text="How many positive divisors does 720 have?",
    reference_solution="720 = 2^4 * 3^2 * 5, so (4+1)(2+1)(1+1) = 30. \\boxed{30}", final_answer="30",
)


def _candidate(text: str, solution: str) -> ProblemPair:
    return ProblemPair(id="cand", task_kind=TaskKind.GENERAL_MATH, seed_id="seed", problem_text=text, reference_solution=solution)


FILTER_FAILURES = [
    _candidate("How many positive divisors does 5040 have?", "\\boxed{60}"),
    _candidate("How many positive divisors of 3628800 are perfect squares?", "The count is 30."),
    _candidate("How many positive divisors of 3628800 are perfect squares?", "\\boxed{30} or \\boxed{31}"),
    _candidate("How many positive divisors of 3628800 are perfect squares?", "\\boxed{no solution}"),
    _candidate("", "\\boxed{1}"),
]


@criterion(10, "filter-rejected candidates never reach the judge; acceptance needs all five judge tags")
def test_c10_soft_gate_ordering():
    judge = CountingBackend(judge_text())
    for cand in FILTER_FAILURES:
        verdict = verify(cand, SEED, judge)
        assert not verdict.accepted and verdict.stage is Stage.FILTER
    assert judge.count == 0

    good = _candidate("How many positive divisors of 3628800 are perfect squares?", "Square divisors use even exponents. \\boxed{30}")
    assert verify(good, SEED, judge).accepted
    assert judge.count == 1
    for tag in prompts.JUDGE_TAGS:
        single = CountingBackend(judge_text(**{tag: False}))
        verdict = verify(good, SEED, single)
        assert not verdict.accepted and verdict.stage is Stage.JUDGE and single.count == 1
    assert verify(good, SEED, judge, VerifierSettings(enabled=False)).accepted
    assert ReasonCode.TRIVIAL_COPY in verify(FILTER_FAILURES[0], SEED, judge).reasons
