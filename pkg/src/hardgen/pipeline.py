"""Generation rounds, curation funnel, challenge selection and the full run."""

from __future__ import annotations

import hashlib
import logging
import os
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from hardgen import analytics, prompts
from hardgen.agents import Backend, build_backend, estimate_accuracy, setter_generate, solver_solve, candidate_id
from hardgen.config import RunConfig
from hardgen.errors import ConfigError, EmptySelection, StoreFailure
from hardgen.expr import complexity
from hardgen.pairs import DifficultyEstimate, ProblemPair, SolveAttempt, TaskKind
from hardgen.rewards import CandidateOutcome, emit_training_records, setter_reward
from hardgen.seeding import derive_rng
from hardgen.store import STREAMS, Store, dumps, read_jsonl, write_text_atomic
from hardgen.verify import ReasonCode, Verdict, VerifierSettings, normalize_for_copy, verify

log = logging.getLogger(__name__)

MANIFEST_SCHEMA_VERSION = 1
FUNNEL_STAGES = (
    "parsed",
    "exact_dedup",
    "template_dedup",
    "verifier_accepted",
    "difficulty_estimated",
    "pass_band",
)
_PARSE_REASONS = {ReasonCode.PARSE_FAILURE, ReasonCode.MALFORMED_CANDIDATE, ReasonCode.MALFORMED_OUTPUT}


# ------------------------------------------------------------------ records


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def problem_key_text(pair: ProblemPair) -> str:
    if pair.task_kind is TaskKind.INTEGRAL and pair.integrand is not None:
        return pair.integrand.text
    return " ".join(pair.problem_text.split())


def exact_key(pair: ProblemPair) -> str:
    return _sha(problem_key_text(pair))


def template_key(pair: ProblemPair) -> str:
    return _sha(normalize_for_copy(problem_key_text(pair)))


def pair_complexity(pair: ProblemPair) -> int:
    if pair.integrand is not None:
        return complexity(pair.integrand)
    return len(pair.problem_text.split())


@dataclass(frozen=True)
class PoolRecord:
    pair: ProblemPair
    verdict: Verdict
    difficulty: DifficultyEstimate | None
    round: int
    index: int
    rollouts: tuple[SolveAttempt, ...] = ()
    stage: str | None = None

    def __post_init__(self):
        if self.verdict.accepted and self.difficulty is None:
            raise ValueError(f"accepted record {self.pair.id} lacks a difficulty estimate")

    @property
    def id(self) -> str:
        return self.pair.id

    @property
    def acc(self) -> Fraction | None:
        return None if self.difficulty is None else self.difficulty.acc

    @property
    def reward(self) -> Fraction:
        return setter_reward(self.verdict, self.difficulty)

    @property
    def exact_key(self) -> str:
        return exact_key(self.pair)

    @property
    def template_key(self) -> str:
        return template_key(self.pair)

    @property
    def complexity(self) -> int:
        return pair_complexity(self.pair)

    @property
    def parsed(self) -> bool:
        return self.pair.malformed is None and not (set(self.verdict.reasons) & _PARSE_REASONS)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "pair": self.pair.to_dict(),
            "verdict": self.verdict.to_dict(),
            "difficulty": None if self.difficulty is None else self.difficulty.to_dict(),
            "setter_reward": str(self.reward),
            "exact_key": self.exact_key,
            "template_key": self.template_key,
            "complexity": self.complexity,
            "round": self.round,
            "index": self.index,
            "rollouts": [a.to_dict() for a in self.rollouts],
        }
        if self.stage is not None:
            d["stage"] = self.stage
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> PoolRecord:
        diff = d.get("difficulty")
        return cls(
            pair=ProblemPair.from_dict(d["pair"]),
            verdict=Verdict.from_dict(d["verdict"]),
            difficulty=None if diff is None else DifficultyEstimate.from_dict(diff),
            round=int(d["round"]),
            index=int(d["index"]),
            rollouts=tuple(SolveAttempt(**a) for a in d.get("rollouts", ())),
            stage=d.get("stage"),
        )


# -------------------------------------------------------------------- seeds


def _builtin_seed_file(task_kind: TaskKind):
    name = "integral_seeds.jsonl" if task_kind is TaskKind.INTEGRAL else "general_math_seeds.jsonl"
    return resources.files("hardgen").joinpath("data", name)


def load_seed_pool(config: RunConfig) -> list[ProblemPair]:
    if config.seed_pool == "builtin":
        with resources.as_file(_builtin_seed_file(config.task_kind)) as p:
            rows = list(read_jsonl(p))
    else:
        p = Path(config.seed_pool)
        if not p.exists():
            raise ConfigError(f"seed pool {p} not found")
        rows = list(read_jsonl(p))
    seeds = [ProblemPair.from_dict(r) for r in rows]
    seeds = [s for s in seeds if s.task_kind is config.task_kind]
    if not seeds:
        raise ConfigError(f"seed pool has no {config.task_kind.value} seeds")
    return seeds


# ------------------------------------------------------------------- rounds


@dataclass
class Backends:
    setter: Backend
    solver: Backend
    judge: Backend | None = None

    @classmethod
    def from_config(cls, config: RunConfig) -> Backends:
        judge = build_backend(config.judge, config.seed) if config.task_kind is TaskKind.GENERAL_MATH else None
        return cls(build_backend(config.setter, config.seed), build_backend(config.solver, config.seed), judge)


def seed_schedule(config: RunConfig, round_index: int, num_seeds: int) -> list[int]:
    """Seed indices for one round, drawn with replacement."""
    rng = derive_rng(config.seed, "seeds", round_index)
    return [rng.randrange(num_seeds) for _ in range(config.per_round)]


def process_candidate(
    config: RunConfig,
    seed: ProblemPair,
    backends: Backends,
    round_index: int,
    index: int,
) -> PoolRecord:
    """Generate, verify and (if accepted) score one candidate."""
    pair = setter_generate(
        seed,
        backends.setter,
        pair_id=candidate_id(round_index, index),
        round_index=round_index,
        step=round_index * config.per_round + index,
    )
    settings = VerifierSettings(probe=config.probe, filters=config.filters, enabled=config.verifier_enabled)
    verdict = verify(pair, seed, backends.judge, settings)
    if not verdict.accepted:
        # the gate short-circuits: no solver calls for rejected candidates
        return PoolRecord(pair, verdict, None, round_index, index)
    difficulty = estimate_accuracy(
        pair, config.difficulty_samples, backends.solver, preset="construction", probe=config.probe
    )
    rollouts = solver_solve(pair, config.rollouts, backends.solver, purpose="rollout", probe=config.probe)
    return PoolRecord(pair, verdict, difficulty, round_index, index, tuple(rollouts))


@dataclass
class RoundResult:
    round: int
    records: list[PoolRecord]
    setter_records: int
    solver_records: int

    @property
    def accepted(self) -> list[PoolRecord]:
        return [r for r in self.records if r.verdict.accepted]


def _outcome(rec: PoolRecord, seeds_by_id: Mapping[str, ProblemPair]) -> CandidateOutcome:
    seed = seeds_by_id.get(rec.pair.seed_id)
    prompt = (
        prompts.render_setter(seed.problem_text, seed.reference_solution, seed.task_kind.value, seed.variable or "x")
        if seed is not None
        else ""
    )
    return CandidateOutcome(
        pair=rec.pair,
        verdict=rec.verdict,
        difficulty=rec.difficulty,
        setter_prompt=prompt,
        setter_completion=str(rec.pair.metadata.get("raw_output", "")),
        rollouts=rec.rollouts,
        solver_prompt=prompts.render_solver(rec.pair.problem_text),
    )


def run_round(
    config: RunConfig,
    round_index: int,
    backends: Backends,
    store: Store,
    seeds: Sequence[ProblemPair],
) -> RoundResult:
    """Run one generation round, committing each candidate as it completes.

    Candidates already present in the store (from an interrupted attempt) are
    skipped; since every candidate depends only on its own key, the replay
    produces exactly the records an uninterrupted run would have.
    """
    if not seeds:
        raise ConfigError("seed pool is empty")
    store.set_round_status(round_index, "RUNNING")
    schedule = seed_schedule(config, round_index, len(seeds))
    done = {
        r["pair"]["id"] for r in store.read("candidates") if int(r["round"]) == round_index
    }
    pending = [i for i in range(config.per_round) if candidate_id(round_index, i) not in done]

    def work(i: int) -> PoolRecord:
        return process_candidate(config, seeds[schedule[i]], backends, round_index, i)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        # map yields in submission order, so the stream order is deterministic
        for rec in pool.map(work, pending):
            store.append_records("candidates", [rec.to_dict()])

    records = sorted(
        (PoolRecord.from_dict(r) for r in store.read("candidates") if int(r["round"]) == round_index),
        key=lambda r: r.index,
    )
    seeds_by_id = {s.id: s for s in seeds}
    setter_recs, solver_recs = emit_training_records([_outcome(r, seeds_by_id) for r in records], round_index)
    n_set = _append_missing(store, "training_setter", setter_recs, round_index)
    n_sol = _append_missing(store, "training_solver", solver_recs, round_index)
    store.set_round_status(round_index, "DONE")
    return RoundResult(round_index, records, n_set, n_sol)


def _append_missing(store: Store, stream: str, records, round_index: int) -> int:
    # training records of a round are appended once; a resumed round skips them
    present = sum(1 for r in store.read(stream) if int(r["round"]) == round_index)
    if present and present != len(records):
        raise StoreFailure(f"{stream} holds a partial round {round_index}")
    if present:
        return present
    return store.append_records(stream, [r.to_dict() for r in records])


# ------------------------------------------------------------------- funnel


@dataclass(frozen=True)
class FunnelRow:
    stage: str
    input: int
    output: int
    rejected: Mapping[str, int]
    skipped: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "stage": self.stage,
            "input": self.input,
            "output": self.output,
            "rejected": dict(sorted(self.rejected.items())),
            "skipped": self.skipped,
        }


@dataclass(frozen=True)
class FunnelReport:
    task_kind: str
    rows: tuple[FunnelRow, ...]

    def counts(self) -> list[int]:
        return [self.rows[0].input] + [r.output for r in self.rows] if self.rows else []

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": 1,
            "task_kind": self.task_kind,
            "stages": [r.to_dict() for r in self.rows],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


@dataclass
class PoolResult:
    pool: list[PoolRecord]
    report: FunnelReport
    # survivors before the pass band; the challenge pool is drawn from these
    scored: list[PoolRecord] = field(default_factory=list)


def _dedup(records: list[PoolRecord], key: Callable[[PoolRecord], str]) -> list[PoolRecord]:
    """One record per key: the first accepted one if any, else the first."""
    chosen: dict[str, PoolRecord] = {}
    for r in records:
        k = key(r)
        cur = chosen.get(k)
        if cur is None or (r.verdict.accepted and not cur.verdict.accepted):
            chosen[k] = r
    keep = {id(r) for r in chosen.values()}
    return [r for r in records if id(r) in keep]


def build_pool(candidates: Iterable[PoolRecord], config: RunConfig) -> PoolResult:
    records = list(candidates)
    rows: list[FunnelRow] = []

    def stage(name: str, survivors: list[PoolRecord], before: list[PoolRecord], why: Callable[[PoolRecord], str], skipped=False):
        kept = {id(r) for r in survivors}
        hist: dict[str, int] = {}
        for r in before:
            if id(r) not in kept:
                reason = why(r)
                hist[reason] = hist.get(reason, 0) + 1
        rows.append(FunnelRow(name, len(before), len(survivors), hist, skipped))
        return survivors

    cur = stage("parsed", [r for r in records if r.parsed], records, lambda r: "MALFORMED")
    cur = stage("exact_dedup", _dedup(cur, lambda r: r.exact_key), cur, lambda r: "DUPLICATE_EXACT")
    cur = stage("template_dedup", _dedup(cur, lambda r: r.template_key), cur, lambda r: "DUPLICATE_TEMPLATE")
    cur = stage(
        "verifier_accepted",
        [r for r in cur if r.verdict.accepted],
        cur,
        lambda r: r.verdict.reasons[0].value,
    )
    cur = stage(
        "difficulty_estimated", [r for r in cur if r.difficulty is not None], cur, lambda r: "NO_ESTIMATE"
    )
    scored = cur
    lo, hi = config.band
    if config.task_kind is TaskKind.GENERAL_MATH:
        cur = stage(
            "pass_band",
            [r for r in cur if lo <= r.acc <= hi],
            cur,
            lambda r: "BELOW_BAND" if r.acc < lo else "ABOVE_BAND",
        )
    else:
        cur = stage("pass_band", list(cur), cur, lambda r: "", skipped=True)
    pool = [replace(r, stage=FUNNEL_STAGES[-1]) for r in cur]
    return PoolResult(pool, FunnelReport(config.task_kind.value, tuple(rows)), scored)


def challenge_sort_key(r: PoolRecord):
    return (r.acc, -r.complexity, r.id)


def select_challenge(pool: Iterable[PoolRecord], config: RunConfig, size: int | None = None) -> list[PoolRecord]:
    """Hardest accepted records: ``acc <= threshold``, hardest and largest first."""
    threshold = Fraction(str(config.challenge_threshold))
    size = config.challenge_size if size is None else size
    seen: set[str] = set()
    eligible = []
    for r in pool:
        if not r.verdict.accepted or r.difficulty is None or r.exact_key in seen:
            continue
        seen.add(r.exact_key)
        if r.acc <= threshold:
            eligible.append(r)
    if not eligible:
        raise EmptySelection(f"no accepted record has acc <= {threshold}")
    eligible.sort(key=challenge_sort_key)
    return [replace(r, stage="challenge") for r in eligible[:size]]


# ---------------------------------------------------------------------- run


def _write_derived(store: Store, stream: str, records: Sequence[PoolRecord]) -> None:
    """Write a stream computed from the candidates; identical reruns are no-ops."""
    text = "".join(dumps({**r.to_dict(), "schema_version": STREAMS[stream].version}) + "\n" for r in records)
    path = store.path(stream)
    if path.exists():
        if path.read_text(encoding="utf-8") == text:
            return
        raise StoreFailure(f"{path} exists with different content; use a fresh output directory")
    write_text_atomic(path, text)


def _run_hook(config: RunConfig, round_index: int, root: Path) -> None:
    env = {**os.environ, "HARDGEN_RUN_DIR": str(root), "HARDGEN_ROUND": str(round_index)}
    log.info("running trainer hook after round %d", round_index)
    subprocess.run(config.trainer_hook, shell=True, check=True, env=env)


def run(
    config: RunConfig,
    backends: Backends | None = None,
    progress: Callable[[str], None] | None = None,
) -> Path:
    """Execute all rounds, curate, select the challenge set, report; return the manifest path."""
    say = progress or (lambda msg: log.info(msg))
    store = Store(config.output_dir)
    seeds = load_seed_pool(config)
    backends = backends or Backends.from_config(config)

    status = store.round_status()
    for r in range(config.rounds):
        if status.get(r) == "DONE":
            say(f"round {r}: already complete, skipping")
            continue
        result = run_round(config, r, backends, store, seeds)
        say(f"round {r}: {len(result.records)} candidates, {len(result.accepted)} accepted")
        if config.trainer_hook and r < config.rounds - 1:
            _run_hook(config, r, store.root)

    candidates = [PoolRecord.from_dict(d) for d in store.read("candidates")]
    built = build_pool(candidates, config)
    _write_derived(store, "accepted", built.pool)
    try:
        challenge = select_challenge(built.scored, config)
    except EmptySelection:
        say("challenge selection is empty")
        challenge = []
    _write_derived(store, "challenge", challenge)

    report_files = analytics.emit_reports(
        store.root / "reports",
        analytics.collect(candidates, seeds, built.report.to_dict(), config),
    )
    files = [STREAMS[s].path for s in STREAMS if store.path(s).exists()]
    files += [str(p.relative_to(store.root)) for p in report_files]
    manifest = store.write_manifest(
        {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "run_id": config.run_id,
            "config": config.to_dict(),
            "rounds": {str(k): v for k, v in sorted(store.round_status().items())},
            "schema_versions": {name: spec.version for name, spec in STREAMS.items()},
            "counts": {
                "candidates": len(candidates),
                "accepted": len(built.pool),
                "challenge": len(challenge),
            },
        },
        files,
    )
    say(f"manifest written to {manifest}")
    return manifest


def export_sft(pool: Iterable[PoolRecord], path: Path) -> int:
    """Write chat-format supervised records (solver prompt -> reference solution)."""
    lines = []
    for r in pool:
        if not r.verdict.accepted:
            continue
        lines.append(
            dumps(
                {
                    "schema_version": 1,
                    "pair_id": r.id,
                    "messages": [
                        {"role": "user", "content": prompts.render_solver(r.pair.problem_text)},
                        {"role": "assistant", "content": r.pair.reference_solution},
                    ],
                }
            )
            + "\n"
        )
    write_text_atomic(path, "".join(lines))
    return len(lines)
