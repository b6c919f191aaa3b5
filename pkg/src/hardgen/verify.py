"""Hard (symbolic) and soft (filters + judge) verifiers behind one ``verify`` call."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol

from hardgen import prompts
from hardgen.calculus import EquivStatus, ProbeConfig, differentiate, equivalent, simplify
from hardgen.errors import ExprSyntaxError
from hardgen.expr import ZERO, Expr, parse
from hardgen.pairs import ProblemPair, TaskKind


class Stage(str, enum.Enum):
    FORMAT = "FORMAT"
    MATCH = "MATCH"
    FILTER = "FILTER"
    JUDGE = "JUDGE"
    OK = "OK"


class ReasonCode(str, enum.Enum):
    # FORMAT
    PARSE_FAILURE = "PARSE_FAILURE"
    MALFORMED_CANDIDATE = "MALFORMED_CANDIDATE"
    FOREIGN_VARIABLE = "FOREIGN_VARIABLE"
    CONSTANT_ANTIDERIVATIVE = "CONSTANT_ANTIDERIVATIVE"
    ZERO_INTEGRAND = "ZERO_INTEGRAND"
    # MATCH
    DERIVATIVE_MISMATCH = "DERIVATIVE_MISMATCH"
    UNVERIFIABLE_DOMAIN = "UNVERIFIABLE_DOMAIN"
    # FILTER
    MALFORMED_OUTPUT = "MALFORMED_OUTPUT"
    MISSING_FINAL_ANSWER = "MISSING_FINAL_ANSWER"
    MULTIPLE_FINAL_ANSWERS = "MULTIPLE_FINAL_ANSWERS"
    TRIVIAL_COPY = "TRIVIAL_COPY"
    DEGENERATE_ANSWER = "DEGENERATE_ANSWER"
    EMPTY_PROBLEM = "EMPTY_PROBLEM"
    PROBLEM_TOO_SHORT = "PROBLEM_TOO_SHORT"
    PROBLEM_TOO_LONG = "PROBLEM_TOO_LONG"
    # JUDGE
    JUDGE_PARSE_FAILURE = "JUDGE_PARSE_FAILURE"
    INVALID_PROBLEM = "INVALID_PROBLEM"
    INVALID_SOLUTION = "INVALID_SOLUTION"
    NOT_SEED_ANCHORED = "NOT_SEED_ANCHORED"
    JUDGED_TRIVIAL_COPY = "JUDGED_TRIVIAL_COPY"
    INCOMPLETE_FINAL_ANSWER = "INCOMPLETE_FINAL_ANSWER"


_TAG_REASONS = {
    "valid_problem": ReasonCode.INVALID_PROBLEM,
    "valid_solution": ReasonCode.INVALID_SOLUTION,
    "seed_anchored": ReasonCode.NOT_SEED_ANCHORED,
    "not_trivial_copy": ReasonCode.JUDGED_TRIVIAL_COPY,
    "complete_final_answer": ReasonCode.INCOMPLETE_FINAL_ANSWER,
}


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    stage: Stage
    reasons: tuple[ReasonCode, ...] = ()
    judge_tags: Mapping[str, bool] | None = None
    # free-form diagnostics (witness point, parse message); not part of equality
    detail: str = field(default="", compare=False)

    def __post_init__(self):
        if self.accepted and (self.stage is not Stage.OK or self.reasons):
            raise ValueError("accepted verdicts must have stage OK and no reasons")
        if not self.accepted and (self.stage is Stage.OK or not self.reasons):
            raise ValueError("rejected verdicts need a failing stage and a reason")

    @classmethod
    def ok(cls, judge_tags: Mapping[str, bool] | None = None) -> Verdict:
        return cls(True, Stage.OK, (), judge_tags)

    @classmethod
    def reject(cls, stage: Stage, reason: ReasonCode, detail: str = "", judge_tags=None) -> Verdict:
        return cls(False, stage, (reason,), judge_tags, detail)

    def to_dict(self) -> dict[str, Any]:
        return {
            "accepted": self.accepted,
            "stage": self.stage.value,
            "reasons": [r.value for r in self.reasons],
            "judge_tags": None if self.judge_tags is None else {k: self.judge_tags[k] for k in prompts.JUDGE_TAGS if k in self.judge_tags},
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Verdict:
        return cls(
            accepted=bool(d["accepted"]),
            stage=Stage(d["stage"]),
            reasons=tuple(ReasonCode(r) for r in d.get("reasons", ())),
            judge_tags=d.get("judge_tags"),
            detail=d.get("detail", ""),
        )


# ----------------------------------------------------------------- integrals


def _coerce(e: Expr | str | None) -> Expr:
    if e is None:
        raise ExprSyntaxError("missing expression", 0)
    return parse(e) if isinstance(e, str) else e


def verify_integral_pair(
    f: Expr | str | None,
    F: Expr | str | None,
    var: str,
    probe: ProbeConfig | None = None,
    salt: str = "",
) -> Verdict:
    """Accept iff both expressions are well formed and ``d/dvar F`` matches ``f``."""
    try:
        f = _coerce(f)
        F = _coerce(F)
    except ExprSyntaxError as exc:
        return Verdict.reject(Stage.FORMAT, ReasonCode.PARSE_FAILURE, str(exc))
    foreign = (f.variables | F.variables) - {var}
    if foreign:
        return Verdict.reject(Stage.FORMAT, ReasonCode.FOREIGN_VARIABLE, ",".join(sorted(foreign)))
    if var not in F.variables:
        return Verdict.reject(Stage.FORMAT, ReasonCode.CONSTANT_ANTIDERIVATIVE)
    if simplify(f) == ZERO:
        return Verdict.reject(Stage.FORMAT, ReasonCode.ZERO_INTEGRAND)

    verdict = equivalent(differentiate(F, var), f, var, probe, salt)
    if verdict.status in (EquivStatus.EQUAL_SYMBOLIC, EquivStatus.EQUAL_NUMERIC):
        return Verdict.ok()
    if verdict.status is EquivStatus.NOT_EQUAL:
        x, dF, fx = verdict.witness
        return Verdict.reject(
            Stage.MATCH,
            ReasonCode.DERIVATIVE_MISMATCH,
            f"derivative mismatch at witnessed probe {var}={x!r}: F'={dF!r}, f={fx!r}",
        )
    return Verdict.reject(
        Stage.MATCH,
        ReasonCode.UNVERIFIABLE_DOMAIN,
        f"only {verdict.probe_points_used} valid probe points",
    )


# --------------------------------------------------------------- general math

_BOXED = "\\boxed{"
DEGENERATE_ANSWERS = frozenset({"no solution", "empty set", "undefined", "impossible", "inconsistent"})


@dataclass(frozen=True)
class FilterConfig:
    min_problem_chars: int = 10
    max_problem_chars: int = 2000

    def __post_init__(self):
        if not 0 <= self.min_problem_chars <= self.max_problem_chars:
            raise ValueError("need 0 <= min_problem_chars <= max_problem_chars")


def boxed_regions(text: str) -> list[str] | None:
    """Contents of every balanced ``\\boxed{...}``; ``None`` if any is unbalanced."""
    out = []
    start = text.find(_BOXED)
    while start != -1:
        i = start + len(_BOXED)
        depth = 1
        while i < len(text) and depth:
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
            i += 1
        if depth:
            return None
        out.append(text[start + len(_BOXED) : i - 1])
        start = text.find(_BOXED, i)
    return out


def extract_final_answer(raw_output: str) -> str | None:
    """The content of the single boxed region, or ``None`` for zero, several or unbalanced."""
    if not isinstance(raw_output, str):
        return None
    regions = boxed_regions(raw_output)
    if regions is None or len(regions) != 1:
        return None
    return regions[0].strip()


_NUMBER = re.compile(r"\d+(?:\.\d+)?")


def normalize_for_copy(text: str) -> str:
    """Lowercase, collapse whitespace and mask numeric literals."""
    return " ".join(_NUMBER.sub("<n>", text.lower()).split())


def _degenerate(answer: str) -> bool:
    a = " ".join(answer.lower().replace("\\text{", "").replace("}", "").replace("$", "").split())
    return a.strip(" .") in DEGENERATE_ANSWERS


def run_hard_filters(pair: ProblemPair, seed: ProblemPair, config: FilterConfig | None = None) -> Verdict:
    """Structural checks run before any judge call; the first failure wins."""
    config = config or FilterConfig()
    if pair.malformed is not None or not isinstance(pair.reference_solution, str):
        return Verdict.reject(Stage.FILTER, ReasonCode.MALFORMED_OUTPUT, pair.malformed or "")
    regions = boxed_regions(pair.reference_solution)
    if regions is None:
        return Verdict.reject(Stage.FILTER, ReasonCode.MALFORMED_OUTPUT, "unbalanced \\boxed")
    if not regions:
        return Verdict.reject(Stage.FILTER, ReasonCode.MISSING_FINAL_ANSWER)
    if len(regions) > 1:
        return Verdict.reject(Stage.FILTER, ReasonCode.MULTIPLE_FINAL_ANSWERS)
    if normalize_for_copy(pair.problem_text) == normalize_for_copy(seed.problem_text):
        return Verdict.reject(Stage.FILTER, ReasonCode.TRIVIAL_COPY)
    if _degenerate(regions[0]):
        return Verdict.reject(Stage.FILTER, ReasonCode.DEGENERATE_ANSWER, regions[0])
    problem = pair.problem_text.strip()
    if not problem:
        return Verdict.reject(Stage.FILTER, ReasonCode.EMPTY_PROBLEM)
    if len(problem) < config.min_problem_chars:
        return Verdict.reject(Stage.FILTER, ReasonCode.PROBLEM_TOO_SHORT)
    if len(problem) > config.max_problem_chars:
        return Verdict.reject(Stage.FILTER, ReasonCode.PROBLEM_TOO_LONG)
    return Verdict.ok()


class CompletionBackend(Protocol):
    def complete(self, prompt: str, n: int = 1, context: Mapping[str, Any] | None = None) -> list[str]: ...


def judge_context(pair: ProblemPair, seed: ProblemPair) -> dict[str, Any]:
    return {"role": "judge", "pair": pair, "seed": seed}


def judge_verify(pair: ProblemPair, seed: ProblemPair, judge_backend: CompletionBackend) -> Verdict:
    prompt = prompts.render_judge(
        seed.problem_text, seed.reference_solution, pair.problem_text, pair.reference_solution
    )
    raw = judge_backend.complete(prompt, n=1, context=judge_context(pair, seed))[0]
    try:
        _, tags = prompts.parse_judge_output(raw)
    except ValueError as exc:
        return Verdict.reject(Stage.JUDGE, ReasonCode.JUDGE_PARSE_FAILURE, str(exc))
    failed = tuple(_TAG_REASONS[t] for t in prompts.JUDGE_TAGS if not tags[t])
    if failed:
        return Verdict(False, Stage.JUDGE, failed, tags)
    return Verdict.ok(tags)


@dataclass
class VerifierSettings:
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    filters: FilterConfig = field(default_factory=FilterConfig)
    # ablation switch: with the gate off every candidate is accepted unchecked
    enabled: bool = True


def verify(
    pair: ProblemPair,
    seed: ProblemPair | None = None,
    judge_backend: CompletionBackend | None = None,
    settings: VerifierSettings | None = None,
) -> Verdict:
    """The single validity gate used by rewards and the pipeline."""
    settings = settings or VerifierSettings()
    if not settings.enabled:
        return Verdict.ok()
    if pair.task_kind is TaskKind.INTEGRAL:
        if pair.malformed is not None:
            return Verdict.reject(Stage.FORMAT, ReasonCode.MALFORMED_CANDIDATE, pair.malformed)
        return verify_integral_pair(
            pair.integrand, pair.antiderivative, pair.variable or "x", settings.probe, salt=pair.id
        )
    if seed is None:
        raise ValueError("general_math verification needs the seed pair")
    filtered = run_hard_filters(pair, seed, settings.filters)
    if not filtered.accepted:
        return filtered
    if judge_backend is None:
        raise ValueError("general_math verification needs a judge backend")
    return judge_verify(pair, seed, judge_backend)
