"""Setter and solver roles on top of interchangeable completion backends."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Mapping, Protocol, Sequence

from hardgen import prompts
from hardgen.calculus import ProbeConfig
from hardgen.errors import ConfigError, ExprSyntaxError
from hardgen.expr import parse
from hardgen.pairs import DifficultyEstimate, ProblemPair, SolveAttempt, TaskKind
from hardgen.verify import extract_final_answer, verify_integral_pair

# (temperature, top_p) presets: construction-time difficulty sampling and
# benchmark-style validation sampling
SAMPLING_PRESETS: dict[str, tuple[float, float]] = {
    "construction": (0.7, 0.95),
    "validation": (1.0, 0.7),
}

API_KEY_ENV = "HARDGEN_API_KEY"


class BackendKind(str, enum.Enum):
    MOCK_SETTER = "MOCK_SETTER"
    MOCK_SOLVER = "MOCK_SOLVER"
    MOCK_JUDGE = "MOCK_JUDGE"
    HTTP = "HTTP"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.7
    top_p: float = 0.95
    max_tokens: int = 1024
    n: int = 1
    timeout: float = 60.0
    max_concurrent: int = 4
    max_attempts: int = 3
    backoff_base: float = 0.5
    # behaviour knobs for the mock backends (mode, rho, skill, ...)
    options: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", BackendKind(self.kind))
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ConfigError("top_p must lie in (0, 1]")
        if self.max_concurrent < 1:
            raise ConfigError("max_concurrent must be >= 1")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        if self.kind is BackendKind.HTTP and not self.endpoint:
            raise ConfigError("HTTP backends need an endpoint")

    def with_preset(self, name: str) -> BackendConfig:
        try:
            t, p = SAMPLING_PRESETS[name]
        except KeyError:
            raise ConfigError(f"unknown sampling preset {name!r}") from None
        return replace(self, temperature=t, top_p=p)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> BackendConfig:
        d = dict(d)
        preset = d.pop("preset", None)
        known = set(cls.__dataclass_fields__)
        options = dict(d.pop("options", {}) or {})
        # unknown keys are mock knobs, so flat config tables work
        for k in [k for k in d if k not in known]:
            options[k] = d.pop(k)
        try:
            cfg = cls(options=options, **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.with_preset(preset) if preset else cfg

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "endpoint": self.endpoint,
            "model": self.model,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
            "n": self.n,
            "timeout": self.timeout,
            "max_concurrent": self.max_concurrent,
            "max_attempts": self.max_attempts,
            "backoff_base": self.backoff_base,
            "options": dict(sorted(self.options.items())),
        }


class Backend(Protocol):
    """Anything that turns a prompt into ``n`` completions.

    ``context`` carries structured side information. Mock backends read it
    (they are deterministic functions of it); HTTP backends ignore it.
    """

    def complete(self, prompt: str, n: int = 1, context: Mapping[str, Any] | None = None) -> list[str]: ...


# ------------------------------------------------------------------- setter


_INTEGRAL_WRAPPER = re.compile(
    r"^\s*(?:integrate|\\int|∫)?\s*(?P<body>.*?)\s*(?:d\s*[a-z]\s*)?$", re.IGNORECASE | re.DOTALL
)


def _integrand_text(problem: str) -> str:
    m = _INTEGRAL_WRAPPER.match(problem)
    return m.group("body") if m else problem


def candidate_id(round_index: int, index: int) -> str:
    return f"r{round_index:03d}-c{index:05d}"


def setter_generate(
    seed: ProblemPair,
    backend: Backend,
    *,
    pair_id: str,
    round_index: int = 0,
    step: int = 0,
) -> ProblemPair:
    """Ask the setter for a new pair derived from ``seed`` and parse it.

    Output that cannot be parsed yields a candidate with ``malformed`` set,
    which the verifier rejects at its first gate.
    """
    var = seed.variable or "x"
    prompt = prompts.render_setter(seed.problem_text, seed.reference_solution, seed.task_kind.value, var)
    raw = backend.complete(prompt, n=1, context={"role": "setter", "seed": seed, "key": pair_id})[0]
    base = dict(
        id=pair_id,
        task_kind=seed.task_kind,
        seed_id=seed.id,
        created_round=round_index,
        created_step=step,
        metadata={"raw_output": raw},
    )
    try:
        fields = prompts.parse_setter_output(raw)
    except ValueError as exc:
        return ProblemPair(problem_text="", reference_solution="", malformed=str(exc), variable=var, **base)

    problem = fields["Generated Problem"]
    solution = fields["Generated Reference Solution"]
    answer = fields["Final Answer"]
    if seed.task_kind is TaskKind.GENERAL_MATH:
        return ProblemPair(problem_text=problem, reference_solution=solution, final_answer=answer, **base)
    try:
        f = parse(_integrand_text(problem))
        F = parse(answer)
    except ExprSyntaxError as exc:
        return ProblemPair(
            problem_text=problem, reference_solution=solution, final_answer=answer,
            variable=var, malformed=f"unparsable expression: {exc}", **base,
        )
    return ProblemPair(
        problem_text=problem, reference_solution=solution, final_answer=answer,
        integrand=f, antiderivative=F, variable=var, **base,
    )


# ------------------------------------------------------------------- solver


def normalize_answer(answer: str) -> str | Fraction:
    """Trim, strip surrounding ``$``, collapse whitespace; exact rational if numeric."""
    a = " ".join(answer.strip().strip("$").split())
    try:
        return Fraction(a.replace(" ", ""))
    except (ValueError, ZeroDivisionError):
        return a


def answers_match(given: str, reference: str) -> bool:
    return normalize_answer(given) == normalize_answer(reference)


def grade(pair: ProblemPair, raw_output: str, probe: ProbeConfig | None = None, salt: str = "") -> tuple[str | None, bool]:
    """Extract the final answer from a solver response and grade it."""
    extracted = extract_final_answer(raw_output)
    if extracted is None:
        return None, False
    if pair.task_kind is TaskKind.INTEGRAL:
        if pair.integrand is None:
            return extracted, False
        verdict = verify_integral_pair(pair.integrand, extracted, pair.variable or "x", probe, salt=salt)
        return extracted, verdict.accepted
    if pair.final_answer is None:
        return extracted, False
    return extracted, answers_match(extracted, pair.final_answer)


def solver_solve(
    pair: ProblemPair,
    K: int,
    backend: Backend,
    *,
    purpose: str = "difficulty",
    probe: ProbeConfig | None = None,
) -> list[SolveAttempt]:
    """Draw ``K`` solver attempts for ``pair`` and grade each one."""
    if K < 1:
        raise ValueError("K must be >= 1")
    prompt = prompts.render_solver(pair.problem_text)
    outputs = backend.complete(prompt, n=K, context={"role": "solver", "pair": pair, "key": f"{pair.id}/{purpose}"})
    if len(outputs) != K:
        raise ValueError(f"backend returned {len(outputs)} completions, expected {K}")
    attempts = []
    for k, raw in enumerate(outputs):
        extracted, correct = grade(pair, raw, probe, salt=f"{pair.id}/{purpose}/{k}")
        attempts.append(SolveAttempt(pair.id, k, raw, extracted, correct))
    return attempts


def estimate_accuracy(
    pair: ProblemPair,
    K: int,
    backend: Backend,
    *,
    preset: str = "construction",
    purpose: str = "difficulty",
    probe: ProbeConfig | None = None,
) -> DifficultyEstimate:
    attempts = solver_solve(pair, K, backend, purpose=purpose, probe=probe)
    outcomes = tuple(a.correct for a in attempts)
    return DifficultyEstimate(pair.id, K, sum(outcomes), preset, outcomes)


def summarize_attempts(attempts: Sequence[SolveAttempt]) -> Fraction:
    return Fraction(sum(a.correct for a in attempts), len(attempts)) if attempts else Fraction(0)


def build_backend(config: BackendConfig, run_seed: int = 0) -> Backend:
    """Instantiate the backend described by ``config``."""
    from hardgen import mocks
    from hardgen.httpclient import HTTPBackend

    if config.kind is BackendKind.HTTP:
        return HTTPBackend(config)
    if config.kind is BackendKind.MOCK_SETTER:
        return mocks.MockSetter.from_options(config.options, run_seed)
    if config.kind is BackendKind.MOCK_SOLVER:
        return mocks.MockSolver.from_options(config.options, run_seed)
    return mocks.MockJudge.from_options(config.options, run_seed)
