"""Record types shared by the agents, verifier, rewards and pipeline."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

from hardgen.errors import SchemaMismatch
from hardgen.expr import Expr, parse


class TaskKind(str, enum.Enum):
    INTEGRAL = "integral"
    GENERAL_MATH = "general_math"


@dataclass(frozen=True)
class ProblemPair:
    id: str
    task_kind: TaskKind
    seed_id: str
    problem_text: str
    reference_solution: str
    final_answer: str | None = None
    integrand: Expr | None = None
    antiderivative: Expr | None = None
    variable: str | None = None
    created_round: int = 0
    created_step: int = 0
    # set when the backend output could not be parsed into the required fields
    malformed: str | None = None
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "task_kind", TaskKind(self.task_kind))
        if self.task_kind is TaskKind.INTEGRAL and self.malformed is None:
            if self.integrand is None or self.antiderivative is None or not self.variable:
                raise ValueError(f"integral pair {self.id} needs integrand, antiderivative and variable")

    def with_id(self, new_id: str) -> ProblemPair:
        return replace(self, id=new_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "task_kind": self.task_kind.value,
            "seed_id": self.seed_id,
            "problem_text": self.problem_text,
            "reference_solution": self.reference_solution,
            "final_answer": self.final_answer,
            "integrand": None if self.integrand is None else self.integrand.text,
            "antiderivative": None if self.antiderivative is None else self.antiderivative.text,
            "variable": self.variable,
            "created_round": self.created_round,
            "created_step": self.created_step,
            "malformed": self.malformed,
            "metadata": dict(sorted(self.metadata.items())),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ProblemPair:
        try:
            integrand = d.get("integrand")
            anti = d.get("antiderivative")
            return cls(
                id=d["id"],
                task_kind=TaskKind(d["task_kind"]),
                seed_id=d["seed_id"],
                problem_text=d.get("problem_text", ""),
                reference_solution=d.get("reference_solution", ""),
                final_answer=d.get("final_answer"),
                integrand=None if integrand is None else parse(integrand),
                antiderivative=None if anti is None else parse(anti),
                variable=d.get("variable"),
                created_round=int(d.get("created_round", 0)),
                created_step=int(d.get("created_step", 0)),
                malformed=d.get("malformed"),
                metadata=dict(d.get("metadata") or {}),
            )
        except (KeyError, ValueError) as exc:
            raise SchemaMismatch(f"bad problem pair record: {exc}") from exc


def integral_pair(
    id: str,
    integrand: Expr | str,
    antiderivative: Expr | str,
    variable: str = "x",
    seed_id: str = "",
    **kwargs: Any,
) -> ProblemPair:
    """Convenience constructor that fills the text fields from the expressions."""
    f = parse(integrand) if isinstance(integrand, str) else integrand
    F = parse(antiderivative) if isinstance(antiderivative, str) else antiderivative
    return ProblemPair(
        id=id,
        task_kind=TaskKind.INTEGRAL,
        seed_id=seed_id or id,
        problem_text=f.text,
        reference_solution=F.text,
        final_answer=F.text,
        integrand=f,
        antiderivative=F,
        variable=variable,
        **kwargs,
    )


@dataclass(frozen=True)
class SolveAttempt:
    pair_id: str
    sample_index: int
    raw_output: str
    extracted_answer: str | None
    correct: bool

    def __post_init__(self):
        if self.extracted_answer is None and self.correct:
            raise ValueError("an attempt without an extracted answer cannot be correct")

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "sample_index": self.sample_index,
            "raw_output": self.raw_output,
            "extracted_answer": self.extracted_answer,
            "correct": self.correct,
        }


@dataclass(frozen=True)
class DifficultyEstimate:
    pair_id: str
    K: int
    successes: int
    preset: str = "construction"
    outcomes: tuple[bool, ...] = ()

    def __post_init__(self):
        if self.K < 1 or not 0 <= self.successes <= self.K:
            raise ValueError(f"need 0 <= successes <= K with K >= 1, got {self.successes}/{self.K}")
        if self.outcomes and (len(self.outcomes) != self.K or sum(self.outcomes) != self.successes):
            raise ValueError("outcomes disagree with K/successes")

    @property
    def acc(self) -> Fraction:
        return Fraction(self.successes, self.K)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "K": self.K,
            "successes": self.successes,
            "acc": str(self.acc),
            "preset": self.preset,
            "outcomes": [int(o) for o in self.outcomes],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DifficultyEstimate:
        return cls(
            pair_id=d["pair_id"],
            K=int(d["K"]),
            successes=int(d["successes"]),
            preset=d.get("preset", "construction"),
            outcomes=tuple(bool(o) for o in d.get("outcomes", ())),
        )
