"""Verifier-gated rewards and the training records handed to an external trainer.

Rewards are exact ``Fraction`` values and are serialized as strings such as
``"3/4"``; floats only ever appear in reports.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from hardgen.errors import MissingDifficulty, SchemaMismatch, UngatedPair
from hardgen.pairs import DifficultyEstimate, ProblemPair, SolveAttempt
from hardgen.verify import Verdict

RECORD_SCHEMA_VERSION = 1


class Role(str, enum.Enum):
    SETTER = "SETTER"
    SOLVER = "SOLVER"


def setter_reward(verdict: Verdict, difficulty: DifficultyEstimate | None) -> Fraction:
    """``1 - acc`` for accepted pairs, ``0`` for everything the verifier rejects."""
    if not verdict.accepted:
        return Fraction(0)
    if difficulty is None:
        raise MissingDifficulty("accepted verdict has no difficulty estimate")
    return 1 - difficulty.acc


def solver_reward(attempt: SolveAttempt, accepted_ids: Iterable[str] | Mapping[str, Any]) -> Fraction:
    """Per-attempt correctness reward, defined only on the accepted pool."""
    if attempt.pair_id not in accepted_ids:
        raise UngatedPair(f"pair {attempt.pair_id} is not in the verifier-accepted pool")
    return Fraction(int(attempt.correct))


@dataclass(frozen=True)
class TrainingRecord:
    role: Role
    prompt: str
    completion: str
    reward: Fraction
    pair_id: str
    round: int
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "reward", Fraction(self.reward))
        if not 0 <= self.reward <= 1:
            raise ValueError(f"reward {self.reward} outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": RECORD_SCHEMA_VERSION,
            "role": self.role.value,
            "pair_id": self.pair_id,
            "round": self.round,
            "reward": str(self.reward),
            "prompt": self.prompt,
            "completion": self.completion,
            "metadata": dict(sorted(self.metadata.items())),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TrainingRecord:
        if d.get("schema_version") != RECORD_SCHEMA_VERSION:
            raise SchemaMismatch(f"unsupported training record schema {d.get('schema_version')!r}")
        return cls(
            role=Role(d["role"]),
            prompt=d["prompt"],
            completion=d["completion"],
            reward=Fraction(d["reward"]),
            pair_id=d["pair_id"],
            round=int(d["round"]),
            metadata=dict(d.get("metadata") or {}),
        )


@dataclass(frozen=True)
class CandidateOutcome:
    """Everything a round learned about one candidate."""

    pair: ProblemPair
    verdict: Verdict
    difficulty: DifficultyEstimate | None
    setter_prompt: str
    setter_completion: str
    # rollouts used for solver training; only present for accepted pairs
    rollouts: tuple[SolveAttempt, ...] = ()
    solver_prompt: str = ""

    @property
    def reward(self) -> Fraction:
        return setter_reward(self.verdict, self.difficulty)


def emit_training_records(outcomes: Sequence[CandidateOutcome], round_index: int) -> tuple[list[TrainingRecord], list[TrainingRecord]]:
    """Setter records for every candidate and solver records for accepted ones.

    Returns ``(setter_records, solver_records)`` in candidate order.
    """
    accepted = {o.pair.id for o in outcomes if o.verdict.accepted}
    setter: list[TrainingRecord] = []
    solver: list[TrainingRecord] = []
    for o in outcomes:
        setter.append(
            TrainingRecord(
                Role.SETTER,
                o.setter_prompt,
                o.setter_completion,
                o.reward,
                o.pair.id,
                round_index,
                {
                    "accepted": o.verdict.accepted,
                    "stage": o.verdict.stage.value,
                    "acc": None if o.difficulty is None else str(o.difficulty.acc),
                },
            )
        )
        for a in o.rollouts:
            solver.append(
                TrainingRecord(
                    Role.SOLVER,
                    o.solver_prompt,
                    a.raw_output,
                    solver_reward(a, accepted),
                    o.pair.id,
                    round_index,
                    {"sample_index": a.sample_index},
                )
            )
    return setter, solver
