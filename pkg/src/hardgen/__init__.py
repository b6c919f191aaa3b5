"""Verifier-gated self-play generation of valid, hard math problems."""

from __future__ import annotations

from hardgen.calculus import EquivStatus, EquivVerdict, ProbeConfig, differentiate, equivalent, simplify
from hardgen.expr import Expr, complexity, eval_at, free_vars, parse, to_text
from hardgen.pairs import DifficultyEstimate, ProblemPair, SolveAttempt, TaskKind
from hardgen.verify import ReasonCode, Stage, Verdict, verify, verify_integral_pair

__version__ = "0.1.0"

__all__ = [
    "DifficultyEstimate",
    "EquivStatus",
    "EquivVerdict",
    "Expr",
    "ProbeConfig",
    "ProblemPair",
    "ReasonCode",
    "SolveAttempt",
    "Stage",
    "TaskKind",
    "Verdict",
    "complexity",
    "differentiate",
    "equivalent",
    "eval_at",
    "free_vars",
    "parse",
    "simplify",
    "to_text",
    "verify",
    "verify_integral_pair",
]
