"""Deterministic stand-ins for the setter, solver and judge models.

Every completion is a pure function of ``(run seed, context key, sample
index)``, so runs replay exactly and work can be parallelized freely.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping

from hardgen import prompts, toymath
from hardgen.calculus import differentiate, simplify
from hardgen.errors import ConfigError
from hardgen.expr import Const, Expr, Var, add, apply, complexity, mul, power, substitute
from hardgen.pairs import ProblemPair, TaskKind
from hardgen.seeding import derive_rng
from hardgen.stress import PERTURBATIONS
from hardgen.verify import DEGENERATE_ANSWERS, boxed_regions, normalize_for_copy


def _transforms(var: str) -> dict[str, Callable[[Expr, object], Expr]]:
    x = Var(var)
    return {
        "mul_x": lambda G, rng: mul(x, G),
        "mul_linear": lambda G, rng: mul(add(x, Const(rng.randint(1, 5))), G),
        "mul_sqrt": lambda G, rng: mul(power(x, Const(Fraction(1, 2))), G),
        "div_poly": lambda G, rng: mul(G, power(add(Const(1), power(x, Const(2))), Const(-1))),
        "mul_exp": lambda G, rng: mul(apply("exp", x), G),
        "mul_sin": lambda G, rng: mul(apply("sin", mul(Const(rng.randint(1, 3)), x)), G),
        "mul_sin_ln": lambda G, rng: mul(apply("sin", apply("ln", apply("abs", x))), G),
        "chain_sq": lambda G, rng: substitute(G, var, power(x, Const(2))),
    }


TRANSFORM_NAMES = tuple(_transforms("x"))
INTEGRAL_HACKS = ("spurious_term", "scale", "garbage")
GENERAL_HACKS = ("copy", "paraphrase", "double_box", "missing_box", "degenerate", "wrong_answer", "off_topic")


def format_setter_output(problem: str, solution: str, answer: str) -> str:
    return f"Generated Problem: {problem}\nGenerated Reference Solution: {solution}\nFinal Answer: {answer}\n"


@dataclass
class MockSetter:
    """Setter with modes ``perturb``, ``hack`` and ``mixed`` (hack with probability ``rho``)."""

    mode: str = "perturb"
    rho: float = 0.5
    run_seed: int = 0
    transforms: tuple[str, ...] = TRANSFORM_NAMES
    max_depth: int = 2
    integral_hacks: tuple[str, ...] = INTEGRAL_HACKS
    general_hacks: tuple[str, ...] = GENERAL_HACKS

    def __post_init__(self):
        if self.mode not in ("perturb", "hack", "mixed"):
            raise ConfigError(f"unknown mock setter mode {self.mode!r}")
        if not 0 <= self.rho <= 1:
            raise ConfigError("rho must lie in [0, 1]")
        unknown = set(self.transforms) - set(TRANSFORM_NAMES)
        if unknown or not self.transforms:
            raise ConfigError(f"bad transform list {self.transforms!r}")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")

    @classmethod
    def from_options(cls, options: Mapping[str, Any], run_seed: int = 0) -> MockSetter:
        opts = dict(options)
        for k in ("transforms", "integral_hacks", "general_hacks"):
            if k in opts:
                opts[k] = tuple(opts[k])
        try:
            return cls(run_seed=run_seed, **opts)
        except TypeError as exc:
            raise ConfigError(f"bad mock setter options: {exc}") from exc

    def is_hack(self, key: str) -> bool:
        """Whether the candidate generated under ``key`` is a deliberate hack."""
        if self.mode != "mixed":
            return self.mode == "hack"
        return derive_rng(self.run_seed, "setter-mode", key).random() < self.rho

    def complete(self, prompt: str, n: int = 1, context: Mapping[str, Any] | None = None) -> list[str]:
        seed: ProblemPair = context["seed"]
        key = context["key"]
        out = []
        for i in range(n):
            k = key if n == 1 else f"{key}#{i}"
            rng = derive_rng(self.run_seed, "setter", k)
            hack = self.is_hack(k)
            if seed.task_kind is TaskKind.INTEGRAL:
                out.append(self._integral(seed, rng, hack))
            else:
                out.append(self._general(seed, rng, hack))
        return out

    def _integral(self, seed: ProblemPair, rng, hack: bool) -> str:
        var = seed.variable or "x"
        table = _transforms(var)
        F = seed.antiderivative
        for _ in range(rng.randint(1, self.max_depth)):
            F = table[rng.choice(self.transforms)](F, rng)
        if var not in F.variables:
            F = mul(Var(var), F)
        f = simplify(differentiate(F, var))
        claimed = F
        if hack:
            kind = rng.choice(self.integral_hacks)
            if kind == "garbage":
                return f"Here is a harder integral: {f.text}\nFinal Answer: {F.text}\n"
            claimed = PERTURBATIONS[kind](F, var)
        return format_setter_output(
            f.text,
            f"Differentiating {claimed.text} with respect to {var} recovers the integrand.",
            claimed.text,
        )

    def _general(self, seed: ProblemPair, rng, hack: bool) -> str:
        base = toymath.identify(seed.problem_text)
        family = base.variant.family if base else None
        variant = base.variant.name if base else None
        new = toymath.sample(rng, family, exclude_variant=variant)
        if not hack:
            return format_setter_output(new.text, new.solution(), str(new.answer))
        kind = rng.choice(self.general_hacks)
        if kind == "copy":
            return format_setter_output(seed.problem_text, seed.reference_solution, seed.final_answer or "")
        if kind == "paraphrase" and base is not None:
            same = base.rephrased(rng)
            return format_setter_output(same.text, same.solution(), str(same.answer))
        if kind == "double_box":
            a = new.answer
            return format_setter_output(new.text, f"It is either \\boxed{{{a}}} or \\boxed{{{a + 1}}}.", str(a))
        if kind == "missing_box":
            return format_setter_output(new.text, f"The answer is {new.answer}.", str(new.answer))
        if kind == "degenerate":
            return format_setter_output(new.text, "No value works. \\boxed{no solution}", "no solution")
        if kind == "wrong_answer":
            wrong = new.answer + rng.randint(1, 9)
            return format_setter_output(new.text, f"Direct computation gives \\boxed{{{wrong}}}.", str(wrong))
        other = [f for f in toymath.FAMILIES if f != family]
        far = toymath.sample(rng, rng.choice(other))
        return format_setter_output(far.text, far.solution(), str(far.answer))


@dataclass
class MockSolver:
    """Solver that answers correctly with a per-problem probability.

    The probability is ``skill``, optionally decayed by problem size:
    ``skill * exp(-size / hardness_scale)`` where size is the integrand's
    complexity (integrals) or the word count (general math). A correct
    response for an integral is the pair's own reference plus a random
    constant, so pairs whose reference is wrong can never be solved.
    """

    skill: float = 0.5
    hardness_scale: float | None = None
    run_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.skill <= 1:
            raise ConfigError("skill must lie in [0, 1]")
        if self.hardness_scale is not None and self.hardness_scale <= 0:
            raise ConfigError("hardness_scale must be positive")

    @classmethod
    def from_options(cls, options: Mapping[str, Any], run_seed: int = 0) -> MockSolver:
        try:
            return cls(run_seed=run_seed, **dict(options))
        except TypeError as exc:
            raise ConfigError(f"bad mock solver options: {exc}") from exc

    def success_probability(self, pair: ProblemPair) -> float:
        if self.hardness_scale is None:
            return self.skill
        if pair.integrand is not None:
            size = complexity(pair.integrand)
        else:
            size = len(pair.problem_text.split())
        return self.skill * math.exp(-size / self.hardness_scale)

    def complete(self, prompt: str, n: int = 1, context: Mapping[str, Any] | None = None) -> list[str]:
        pair: ProblemPair = context["pair"]
        key = context["key"]
        p = self.success_probability(pair)
        out = []
        for k in range(n):
            rng = derive_rng(self.run_seed, "solver", key, k)
            solved = rng.random() < p
            if pair.task_kind is TaskKind.INTEGRAL:
                out.append(self._integral(pair, rng, solved))
            else:
                out.append(self._general(pair, rng, solved))
        return out

    @staticmethod
    def _integral(pair: ProblemPair, rng, solved: bool) -> str:
        F = pair.antiderivative
        var = pair.variable or "x"
        if F is None:
            return "I could not read the integrand."
        if solved:
            answer = add(F, Const(rng.randint(-9, 9)))
        else:
            answer = PERTURBATIONS[rng.choice(sorted(PERTURBATIONS))](F, var)
        return f"Integrating term by term gives \\boxed{{{answer.text}}}"

    @staticmethod
    def _general(pair: ProblemPair, rng, solved: bool) -> str:
        truth = toymath.solve_text(pair.problem_text)
        if truth is None:
            return "The problem cannot be answered as stated. \\boxed{undetermined}"
        answer = truth if solved else truth + rng.randint(1, 9)
        return f"Working it out carefully gives \\boxed{{{answer}}}"


@dataclass
class MockJudge:
    """Judge that grades toy general-math pairs against their exact answers.

    ``format_error_rate`` makes a fraction of responses drop a tag line, which
    exercises the strict response parser. Every call is counted.
    """

    run_seed: int = 0
    format_error_rate: float = 0.0
    calls: int = field(default=0, init=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    @classmethod
    def from_options(cls, options: Mapping[str, Any], run_seed: int = 0) -> MockJudge:
        try:
            return cls(run_seed=run_seed, **dict(options))
        except TypeError as exc:
            raise ConfigError(f"bad mock judge options: {exc}") from exc

    def decide(self, pair: ProblemPair, seed: ProblemPair) -> dict[str, bool]:
        derived = toymath.identify(pair.problem_text)
        original = toymath.identify(seed.problem_text)
        regions = boxed_regions(pair.reference_solution) or []
        boxed = regions[0].strip() if len(regions) == 1 else None
        valid_problem = derived is not None
        valid_solution = valid_problem and boxed is not None and boxed == str(derived.answer)
        return {
            "valid_problem": valid_problem,
            "valid_solution": valid_solution,
            "seed_anchored": valid_problem and original is not None
            and derived.variant.family == original.variant.family,
            "not_trivial_copy": normalize_for_copy(pair.problem_text) != normalize_for_copy(seed.problem_text)
            and not (derived and original and derived.variant == original.variant),
            "complete_final_answer": boxed is not None and boxed.lower() not in DEGENERATE_ANSWERS,
        }

    def complete(self, prompt: str, n: int = 1, context: Mapping[str, Any] | None = None) -> list[str]:
        with self._lock:
            self.calls += 1
        pair, seed = context["pair"], context["seed"]
        tags = self.decide(pair, seed)
        out = []
        for i in range(n):
            rng = derive_rng(self.run_seed, "judge", pair.id, i)
            text = prompts.format_judge_output(
                "Compared the derived problem and its solution with the seed and recomputed the answer.", tags
            )
            if rng.random() < self.format_error_rate:
                text = "\n".join(text.splitlines()[:-1])
            out.append(text)
        return out
