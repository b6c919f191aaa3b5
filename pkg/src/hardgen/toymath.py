"""Small, exactly solvable general-math problem families.

The mock setter, solver and judge use these as ground truth so that the
soft-verifier path can be exercised without a language model. Each family has
several variants (genuinely different questions) and each variant has a few
phrasings. A parameter change alone is caught by the number-masked copy
filter; a rephrasing slips past the filter and has to be caught by the judge.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable


def _divisors(n: int) -> list[int]:
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def _is_square(n: int) -> bool:
    return math.isqrt(n) ** 2 == n


@dataclass(frozen=True)
class Variant:
    family: str
    name: str
    templates: tuple[str, ...]
    arity: int
    solve: Callable[..., int]
    sampler: Callable[[random.Random], tuple[int, ...]]

    def render(self, args: tuple[int, ...], phrasing: int = 0) -> str:
        return self.templates[phrasing].format(*args)

    @cached_property
    def patterns(self) -> tuple[re.Pattern[str], ...]:
        out = []
        for t in self.templates:
            escaped = re.escape(t)
            for i in range(self.arity):
                escaped = escaped.replace(re.escape("{%d}" % i), r"(\d+)")
            out.append(re.compile("^" + escaped + "$"))
        return tuple(out)


def _n(lo: int, hi: int):
    return lambda rng: (rng.randint(lo, hi),)


def _pair(lo: int, hi: int):
    return lambda rng: (rng.randint(lo, hi), rng.randint(lo, hi))


VARIANTS: tuple[Variant, ...] = (
    Variant("divisors", "all", (
        "How many positive divisors does {0} have?",
        "Find the number of positive integers that divide {0}.",
        "Count the positive divisors of the integer {0}.",
    ), 1, lambda n: len(_divisors(n)), _n(12, 5040)),
    Variant("divisors", "odd", (
        "How many positive divisors of {0} are odd numbers?",
        "Find the number of odd positive integers that divide {0}.",
    ), 1, lambda n: sum(d % 2 for d in _divisors(n)), _n(12, 5040)),
    Variant("divisors", "square", (
        "How many positive divisors of {0} are perfect squares?",
        "Count the perfect squares that divide {0}.",
    ), 1, lambda n: sum(_is_square(d) for d in _divisors(n)), _n(12, 5040)),
    Variant("divisors", "sum", (
        "What is the sum of all positive divisors of {0}?",
        "Add up every positive integer that divides {0}. What total do you get?",
    ), 1, lambda n: sum(_divisors(n)), _n(12, 2000)),
    Variant("remainder", "plain", (
        "What is the remainder when {0} is divided by {1}?",
        "Find {0} modulo {1}, as a value between 0 and one less than the modulus.",
    ), 2, lambda a, b: a % b, lambda rng: (rng.randint(100, 99999), rng.randint(3, 97))),
    Variant("remainder", "power", (
        "What is the remainder when {0} raised to the power {1} is divided by {2}?",
        "Compute the residue of {0}^{1} modulo {2}.",
    ), 3, lambda a, k, b: pow(a, k, b), lambda rng: (rng.randint(2, 50), rng.randint(5, 200), rng.randint(3, 97))),
    Variant("remainder", "product", (
        "Find the remainder of the product {0} times {1} upon division by {2}.",
        "What remainder is left when {0} multiplied by {1} is divided by {2}?",
    ), 3, lambda a, c, b: (a * c) % b, lambda rng: (rng.randint(100, 9999), rng.randint(100, 9999), rng.randint(3, 97))),
    Variant("sums", "integers", (
        "What is the sum of the first {0} positive integers?",
        "Add the whole numbers from 1 up to {0}. What is the total?",
    ), 1, lambda n: n * (n + 1) // 2, _n(5, 500)),
    Variant("sums", "squares", (
        "What is the sum of the squares of the first {0} positive integers?",
        "Compute 1^2 + 2^2 + ... + {0}^2.",
    ), 1, lambda n: n * (n + 1) * (2 * n + 1) // 6, _n(5, 200)),
    Variant("sums", "odds", (
        "Compute the sum of the first {0} odd positive integers.",
        "What do the first {0} odd numbers, starting from 1, add up to?",
    ), 1, lambda n: n * n, _n(5, 500)),
    Variant("sums", "cubes", (
        "Compute the sum of the cubes of the first {0} positive integers.",
        "Find 1^3 + 2^3 + ... + {0}^3.",
    ), 1, lambda n: (n * (n + 1) // 2) ** 2, _n(5, 100)),
    Variant("gcd", "gcd", (
        "What is the greatest common divisor of {0} and {1}?",
        "Find the largest positive integer dividing both {0} and {1}.",
    ), 2, math.gcd, _pair(24, 9999)),
    Variant("gcd", "lcm", (
        "What is the least common multiple of {0} and {1}?",
        "Find the smallest positive integer that is a multiple of both {0} and {1}.",
    ), 2, lambda a, b: a * b // math.gcd(a, b), _pair(6, 999)),
    Variant("gcd", "triple", (
        "Find the greatest common divisor of the three numbers {0}, {1} and {2}.",
        "What is the largest integer that divides each of {0}, {1} and {2}?",
    ), 3, lambda a, b, c: math.gcd(math.gcd(a, b), c), lambda rng: tuple(rng.randint(24, 9999) for _ in range(3))),
)

FAMILIES = tuple(sorted({v.family for v in VARIANTS}))


@dataclass(frozen=True)
class ToyProblem:
    variant: Variant
    args: tuple[int, ...]
    phrasing: int = 0

    @property
    def text(self) -> str:
        return self.variant.render(self.args, self.phrasing)

    def rephrased(self, rng: random.Random) -> ToyProblem:
        """Same problem in a different wording, when the variant has one."""
        others = [i for i in range(len(self.variant.templates)) if i != self.phrasing]
        return ToyProblem(self.variant, self.args, rng.choice(others)) if others else self

    @property
    def answer(self) -> int:
        return self.variant.solve(*self.args)

    def solution(self) -> str:
        return f"Evaluating directly for the given values gives {self.answer}. \\boxed{{{self.answer}}}"


def identify(text: str) -> ToyProblem | None:
    """Recover the family, variant and parameters of a toy problem text."""
    text = text.strip()
    for v in VARIANTS:
        for phrasing, pattern in enumerate(v.patterns):
            m = pattern.match(text)
            if m:
                args = tuple(int(g) for g in m.groups())
                # degenerate parameters make some variants meaningless
                if any(a == 0 for a in args):
                    return None
                return ToyProblem(v, args, phrasing)
    return None


def solve_text(text: str) -> int | None:
    p = identify(text)
    return None if p is None else p.answer


def sample(rng: random.Random, family: str | None = None, exclude_variant: str | None = None) -> ToyProblem:
    choices = [v for v in VARIANTS if (family is None or v.family == family) and v.name != exclude_variant]
    v = rng.choice(choices)
    return ToyProblem(v, v.sampler(rng), rng.randrange(len(v.templates)))


def seed_problems(count: int, seed: int = 0) -> list[ToyProblem]:
    rng = random.Random(seed)
    return [sample(rng) for _ in range(count)]
