from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, strategies as st

from hardgen import toymath
from hardgen.verify import extract_final_answer


def _brute_divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


ORACLES = {
    ("divisors", "all"): lambda n: len(_brute_divisors(n)),
    ("divisors", "odd"): lambda n: sum(1 for d in _brute_divisors(n) if d % 2),
    ("divisors", "square"): lambda n: sum(1 for d in _brute_divisors(n) if int(math.isqrt(d)) ** 2 == d),
    ("divisors", "sum"): lambda n: sum(_brute_divisors(n)),
    ("remainder", "plain"): lambda a, b: a - (a // b) * b,
    ("remainder", "power"): lambda a, k, b: (a**k) % b,
    ("remainder", "product"): lambda a, c, b: (a * c) % b,
    ("sums", "integers"): lambda n: sum(range(1, n + 1)),
    ("sums", "squares"): lambda n: sum(i * i for i in range(1, n + 1)),
    ("sums", "odds"): lambda n: sum(range(1, 2 * n, 2)),
    ("sums", "cubes"): lambda n: sum(i**3 for i in range(1, n + 1)),
    ("gcd", "gcd"): lambda a, b: max(d for d in _brute_divisors(min(a, b)) if a % d == 0 and b % d == 0),
    ("gcd", "lcm"): lambda a, b: next(m for m in range(max(a, b), a * b + 1, max(a, b)) if m % a == 0 and m % b == 0),
    ("gcd", "triple"): lambda a, b, c: max(d for d in _brute_divisors(min(a, b, c)) if a % d == b % d == c % d == 0),
}


def test_every_variant_has_an_oracle():
    assert {(v.family, v.name) for v in toymath.VARIANTS} == set(ORACLES)


@given(st.randoms(use_true_random=False))
def test_answers_match_brute_force(rng):
    p = toymath.sample(rng)
    assert p.answer == ORACLES[(p.variant.family, p.variant.name)](*p.args)


@given(st.randoms(use_true_random=False))
def test_identify_recovers_problem(rng):
    p = toymath.sample(rng)
    assert toymath.identify(p.text) == p
    assert toymath.solve_text(p.text) == p.answer
    assert extract_final_answer(p.solution()) == str(p.answer)


def test_square_divisor_example():
    # 10! has 270 divisors, 30 of which are perfect squares
    p = toymath.identify("How many positive divisors of 3628800 are perfect squares?")
    assert p.answer == 30
    assert toymath.solve_text("How many positive divisors does 720 have?") == 30


def test_rephrasing_keeps_answer_and_changes_text():
    rng = random.Random(3)
    p = toymath.sample(rng, "divisors")
    q = p.rephrased(rng)
    assert q.answer == p.answer and q.text != p.text


def test_unknown_and_degenerate_text():
    assert toymath.identify("What is the capital of France?") is None
    assert toymath.identify("What is the remainder when 10 is divided by 0?") is None


def test_sample_respects_family_and_exclusion():
    rng = random.Random(1)
    for _ in range(50):
        p = toymath.sample(rng, "gcd", exclude_variant="gcd")
        assert p.variant.family == "gcd" and p.variant.name != "gcd"


def test_seed_problems_deterministic():
    assert toymath.seed_problems(10, 4) == toymath.seed_problems(10, 4)
    assert toymath.seed_problems(10, 4) != toymath.seed_problems(10, 5)


@pytest.mark.parametrize("family", toymath.FAMILIES)
def test_families_have_several_variants(family):
    assert sum(v.family == family for v in toymath.VARIANTS) >= 3
