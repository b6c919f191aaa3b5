"""Random expression generators for property tests."""

from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import strategies as st

from hardgen.expr import FUNCTIONS, Const, Expr, Var, add, apply, mul, power

SMALL_EXPONENTS = (Fraction(2), Fraction(3), Fraction(-1), Fraction(-2), Fraction(1, 2), Fraction(-1, 2), Fraction(1, 3))


def consts() -> st.SearchStrategy[Const]:
    return st.builds(
        lambda n, d: Const(Fraction(n, d)),
        st.integers(-6, 6),
        st.sampled_from([1, 1, 1, 2, 3]),
    )


def leaves(variables: tuple[str, ...] = ("x",)) -> st.SearchStrategy[Expr]:
    return st.one_of(st.sampled_from([Var(v) for v in variables]), consts())


def exprs(variables: tuple[str, ...] = ("x",), max_leaves: int = 10) -> st.SearchStrategy[Expr]:
    """Canonical expressions over ``variables`` built only through the smart constructors."""

    def extend(children):
        return st.one_of(
            st.lists(children, min_size=2, max_size=3).map(lambda xs: add(*xs)),
            st.lists(children, min_size=2, max_size=3).map(lambda xs: mul(*xs)),
            st.tuples(children, st.sampled_from(SMALL_EXPONENTS)).map(lambda t: power(t[0], Const(t[1]))),
            st.tuples(children, leaves(variables)).map(lambda t: power(*t)),
            st.tuples(st.sampled_from(FUNCTIONS), children).map(lambda t: apply(*t)),
            children.map(lambda c: mul(Const(-1), c)),
        )

    return st.recursive(leaves(variables), extend, max_leaves=max_leaves)


def random_expr(rng: random.Random, depth: int = 3, variables: tuple[str, ...] = ("x",), functions=FUNCTIONS) -> Expr:
    """Seeded generator used where a fixed-size sample is required."""
    if depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.65:
            return Var(rng.choice(variables))
        return Const(Fraction(rng.randint(-5, 5), rng.choice([1, 1, 2, 3])))
    kind = rng.randrange(5)
    if kind == 0:
        return add(*(random_expr(rng, depth - 1, variables, functions) for _ in range(rng.randint(2, 3))))
    if kind == 1:
        return mul(*(random_expr(rng, depth - 1, variables, functions) for _ in range(rng.randint(2, 3))))
    if kind == 2:
        return power(random_expr(rng, depth - 1, variables, functions), Const(rng.choice(SMALL_EXPONENTS)))
    if kind == 3:
        return apply(rng.choice(functions), random_expr(rng, depth - 1, variables, functions))
    return mul(Const(-1), random_expr(rng, depth - 1, variables, functions))


def random_univariate(rng: random.Random, depth: int = 3, functions=FUNCTIONS) -> Expr:
    """A random expression that actually depends on ``x``."""
    while True:
        e = random_expr(rng, depth, ("x",), functions)
        if "x" in e.variables:
            return e
