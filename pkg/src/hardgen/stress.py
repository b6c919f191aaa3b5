"""Wrong-answer perturbations of a candidate antiderivative.

Each perturbation turns a valid pair (f, F) into (f, F~) with F~' != f, so a
sound verifier must reject all of them.
"""

from __future__ import annotations

from hardgen.expr import MINUS_ONE, Const, Expr, Product, Sum, Var, add, mul


def scale(F: Expr, var: str = "x") -> Expr:
    return mul(Const(2), F)


def spurious_term(F: Expr, var: str = "x") -> Expr:
    return add(F, Var(var))


def _flip_in_sum(s: Sum, var: str) -> Expr | None:
    for i, t in enumerate(s.terms):
        if var in t.variables and len(s.terms) > 1:
            return add(*s.terms[:i], mul(MINUS_ONE, t), *s.terms[i + 1 :])
    return None


def sign_flip(F: Expr, var: str = "x") -> Expr:
    """Negate one variable-dependent term.

    Prefers a term of a top-level sum, then a term of the first nested sum
    found in a top-level product, and falls back to negating ``F`` itself.
    """
    if isinstance(F, Sum):
        flipped = _flip_in_sum(F, var)
        if flipped is not None:
            return flipped
    if isinstance(F, Product):
        for i, f in enumerate(F.factors):
            if isinstance(f, Sum):
                inner = _flip_in_sum(f, var)
                if inner is not None:
                    return mul(*F.factors[:i], inner, *F.factors[i + 1 :])
    return mul(MINUS_ONE, F)


PERTURBATIONS = {
    "scale": scale,
    "spurious_term": spurious_term,
    "sign_flip": sign_flip,
}


def perturb_all(F: Expr, var: str = "x") -> dict[str, Expr]:
    return {name: fn(F, var) for name, fn in PERTURBATIONS.items()}
