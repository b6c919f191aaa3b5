"""Differentiation, rule-based simplification and equivalence checking.

The equivalence decision is two-staged: an exact zero test on
``simplify(a - b)`` and, failing that, randomized numeric probing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from hardgen.errors import DomainFailure, UnsupportedForm
from hardgen.expr import (
    HALF,
    MINUS_ONE,
    ONE,
    ZERO,
    Apply,
    Const,
    Expr,
    Power,
    Product,
    Sum,
    Var,
    add,
    apply,
    eval_at,
    mul,
    power,
    split_coefficient,
)
from hardgen.seeding import derive_rng


def differentiate(e: Expr, var: str) -> Expr:
    """Derivative of ``e`` with respect to ``var``, in canonical form.

    ``d/dx abs(u)`` is taken as ``u' * u / abs(u)``, valid away from ``u = 0``.
    """
    if var not in e.variables:
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Sum):
        return add(*(differentiate(t, var) for t in e.terms))
    if isinstance(e, Product):
        fs = e.factors
        parts = []
        for i, f in enumerate(fs):
            df = differentiate(f, var)
            if df != ZERO:
                parts.append(mul(df, *fs[:i], *fs[i + 1 :]))
        return add(*parts)
    if isinstance(e, Power):
        b, n = e.base, e.exponent
        db = differentiate(b, var)
        if var not in n.variables:
            return mul(n, power(b, add(n, MINUS_ONE)), db)
        dn = differentiate(n, var)
        # b^n * (n' ln b + n b'/b)
        return mul(e, add(mul(dn, apply("ln", b)), mul(n, db, power(b, MINUS_ONE))))
    if isinstance(e, Apply):
        u = e.argument
        du = differentiate(u, var)
        return mul(_outer_derivative(e.function, u), du)
    raise UnsupportedForm(type(e).__name__)


def _outer_derivative(fn: str, u: Expr) -> Expr:
    if fn == "sin":
        return apply("cos", u)
    if fn == "cos":
        return mul(MINUS_ONE, apply("sin", u))
    if fn == "tan":
        return power(apply("cos", u), Const(-2))
    if fn == "exp":
        return apply("exp", u)
    if fn == "ln":
        return power(u, MINUS_ONE)
    if fn == "sqrt":
        return mul(HALF, power(u, Const(Fraction(-1, 2))))
    if fn == "abs":
        return mul(u, power(apply("abs", u), MINUS_ONE))
    if fn == "atan":
        return power(add(ONE, power(u, Const(2))), MINUS_ONE)
    if fn == "asin":
        return power(add(ONE, mul(MINUS_ONE, power(u, Const(2)))), Const(Fraction(-1, 2)))
    if fn == "acos":
        return mul(
            MINUS_ONE,
            power(add(ONE, mul(MINUS_ONE, power(u, Const(2)))), Const(Fraction(-1, 2))),
        )
    raise UnsupportedForm(fn)


# ------------------------------------------------------------------ simplify

_MAX_PASSES = 32


def simplify(e: Expr) -> Expr:
    """Apply the rewrite rules bottom-up until a fixed point.

    Beyond what the canonical constructors already do (constant folding,
    like terms, like factors, unit/zero laws) this rewrites
    ``exp(ln u) -> u``, ``ln(exp u) -> u`` and ``c*m*sin(u)^2 + c*m*cos(u)^2 -> c*m``.
    """
    for _ in range(_MAX_PASSES):
        nxt = _rewrite(e)
        if nxt == e:
            return e
        e = nxt
    return e


def _rewrite(e: Expr) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Sum):
        return _pythagoras(add(*(_rewrite(t) for t in e.terms)))
    if isinstance(e, Product):
        return mul(*(_rewrite(f) for f in e.factors))
    if isinstance(e, Power):
        return power(_rewrite(e.base), _rewrite(e.exponent))
    if isinstance(e, Apply):
        u = _rewrite(e.argument)
        if e.function == "ln" and isinstance(u, Apply) and u.function == "exp":
            return u.argument
        if e.function == "exp":
            return _exp_of_logs(u)
        return apply(e.function, u)
    raise TypeError(type(e).__name__)


def _exp_of_logs(u: Expr) -> Expr:
    # exp(c*ln(v) + rest) -> v^c * exp(rest)
    terms = u.terms if isinstance(u, Sum) else (u,)
    pulled: list[Expr] = []
    rest: list[Expr] = []
    for t in terms:
        c, m = split_coefficient(t)
        if isinstance(m, Apply) and m.function == "ln":
            pulled.append(power(m.argument, Const(c)))
        else:
            rest.append(t)
    if not pulled:
        return apply("exp", u)
    return mul(*pulled, apply("exp", add(*rest)))


def _trig_square(f: Expr) -> tuple[str, Expr] | None:
    if (
        isinstance(f, Power)
        and f.exponent == Const(2)
        and isinstance(f.base, Apply)
        and f.base.function in ("sin", "cos")
    ):
        return f.base.function, f.base.argument
    return None


def _pythagoras(e: Expr) -> Expr:
    if not isinstance(e, Sum):
        return e
    # index terms as (coefficient, cofactors, function, argument)
    entries = []
    for idx, t in enumerate(e.terms):
        c, m = split_coefficient(t)
        if m is None:
            continue
        factors = m.factors if isinstance(m, Product) else (m,)
        for j, f in enumerate(factors):
            sq = _trig_square(f)
            if sq is not None:
                entries.append((idx, c, factors[:j] + factors[j + 1 :], sq[0], sq[1]))
    used: set[int] = set()
    replacements: list[Expr] = []
    for i, (idx_s, c_s, rest_s, fn_s, arg_s) in enumerate(entries):
        if fn_s != "sin" or idx_s in used:
            continue
        for idx_c, c_c, rest_c, fn_c, arg_c in entries:
            if fn_c == "cos" and idx_c not in used and idx_c != idx_s and c_c == c_s and arg_c == arg_s and rest_c == rest_s:
                used.update((idx_s, idx_c))
                replacements.append(mul(Const(c_s), *rest_s))
                break
    if not used:
        return e
    kept = [t for i, t in enumerate(e.terms) if i not in used]
    return add(*kept, *replacements)


# --------------------------------------------------------------- equivalence


class EquivStatus(str, enum.Enum):
    EQUAL_SYMBOLIC = "EQUAL_SYMBOLIC"
    EQUAL_NUMERIC = "EQUAL_NUMERIC"
    NOT_EQUAL = "NOT_EQUAL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ProbeConfig:
    num_points: int = 30
    min_valid_points: int = 12
    rel_tol: float = 1e-8
    windows: tuple[tuple[float, float], ...] = ((-10.0, -0.1), (0.1, 10.0))
    seed: int = 0
    # extra draws allowed when domain failures eat into num_points
    max_draw_factor: int = 4

    def __post_init__(self):
        if self.num_points < 1 or self.min_valid_points < 1:
            raise ValueError("probe counts must be positive")
        if self.min_valid_points > self.num_points:
            raise ValueError("min_valid_points cannot exceed num_points")
        if not self.windows or any(lo >= hi for lo, hi in self.windows):
            raise ValueError("probe windows must be non-empty intervals")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_draw_factor < 1:
            raise ValueError("max_draw_factor must be >= 1")
        object.__setattr__(self, "windows", tuple((float(lo), float(hi)) for lo, hi in self.windows))

    def to_dict(self) -> dict:
        return {
            "num_points": self.num_points,
            "min_valid_points": self.min_valid_points,
            "rel_tol": self.rel_tol,
            "windows": [list(w) for w in self.windows],
            "seed": self.seed,
            "max_draw_factor": self.max_draw_factor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ProbeConfig:
        d = dict(d)
        if "windows" in d:
            d["windows"] = tuple(tuple(w) for w in d["windows"])
        return cls(**d)


@dataclass(frozen=True)
class EquivVerdict:
    status: EquivStatus
    probe_points_used: int
    max_relative_error: float | None = None
    # (point, a value, b value) of the first violating probe
    witness: tuple[float, float, float] | None = None

    @property
    def equal(self) -> bool:
        return self.status in (EquivStatus.EQUAL_SYMBOLIC, EquivStatus.EQUAL_NUMERIC)


def probe_points(config: ProbeConfig, salt: str = ""):
    """Yield probe abscissae: stratified across windows in proportion to width."""
    rng = derive_rng("probe", config.seed, salt)
    widths = [hi - lo for lo, hi in config.windows]
    total = sum(widths)
    counts = [max(1, round(config.num_points * w / total)) for w in widths]
    for _ in range(config.max_draw_factor):
        for (lo, hi), n in zip(config.windows, counts):
            for _ in range(n):
                yield rng.uniform(lo, hi)


def equivalent(
    a: Expr,
    b: Expr,
    var: str,
    config: ProbeConfig | None = None,
    salt: str = "",
) -> EquivVerdict:
    config = config or ProbeConfig()
    extra = (a.variables | b.variables) - {var}
    if extra:
        raise ValueError(f"free variables besides {var!r}: {sorted(extra)}")
    if simplify(add(a, mul(MINUS_ONE, b))) == ZERO:
        return EquivVerdict(EquivStatus.EQUAL_SYMBOLIC, 0)

    valid = 0
    worst = 0.0
    witness = None
    for x in probe_points(config, salt):
        if valid >= config.num_points:
            break
        try:
            va = eval_at(a, {var: x})
            vb = eval_at(b, {var: x})
        except DomainFailure:
            continue
        valid += 1
        scale = 1.0 + max(abs(va), abs(vb))
        err = abs(va - vb) / scale
        worst = max(worst, err)
        if err > config.rel_tol and witness is None:
            witness = (x, va, vb)
    if valid < config.min_valid_points:
        return EquivVerdict(EquivStatus.INCONCLUSIVE, valid, worst if valid else None)
    if witness is not None:
        return EquivVerdict(EquivStatus.NOT_EQUAL, valid, worst, witness)
    return EquivVerdict(EquivStatus.EQUAL_NUMERIC, valid, worst)
