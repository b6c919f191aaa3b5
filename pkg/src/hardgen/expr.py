"""Expression trees for integrands and antiderivatives.

All public construction goes through the smart constructors :func:`add`,
:func:`mul`, :func:`power` and :func:`apply`, which return canonical form:

* sums and products are flattened and sorted;
* numeric constants are folded into a single leading coefficient/term;
* like terms are collected (``x + x -> 2*x``) and like factors merged
  (``x*x -> x^2``); ``exp`` factors merge into one ``exp`` of the sum;
* products distribute over sum factors (but powers of sums stay folded);
* subtraction is ``Sum[a, Product[-1, b]]`` and division ``Power(b, -1)``.

Structural equality of canonical trees coincides with equality of their
printed text, which is what makes the ordering total.

>>> print(parse("x*x + 2*x - x"))
x + x^2
>>> print(parse("-(x + 1)"))
-x - 1
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping

from hardgen.errors import (
    DomainFailure,
    EmptyInput,
    ExprSyntaxError,
    UnboundVariable,
    UnknownFunction,
)

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "atan", "asin", "acos")
ALIASES = {"log": "ln", "arctan": "atan", "arcsin": "asin", "arccos": "acos"}
CONSTANT_NAMES = ("pi", "e")

# Print precedence; higher binds tighter.
_SUM, _NEG, _PROD, _POW, _ATOM = 1, 2, 3, 4, 5


class _memo:
    """Lock-free ``cached_property``.

    The standard one (before 3.12) serializes every instance behind a
    per-property lock, which deadlocks when threads evaluate two cached
    properties of shared subtrees in opposite orders. Values here are pure,
    so a racing duplicate computation is harmless.
    """

    def __init__(self, fn):
        self.fn = fn
        self.name = fn.__name__
        self.__doc__ = fn.__doc__

    def __get__(self, obj, owner=None):
        if obj is None:
            return self
        value = self.fn(obj)
        obj.__dict__[self.name] = value
        return value


class Expr:
    """Base class of the six node kinds. Instances are immutable."""

    rank = 0

    def _fields(self) -> tuple:
        raise NotImplementedError

    @_memo
    def _hash(self) -> int:
        return hash((type(self).__name__, self._fields()))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._fields() == other._fields()  # type: ignore[attr-defined]

    def __setattr__(self, name, value):
        if name in self.__dict__ or name in self._slots:
            raise AttributeError(f"{type(self).__name__} is immutable")
        object.__setattr__(self, name, value)

    _slots: tuple[str, ...] = ()

    @_memo
    def text(self) -> str:
        return _format(self)[0]

    @_memo
    def sort_key(self) -> tuple[int, str]:
        return (self.rank, self.text)

    @_memo
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children())

    @_memo
    def variables(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for c in self.children():
            out |= c.variables
        return out

    def children(self) -> tuple[Expr, ...]:
        return ()

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.text}>"

    # arithmetic sugar, all canonicalizing
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), MINUS_ONE))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, MINUS_ONE))

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return mul(MINUS_ONE, self)


class Const(Expr):
    rank = 0
    _slots = ("value",)

    def __init__(self, value: Fraction | int):
        value = Fraction(value)
        object.__setattr__(self, "value", value)

    def _fields(self):
        return (self.value,)


class Var(Expr):
    rank = 1
    _slots = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)

    def _fields(self):
        return (self.name,)

    @_memo
    def variables(self) -> frozenset[str]:
        return frozenset((self.name,))


class Apply(Expr):
    rank = 2
    _slots = ("function", "argument")

    def __init__(self, function: str, argument: Expr):
        object.__setattr__(self, "function", function)
        object.__setattr__(self, "argument", argument)

    def _fields(self):
        return (self.function, self.argument)

    def children(self):
        return (self.argument,)


class Power(Expr):
    rank = 3
    _slots = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Expr):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)

    def _fields(self):
        return (self.base, self.exponent)

    def children(self):
        return (self.base, self.exponent)


class Product(Expr):
    rank = 4
    _slots = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        object.__setattr__(self, "factors", tuple(factors))

    def _fields(self):
        return self.factors

    def children(self):
        return self.factors


class Sum(Expr):
    rank = 5
    _slots = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        object.__setattr__(self, "terms", tuple(terms))

    def _fields(self):
        return self.terms

    def children(self):
        return self.terms


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
HALF = Const(Fraction(1, 2))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(value)
    if isinstance(value, str):
        return parse(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def const(value: int | Fraction | str) -> Const:
    return Const(Fraction(value))


def var(name: str) -> Var:
    return Var(name)


def _sorted(items: Iterable[Expr]) -> tuple[Expr, ...]:
    return tuple(sorted(items, key=lambda e: e.sort_key))


def split_coefficient(term: Expr) -> tuple[Fraction, Expr | None]:
    """Split ``term`` into a rational coefficient and the remaining monomial."""
    if isinstance(term, Const):
        return term.value, None
    if isinstance(term, Product) and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        return term.factors[0].value, rest[0] if len(rest) == 1 else Product(rest)
    return Fraction(1), term


def add(*terms: Expr) -> Expr:
    pending = list(terms)
    while True:
        flat: list[Expr] = []
        for t in pending:
            if isinstance(t, Sum):
                flat.extend(t.terms)
            else:
                flat.append(t)
        constant = Fraction(0)
        coeffs: dict[Expr, Fraction] = {}
        for t in flat:
            c, m = split_coefficient(t)
            if m is None:
                constant += c
            else:
                coeffs[m] = coeffs.get(m, Fraction(0)) + c
        out: list[Expr] = []
        nested = False
        for m, c in coeffs.items():
            if c == 0:
                continue
            t = m if c == 1 else mul(Const(c), m)
            if isinstance(t, (Sum, Const)):
                nested = True
            out.append(t)
        if nested:
            pending = [Const(constant), *out]
            continue
        if constant != 0:
            out.append(Const(constant))
        if not out:
            return ZERO
        if len(out) == 1:
            return out[0]
        return Sum(_sorted(out))


def mul(*factors: Expr) -> Expr:
    pending = list(factors)
    while True:
        flat: list[Expr] = []
        for f in pending:
            if isinstance(f, Product):
                flat.extend(f.factors)
            else:
                flat.append(f)
        coeff = Fraction(1)
        exponents: dict[Expr, list[Expr]] = {}
        exp_args: list[Expr] = []
        for f in flat:
            if isinstance(f, Const):
                coeff *= f.value
            elif isinstance(f, Apply) and f.function == "exp":
                exp_args.append(f.argument)
            elif isinstance(f, Power):
                exponents.setdefault(f.base, []).append(f.exponent)
            else:
                exponents.setdefault(f, []).append(ONE)
        if coeff == 0:
            return ZERO
        out: list[Expr] = []
        nested = False
        for b, es in exponents.items():
            t = power(b, add(*es))
            if isinstance(t, (Const, Product)) or (isinstance(t, Apply) and t.function == "exp"):
                nested = True
            out.append(t)
        if exp_args:
            t = apply("exp", add(*exp_args))
            if isinstance(t, (Const, Product)):
                nested = True
            out.append(t)
        if nested:
            pending = [Const(coeff), *out]
            continue
        out = [t for t in out if t != ONE]
        sums = [t for t in out if isinstance(t, Sum)]
        if sums:
            # distribute over the first sum factor; recursion handles the rest
            first = min(sums, key=lambda t: t.sort_key)
            rest = [Const(coeff)] + [t for t in out if t is not first]
            return add(*(mul(*rest, t) for t in first.terms))
        if not out:
            return Const(coeff)
        if coeff == 1 and len(out) == 1:
            return out[0]
        body = _sorted(out)
        return Product(body if coeff == 1 else (Const(coeff), *body))


def _int_root(n: int, k: int) -> int | None:
    if n < 0:
        return None
    try:
        r = round(n ** (1.0 / k)) if n else 0
    except OverflowError:
        return None
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def _fold_const_power(base: Fraction, exponent: Fraction) -> Fraction | None:
    if exponent.denominator == 1:
        if base == 0 and exponent < 0:
            return None
        return base ** int(exponent)
    if base == 0:
        return Fraction(0) if exponent > 0 else None
    k = exponent.denominator
    sign = 1
    if base < 0:
        if k % 2 == 0:
            return None
        sign = -1 if exponent.numerator % 2 else 1
        base = -base
    num, den = _int_root(base.numerator, k), _int_root(base.denominator, k)
    if num is None or den is None:
        return None
    return sign * Fraction(num, den) ** exponent.numerator


def power(base: Expr, exponent: Expr) -> Expr:
    if isinstance(exponent, Const):
        if exponent.value == 0:
            return ONE
        if exponent.value == 1:
            return base
    if isinstance(base, Const):
        if base.value == 1:
            return ONE
        if isinstance(exponent, Const):
            folded = _fold_const_power(base.value, exponent.value)
            if folded is not None:
                return Const(folded)
    if isinstance(exponent, Const) and exponent.value.denominator == 1:
        n = exponent.value
        if isinstance(base, Power):
            return power(base.base, mul(base.exponent, exponent))
        if isinstance(base, Product):
            return mul(*(power(f, exponent) for f in base.factors))
        if isinstance(base, Apply) and base.function == "abs" and n % 2 == 0:
            return power(base.argument, exponent)
    if isinstance(base, Apply) and base.function == "exp":
        return apply("exp", mul(base.argument, exponent))
    return Power(base, exponent)


_CONST_FOLDS = {
    ("sin", 0): 0,
    ("tan", 0): 0,
    ("asin", 0): 0,
    ("atan", 0): 0,
    ("cos", 0): 1,
    ("exp", 0): 1,
    ("ln", 1): 0,
    ("acos", 1): 0,
}


def apply(function: str, argument: Expr) -> Expr:
    function = ALIASES.get(function, function)
    if function not in FUNCTIONS:
        raise UnknownFunction(f"unknown function {function!r}")
    if function == "sqrt":
        return power(argument, HALF)
    if isinstance(argument, Const):
        folded = _CONST_FOLDS.get((function, argument.value))
        if folded is not None:
            return Const(folded)
        if function == "abs":
            return Const(abs(argument.value))
    if function == "abs":
        if isinstance(argument, Product) and isinstance(argument.factors[0], Const):
            c, rest = split_coefficient(argument)
            return mul(Const(abs(c)), apply("abs", rest))
        if isinstance(argument, Apply) and argument.function in ("abs", "exp"):
            return argument
        if (
            isinstance(argument, Power)
            and isinstance(argument.exponent, Const)
            and argument.exponent.value.denominator == 1
            and argument.exponent.value % 2 == 0
        ):
            return argument
    return Apply(function, argument)


E = Apply("exp", ONE)
PI = Apply("acos", MINUS_ONE)


def canonicalize(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the smart constructors."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Sum):
        return add(*(canonicalize(t) for t in e.terms))
    if isinstance(e, Product):
        return mul(*(canonicalize(f) for f in e.factors))
    if isinstance(e, Power):
        return power(canonicalize(e.base), canonicalize(e.exponent))
    if isinstance(e, Apply):
        return apply(e.function, canonicalize(e.argument))
    raise TypeError(type(e).__name__)


# --------------------------------------------------------------------- printing


def _const_text(v: Fraction) -> tuple[str, int]:
    if v.denominator == 1:
        return str(v.numerator), (_ATOM if v >= 0 else _NEG)
    return f"{v.numerator}/{v.denominator}", (_PROD if v >= 0 else _NEG)


def _is_negative(t: Expr) -> bool:
    c, _ = split_coefficient(t)
    return c < 0


def _wrap(part: tuple[str, int], min_prec: int) -> str:
    text, prec = part
    return f"({text})" if prec < min_prec else text


def _is_reciprocal(f: Expr) -> bool:
    return (
        isinstance(f, Power)
        and isinstance(f.exponent, Const)
        and f.exponent.value < 0
        and f.base != ZERO
    )


def _format_product(coeff: Fraction, factors: Iterable[Expr]) -> tuple[str, int]:
    # Denominators are chained ("a/b/c") rather than grouped: reparsing a
    # grouped "(b*c)" would distribute it when either factor is a sum.
    numer: list[str] = []
    denom: list[str] = []
    if abs(coeff.numerator) != 1:
        numer.append(str(abs(coeff.numerator)))
    if coeff.denominator != 1:
        denom.append(str(coeff.denominator))
    for f in factors:
        if _is_reciprocal(f):
            denom.append(_wrap(_format(power(f.base, Const(-f.exponent.value))), _POW))
        else:
            numer.append(_wrap(_format(f), _POW))
    text = "*".join(numer) if numer else "1"
    for d in denom:
        text += "/" + d
    if coeff < 0:
        return "-" + text, _NEG
    return text, _PROD


def _format(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return e.name, _ATOM
    if isinstance(e, Apply):
        if e == E:
            return "e", _ATOM
        if e == PI:
            return "pi", _ATOM
        return f"{e.function}({e.argument.text})", _ATOM
    if isinstance(e, Power):
        if _is_reciprocal(e):
            return _format_product(Fraction(1), (e,))
        base = _format(e.base)
        base_text = base[0] if base[1] == _ATOM else f"({base[0]})"
        return f"{base_text}^{_wrap(_format(e.exponent), _POW)}", _POW
    if isinstance(e, Product):
        coeff, _ = split_coefficient(e)
        body = e.factors[1:] if isinstance(e.factors[0], Const) else e.factors
        return _format_product(coeff, body)
    if isinstance(e, Sum):
        ordered = [t for t in e.terms if not isinstance(t, Const)]
        ordered += [t for t in e.terms if isinstance(t, Const)]
        parts = [_format(ordered[0])[0]]
        for t in ordered[1:]:
            if _is_negative(t):
                parts.append(" - " + _wrap(_format(mul(MINUS_ONE, t)), _NEG))
            else:
                parts.append(" + " + _wrap(_format(t), _NEG))
        return "".join(parts), _SUM
    raise TypeError(type(e).__name__)


def to_text(e: Expr) -> str:
    """Canonical ASCII rendering; ``parse(to_text(e)) == e`` for canonical ``e``."""
    return e.text


# ---------------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\*\*|[-+*/^()|]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
            kind = m.lastgroup
            value = m.group(kind)
            start = m.start(kind)
            if value == "**":
                value = "^"
            self.tokens.append((kind, value, start))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def at(self, *values: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "op" and tok[1] in values

    def error(self, expected: tuple[str, ...]) -> ExprSyntaxError:
        tok = self.peek()
        if tok is None:
            return ExprSyntaxError("unexpected end of input", len(self.text), expected)
        return ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2], expected)

    def expect(self, value: str) -> None:
        if not self.at(value):
            raise self.error((repr(value),))
        self.i += 1

    def expr(self) -> Expr:
        left = self.term()
        while self.at("+", "-"):
            op = self.tokens[self.i][1]
            self.i += 1
            right = self.term()
            left = add(left, right if op == "+" else mul(MINUS_ONE, right))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.at("*", "/"):
            op = self.tokens[self.i][1]
            self.i += 1
            right = self.unary()
            left = mul(left, right if op == "*" else power(right, MINUS_ONE))
        return left

    def unary(self) -> Expr:
        if self.at("-"):
            self.i += 1
            return mul(MINUS_ONE, self.unary())
        if self.at("+"):
            self.i += 1
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            self.i += 1
            return power(base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.peek()
        expected = ("number", "identifier", "'('", "'|'")
        if tok is None:
            raise self.error(expected)
        kind, value, start = tok
        if kind == "num":
            self.i += 1
            return Const(Fraction(value))
        if kind == "ident":
            self.i += 1
            if self.at("("):
                name = ALIASES.get(value, value)
                if name not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {value!r}", start)
                self.i += 1
                arg = self.expr()
                self.expect(")")
                return apply(name, arg)
            if value == "pi":
                return PI
            if value == "e":
                return E
            if value in FUNCTIONS or value in ALIASES:
                raise self.error(("'('",))
            return Var(value)
        if value == "(":
            self.i += 1
            inner = self.expr()
            self.expect(")")
            return inner
        if value == "|":
            self.i += 1
            inner = self.expr()
            self.expect("|")
            return apply("abs", inner)
        raise self.error(expected)


def parse(text: str) -> Expr:
    """Parse ASCII expression text into canonical form.

    Raises :class:`EmptyInput` for blank text, :class:`UnknownFunction` for
    unrecognised ``name(...)`` calls and :class:`ExprSyntaxError` otherwise.
    """
    if not text or not text.strip():
        raise EmptyInput("empty expression", 0, ("expression",))
    p = _Parser(text)
    result = p.expr()
    if p.peek() is not None:
        raise p.error(("operator", "end of input"))
    return result


# -------------------------------------------------------------------- evaluation


def _finite(x: float) -> float:
    if not math.isfinite(x):
        raise DomainFailure("non-finite intermediate")
    return x


def _real_power(b: float, exponent: Expr, e: float) -> float:
    if b == 0 and e < 0:
        raise DomainFailure("division by zero")
    if b < 0 and not float(e).is_integer():
        # odd roots of negative numbers stay real
        if isinstance(exponent, Const) and exponent.value.denominator % 2 == 1:
            mag = abs(b) ** e
            return -mag if exponent.value.numerator % 2 else mag
        raise DomainFailure("negative base with fractional exponent")
    try:
        return math.pow(b, e)
    except (OverflowError, ValueError, ZeroDivisionError) as exc:
        raise DomainFailure(str(exc)) from exc


def _apply_float(fn: str, u: float) -> float:
    try:
        if fn == "ln":
            if u <= 0:
                raise DomainFailure("ln of non-positive")
            return math.log(u)
        if fn == "sqrt":
            if u < 0:
                raise DomainFailure("sqrt of negative")
            return math.sqrt(u)
        if fn in ("asin", "acos") and not -1 <= u <= 1:
            raise DomainFailure(f"{fn} outside [-1, 1]")
        return {
            "sin": math.sin,
            "cos": math.cos,
            "tan": math.tan,
            "exp": math.exp,
            "abs": abs,
            "atan": math.atan,
            "asin": math.asin,
            "acos": math.acos,
        }[fn](u)
    except (OverflowError, ValueError) as exc:
        raise DomainFailure(str(exc)) from exc


def _eval(e: Expr, env: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Sum):
        try:
            return _finite(math.fsum(_eval(t, env) for t in e.terms))
        except (OverflowError, ValueError) as exc:
            raise DomainFailure(str(exc)) from exc
    if isinstance(e, Product):
        acc = 1.0
        for f in e.factors:
            acc *= _eval(f, env)
        return _finite(acc)
    if isinstance(e, Power):
        return _finite(_real_power(_eval(e.base, env), e.exponent, _eval(e.exponent, env)))
    if isinstance(e, Apply):
        return _finite(_apply_float(e.function, _eval(e.argument, env)))
    raise TypeError(type(e).__name__)


def eval_at(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate in IEEE doubles; raises :class:`DomainFailure` off the real domain."""
    return _eval(e, bindings)


def complexity(e: Expr) -> int:
    """Node count of the canonical tree."""
    return e.size


def free_vars(e: Expr) -> frozenset[str]:
    return e.variables


def substitute(e: Expr, name: str, replacement: Expr) -> Expr:
    """Replace every ``Var(name)`` in ``e`` and re-canonicalize."""
    if isinstance(e, Var):
        return replacement if e.name == name else e
    if isinstance(e, Const) or name not in e.variables:
        return e
    if isinstance(e, Sum):
        return add(*(substitute(t, name, replacement) for t in e.terms))
    if isinstance(e, Product):
        return mul(*(substitute(f, name, replacement) for f in e.factors))
    if isinstance(e, Power):
        return power(substitute(e.base, name, replacement), substitute(e.exponent, name, replacement))
    if isinstance(e, Apply):
        return apply(e.function, substitute(e.argument, name, replacement))
    raise TypeError(type(e).__name__)


def walk(e: Expr) -> Iterable[Expr]:
    """Pre-order traversal."""
    yield e
    for c in e.children():
        yield from walk(c)
