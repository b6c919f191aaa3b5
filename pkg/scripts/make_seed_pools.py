"""Regenerate the seed pools shipped in src/hardgen/data."""

from __future__ import annotations

from pathlib import Path

from hardgen import toymath
from hardgen.calculus import differentiate, simplify
from hardgen.expr import parse
from hardgen.pairs import ProblemPair, integral_pair
from hardgen.store import dumps

DATA = Path(__file__).resolve().parents[1] / "src" / "hardgen" / "data"

# antiderivatives; each integrand is derived by differentiation
INTEGRAL_SEEDS = [
    "sin(x)",
    "cos(x)",
    "exp(x)",
    "ln(abs(x))",
    "x^3",
    "atan(x)",
    "x - atan(x)",
    "exp(x) - 2*sqrt(x)",
    "-1/x",
    "sqrt(x)",
    "x*exp(x)",
    "ln(1 + x^2)",
    "x^2*sin(x)",
    "exp(-x^2)",
    "sin(x)*cos(x)",
    "1/(1 + x^2)",
    "x*ln(abs(x))",
    "atan(x^2)",
    "exp(x)*cos(x)",
    "x^(3/2)",
    "sin(x^2)",
    "ln(abs(x + 1/x))",
    "x/(x^2 + 4)",
    "exp(sin(x))",
]


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, text in enumerate(INTEGRAL_SEEDS):
        F = parse(text)
        f = simplify(differentiate(F, "x"))
        lines.append(dumps(integral_pair(f"int-{i:03d}", f, F).to_dict()))
    (DATA / "integral_seeds.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = []
    for i, p in enumerate(toymath.seed_problems(40, seed=2024)):
        pair = ProblemPair(
            id=f"gm-{i:03d}",
            task_kind="general_math",
            seed_id=f"gm-{i:03d}",
            problem_text=p.text,
            reference_solution=p.solution(),
            final_answer=str(p.answer),
        )
        lines.append(dumps(pair.to_dict()))
    (DATA / "general_math_seeds.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
