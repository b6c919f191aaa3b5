"""Regenerate the frozen test fixtures.

    python tests/fixtures/make_fixtures.py

* integral_corpus.jsonl: valid (integrand, antiderivative) pairs. The
  antiderivative is assembled from elementary building blocks and the
  integrand is obtained by sympy differentiation, independently of hardgen.
* binning.json: per-sample solver outcomes for the consensus-style and
  verifier-gated binning fixtures.
* funnel_candidates.jsonl: 1,000 candidate pool records from a seeded mock
  general-math run; the funnel tests replay it through build_pool.
"""

from __future__ import annotations

import json
import random
import shutil
import sys
import tempfile
from pathlib import Path

import sympy as sp

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from oracle import X, sympy_to_text  # noqa: E402


def _atoms(rng: random.Random):
    a = rng.randint(1, 3)
    return [
        X, X**2, X**3,
        sp.sin(a * X), sp.cos(a * X), sp.exp(a * X),
        sp.log(X**2 + a), sp.atan(a * X), sp.sqrt(X**2 + a),
        sp.exp(sp.sin(X)), sp.sin(X**2), sp.log(X), sp.sqrt(X),
        sp.asin(X / (X**2 + 1)), 1 / (X**2 + a), 1 / X, sp.tan(X),
    ]


def integral_corpus(count: int = 120, seed: int = 1234) -> list[dict]:
    rng = random.Random(seed)
    coeffs = [sp.Integer(1), sp.Integer(-1), sp.Integer(2), sp.Integer(3), sp.Rational(1, 2), sp.Rational(-3, 2)]
    out, seen = [], set()
    while len(out) < count:
        terms = []
        for _ in range(rng.randint(1, 3)):
            atoms = _atoms(rng)
            prod = sp.Integer(1)
            for _ in range(rng.randint(1, 2)):
                prod *= rng.choice(atoms)
            terms.append(rng.choice(coeffs) * prod)
        F = sp.Add(*terms)
        if not F.has(X):
            continue
        f = sp.diff(F, X)
        f_text, F_text = sympy_to_text(f), sympy_to_text(F)
        if f == 0 or f_text in seen:
            continue
        seen.add(f_text)
        out.append({"id": f"fx-{len(out):03d}", "integrand": f_text, "antiderivative": F_text})
    return out


def binning_fixture(seed: int = 99) -> dict:
    """Outcome vectors (10 samples each) for the two construction styles.

    consensus: items are kept only if at least one sample agrees with the
    majority answer, so every retained item has a correct sample.
    gated: items are kept when the verifier accepts them; a block of valid
    items that no sample solves is injected.
    """
    rng = random.Random(seed)

    def outcomes(p: float) -> list[int]:
        return [int(rng.random() < p) for _ in range(10)]

    consensus = []
    while len(consensus) < 50:
        o = outcomes(rng.random())
        if sum(o) >= 1:
            consensus.append({"outcomes": o, "valid": True})
    gated = [{"outcomes": outcomes(rng.random()), "valid": rng.random() < 0.7} for _ in range(40)]
    gated += [{"outcomes": [0] * 10, "valid": True} for _ in range(10)]
    return {"consensus": consensus, "gated": gated}


def funnel_candidates(dest: Path) -> None:
    from hardgen.agents import BackendConfig, BackendKind
    from hardgen.config import RunConfig
    from hardgen.pairs import TaskKind
    from hardgen.pipeline import run

    with tempfile.TemporaryDirectory() as tmp:
        cfg = RunConfig(
            task_kind=TaskKind.GENERAL_MATH,
            rounds=2,
            per_round=500,
            seed=5,
            output_dir=tmp,
            setter=BackendConfig(BackendKind.MOCK_SETTER, options={"mode": "mixed", "rho": 0.4}),
            solver=BackendConfig(BackendKind.MOCK_SOLVER, options={"skill": 0.8, "hardness_scale": 25.0}),
        )
        run(cfg)
        shutil.copyfile(Path(tmp) / "pools" / "candidates.jsonl", dest)


def main() -> None:
    with open(HERE / "integral_corpus.jsonl", "w", encoding="utf-8") as fh:
        for row in integral_corpus():
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    (HERE / "binning.json").write_text(json.dumps(binning_fixture(), indent=1) + "\n", encoding="utf-8")
    funnel_candidates(HERE / "funnel_candidates.jsonl")


if __name__ == "__main__":
    main()
