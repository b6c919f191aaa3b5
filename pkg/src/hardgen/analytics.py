"""Hardness-validity bins, setter trajectories and novelty diagnostics.

Counts and rates are computed exactly (``Fraction``) and converted to floats
only when reports are written.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Sequence

from hardgen.pairs import ProblemPair, TaskKind
from hardgen.store import write_text_atomic

if TYPE_CHECKING:
    from hardgen.config import RunConfig
    from hardgen.pipeline import PoolRecord

REPORT_SCHEMA_VERSION = 1


def _f(x: Fraction | None) -> float | None:
    return None if x is None else float(x)


@dataclass(frozen=True)
class Scored:
    """The two facts the hardness analyses need about a candidate."""

    acc: Fraction
    valid: bool
    step: int = 0


def _as_scored(items: Iterable[Any]) -> list[Scored]:
    out = []
    for it in items:
        if isinstance(it, Scored):
            out.append(it)
        elif isinstance(it, tuple):
            out.append(Scored(Fraction(it[0]), bool(it[1]), *(it[2:3])))
        elif getattr(it, "difficulty", None) is not None:
            out.append(Scored(it.difficulty.acc, it.verdict.accepted, it.round))
    return out


# --------------------------------------------------------------------- bins


@dataclass(frozen=True)
class BinRow:
    lo: Fraction
    hi: Fraction
    closed: bool
    candidate_count: int
    candidate_share: Fraction
    valid_count: int
    valid_fraction: Fraction | None

    @property
    def label(self) -> str:
        return f"[{float(self.lo):.2f}, {float(self.hi):.2f}{']' if self.closed else ')'}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "bin": self.label,
            "lo": float(self.lo),
            "hi": float(self.hi),
            "candidate_count": self.candidate_count,
            "candidate_share": float(self.candidate_share),
            "valid_count": self.valid_count,
            "valid_fraction": _f(self.valid_fraction),
        }


def bin_hardness_validity(records: Iterable[Any], width: float | Fraction = Fraction(1, 10)) -> list[BinRow]:
    """Bin candidates by local pass rate; the last bin is closed so acc = 1 fits.

    ``records`` may be :class:`Scored` values, ``(acc, valid)`` tuples or pool
    records (those without a difficulty estimate are ignored).
    """
    w = Fraction(str(width)) if isinstance(width, float) else Fraction(width)
    n = 1 / w
    if w <= 0 or n.denominator != 1:
        raise ValueError(f"bin width {width} must divide 1 evenly")
    n = int(n)
    items = _as_scored(records)
    counts = [0] * n
    valid = [0] * n
    for s in items:
        if not 0 <= s.acc <= 1:
            raise ValueError(f"acc {s.acc} outside [0, 1]")
        i = min(int(s.acc / w), n - 1)
        counts[i] += 1
        valid[i] += s.valid
    total = len(items)
    return [
        BinRow(
            lo=i * w,
            hi=(i + 1) * w,
            closed=i == n - 1,
            candidate_count=counts[i],
            candidate_share=Fraction(counts[i], total) if total else Fraction(0),
            valid_count=valid[i],
            valid_fraction=Fraction(valid[i], counts[i]) if counts[i] else None,
        )
        for i in range(n)
    ]


# --------------------------------------------------------------- trajectory


@dataclass(frozen=True)
class Snapshot:
    step: int
    # (valid, acc) per candidate; acc may be None for rejected candidates
    items: tuple[tuple[bool, Fraction | None], ...]


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    candidates: int
    reference_valid_rate: Fraction
    pass_rate_among_valid: Fraction | None
    valid_and_hard_fraction: Fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "step": self.step,
            "candidates": self.candidates,
            "reference_valid_rate": float(self.reference_valid_rate),
            "pass_rate_among_valid": _f(self.pass_rate_among_valid),
            "valid_and_hard_fraction": float(self.valid_and_hard_fraction),
        }


def trajectory_stats(snapshots: Iterable[Snapshot], hard_threshold: float | Fraction = Fraction(3, 10)) -> list[TrajectoryPoint]:
    hard = Fraction(str(hard_threshold)) if isinstance(hard_threshold, float) else Fraction(hard_threshold)
    out = []
    for snap in sorted(snapshots, key=lambda s: s.step):
        n = len(snap.items)
        valid_accs = [acc for ok, acc in snap.items if ok and acc is not None]
        n_valid = sum(1 for ok, _ in snap.items if ok)
        n_hard = sum(1 for a in valid_accs if a <= hard)
        out.append(
            TrajectoryPoint(
                step=snap.step,
                candidates=n,
                reference_valid_rate=Fraction(n_valid, n) if n else Fraction(0),
                pass_rate_among_valid=sum(valid_accs, Fraction(0)) / len(valid_accs) if valid_accs else None,
                valid_and_hard_fraction=Fraction(n_hard, n) if n else Fraction(0),
            )
        )
    return out


def window_summaries(points: Sequence[TrajectoryPoint], window: int = 25) -> list[dict[str, Any]]:
    """Candidate-weighted means of each trajectory metric over fixed step windows."""
    groups: dict[int, list[TrajectoryPoint]] = defaultdict(list)
    for p in points:
        groups[p.step // window].append(p)
    rows = []
    for g in sorted(groups):
        pts = groups[g]
        n = sum(p.candidates for p in pts)
        valid_n = sum(p.reference_valid_rate * p.candidates for p in pts)
        pass_num = sum(
            (p.pass_rate_among_valid * p.reference_valid_rate * p.candidates)
            for p in pts
            if p.pass_rate_among_valid is not None
        )
        rows.append(
            {
                "window_start": g * window,
                "window_end": (g + 1) * window - 1,
                "candidates": n,
                "reference_valid_rate": float(valid_n / n) if n else 0.0,
                "pass_rate_among_valid": float(pass_num / valid_n) if valid_n else None,
                "valid_and_hard_fraction": float(sum(p.valid_and_hard_fraction * p.candidates for p in pts) / n) if n else 0.0,
            }
        )
    return rows


def snapshots_from_records(records: Iterable[PoolRecord]) -> list[Snapshot]:
    by_round: dict[int, list[tuple[bool, Fraction | None]]] = defaultdict(list)
    for r in records:
        if not r.parsed:
            continue
        by_round[r.round].append((r.verdict.accepted, r.acc))
    return [Snapshot(k, tuple(v)) for k, v in sorted(by_round.items())]


# ------------------------------------------------------------------ novelty


def _reference_text(pair: ProblemPair) -> str:
    if pair.task_kind is TaskKind.INTEGRAL and pair.antiderivative is not None:
        return pair.antiderivative.text
    return " ".join(pair.reference_solution.split())


@dataclass(frozen=True)
class NoveltyReport:
    parsed: int
    seed_copies: int
    reused_keys: int
    distinct_keys: int
    matched: int
    new_matched: int
    weighted_pass_at_1: Fraction | None
    hardest_step_pass_at_1: Fraction | None
    hardest_step: int | None

    @property
    def seed_copy_rate(self) -> Fraction:
        return Fraction(self.seed_copies, self.parsed) if self.parsed else Fraction(0)

    @property
    def cross_seed_reuse_rate(self) -> Fraction:
        return Fraction(self.reused_keys, self.distinct_keys) if self.distinct_keys else Fraction(0)

    @property
    def matched_rate(self) -> Fraction:
        return Fraction(self.matched, self.parsed) if self.parsed else Fraction(0)

    @property
    def novel_per_matched(self) -> Fraction:
        return Fraction(self.new_matched, self.matched) if self.matched else Fraction(0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "parsed": self.parsed,
            "seed_copy": self.seed_copies,
            "seed_copy_rate": float(self.seed_copy_rate),
            "cross_seed_reuse": self.reused_keys,
            "cross_seed_reuse_rate": float(self.cross_seed_reuse_rate),
            "new_matched": self.new_matched,
            "matched": self.matched,
            "matched_rate": float(self.matched_rate),
            "novel_per_matched": float(self.novel_per_matched),
            "weighted_pass_at_1": _f(self.weighted_pass_at_1),
            "hardest_step_pass_at_1": _f(self.hardest_step_pass_at_1),
            "hardest_step": self.hardest_step,
        }


def novelty_report(records: Iterable[PoolRecord], seeds: Iterable[ProblemPair]) -> NoveltyReport:
    """Copying, reuse and novelty of generated problems relative to their seeds.

    * seed copy: the generated reference prints identically to its seed's;
    * cross-seed reuse: a generated problem key that occurs under two or more
      distinct seeds, as a share of distinct keys;
    * new matched: verifier-accepted problems whose key is neither a seed's key
      nor seen earlier in the stream;
    * pass@1 per step over the new matched problems; the hardest step has the
      lowest mean.
    """
    from hardgen.pipeline import exact_key

    seeds = list(seeds)
    seed_ref = {s.id: _reference_text(s) for s in seeds}
    seen = {exact_key(s) for s in seeds}
    parsed = copies = matched = new_matched = 0
    seeds_per_key: dict[str, set[str]] = defaultdict(set)
    per_step: dict[int, list[Fraction]] = defaultdict(list)
    for r in sorted(records, key=lambda r: (r.round, r.index)):
        if not r.parsed:
            continue
        parsed += 1
        if seed_ref.get(r.pair.seed_id) == _reference_text(r.pair):
            copies += 1
        key = r.exact_key
        seeds_per_key[key].add(r.pair.seed_id)
        if r.verdict.accepted:
            matched += 1
            if key not in seen:
                new_matched += 1
                if r.acc is not None:
                    per_step[r.round].append(r.acc)
        seen.add(key)
    step_means = {k: sum(v, Fraction(0)) / len(v) for k, v in per_step.items() if v}
    all_accs = [a for v in per_step.values() for a in v]
    hardest = min(step_means, key=lambda k: (step_means[k], k)) if step_means else None
    return NoveltyReport(
        parsed=parsed,
        seed_copies=copies,
        reused_keys=sum(1 for s in seeds_per_key.values() if len(s) >= 2),
        distinct_keys=len(seeds_per_key),
        matched=matched,
        new_matched=new_matched,
        weighted_pass_at_1=sum(all_accs, Fraction(0)) / len(all_accs) if all_accs else None,
        hardest_step_pass_at_1=None if hardest is None else step_means[hardest],
        hardest_step=hardest,
    )


# ------------------------------------------------------------------ reports

BIN_COLUMNS = ("bin", "lo", "hi", "candidate_count", "candidate_share", "valid_count", "valid_fraction")
TRAJECTORY_COLUMNS = ("step", "candidates", "reference_valid_rate", "pass_rate_among_valid", "valid_and_hard_fraction")
FUNNEL_COLUMNS = ("stage", "input", "output", "skipped")


def collect(
    records: Sequence[PoolRecord],
    seeds: Sequence[ProblemPair],
    funnel: Mapping[str, Any] | None,
    config: RunConfig,
) -> dict[str, Any]:
    """Compute every report for a run."""
    points = trajectory_stats(snapshots_from_records(records), config.hard_threshold)
    return {
        "bins": [b.to_dict() for b in bin_hardness_validity(records, config.bin_width)],
        "trajectory": [p.to_dict() for p in points],
        "windows": window_summaries(points, config.window),
        "novelty": novelty_report(records, seeds).to_dict(),
        "funnel": funnel or {"stages": []},
    }


def _csv(columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if row.get(c) is None else _cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(round(v, 12)) if math.isfinite(v) else ""
    return str(v)


def emit_reports(out_dir: str | Path, metrics: Mapping[str, Any]) -> list[Path]:
    """Write ``summary.json`` plus plot-ready CSV files; returns the paths written."""
    out = Path(out_dir)
    summary = {"schema_version": REPORT_SCHEMA_VERSION}
    for key in ("bins", "trajectory", "windows", "novelty", "funnel"):
        summary[key] = metrics.get(key, [] if key != "novelty" else {})
    files = {
        "summary.json": json.dumps(summary, sort_keys=True, indent=2) + "\n",
        "bins.csv": _csv(BIN_COLUMNS, summary["bins"]),
        "trajectory.csv": _csv(TRAJECTORY_COLUMNS, summary["trajectory"]),
        "funnel.csv": _csv(FUNNEL_COLUMNS, (summary["funnel"] or {}).get("stages", [])),
    }
    paths = []
    for name, text in files.items():
        p = out / name
        write_text_atomic(p, text)
        paths.append(p)
    return paths
