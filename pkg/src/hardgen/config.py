"""Run configuration: TOML file plus ``key=value`` overrides."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from hardgen.agents import BackendConfig, BackendKind
from hardgen.calculus import ProbeConfig
from hardgen.errors import ConfigError
from hardgen.pairs import TaskKind
from hardgen.verify import FilterConfig


def _default_setter() -> BackendConfig:
    return BackendConfig(BackendKind.MOCK_SETTER, options={"mode": "perturb"})


def _default_solver() -> BackendConfig:
    return BackendConfig(BackendKind.MOCK_SOLVER, options={"skill": 0.6, "hardness_scale": 40.0})


def _default_judge() -> BackendConfig:
    return BackendConfig(BackendKind.MOCK_JUDGE)


@dataclass(frozen=True)
class RunConfig:
    task_kind: TaskKind = TaskKind.INTEGRAL
    # a path, or "builtin" for the seed pool shipped with the package
    seed_pool: str = "builtin"
    rounds: int = 1
    per_round: int = 10
    # solver rollouts per accepted pair for training records / re-measurement
    rollouts: int = 8
    # construction-time difficulty samples per accepted pair
    difficulty_samples: int = 10
    pass_band: tuple[float, float] = (0.1, 0.9)
    challenge_threshold: float = 0.0
    challenge_size: int = 1000
    bin_width: float = 0.1
    hard_threshold: float = 0.3
    window: int = 25
    seed: int = 0
    workers: int = 4
    verifier_enabled: bool = True
    trainer_hook: str | None = None
    run_id: str = "run"
    output_dir: str = "runs/default"
    setter: BackendConfig = field(default_factory=_default_setter)
    solver: BackendConfig = field(default_factory=_default_solver)
    judge: BackendConfig = field(default_factory=_default_judge)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    filters: FilterConfig = field(default_factory=FilterConfig)

    def __post_init__(self):
        object.__setattr__(self, "task_kind", TaskKind(self.task_kind))
        lo, hi = self.pass_band
        if not 0 <= lo < hi <= 1:
            raise ConfigError(f"pass band needs 0 <= lo < hi <= 1, got [{lo}, {hi}]")
        for name in ("rounds", "per_round", "rollouts", "difficulty_samples", "workers", "challenge_size", "window"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        width = Fraction(str(self.bin_width))
        if width <= 0 or width > 1 or (1 / width).denominator != 1:
            raise ConfigError(f"bin width {self.bin_width} must divide 1 evenly")
        if not 0 <= self.challenge_threshold <= 1 or not 0 <= self.hard_threshold <= 1:
            raise ConfigError("thresholds must lie in [0, 1]")

    @property
    def band(self) -> tuple[Fraction, Fraction]:
        return Fraction(str(self.pass_band[0])), Fraction(str(self.pass_band[1]))

    def to_dict(self, include_output: bool = False) -> dict[str, Any]:
        d = {
            "task_kind": self.task_kind.value,
            "seed_pool": self.seed_pool,
            "rounds": self.rounds,
            "per_round": self.per_round,
            "rollouts": self.rollouts,
            "difficulty_samples": self.difficulty_samples,
            "pass_band": list(self.pass_band),
            "challenge_threshold": self.challenge_threshold,
            "challenge_size": self.challenge_size,
            "bin_width": self.bin_width,
            "hard_threshold": self.hard_threshold,
            "window": self.window,
            "seed": self.seed,
            "workers": self.workers,
            "verifier_enabled": self.verifier_enabled,
            "trainer_hook": self.trainer_hook,
            "run_id": self.run_id,
            "setter": self.setter.to_dict(),
            "solver": self.solver.to_dict(),
            "judge": self.judge.to_dict(),
            "probe": self.probe.to_dict(),
            "filters": {"min_problem_chars": self.filters.min_problem_chars, "max_problem_chars": self.filters.max_problem_chars},
        }
        if include_output:
            d["output_dir"] = self.output_dir
        return d

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> RunConfig:
        d = dict(raw)
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        try:
            for role in ("setter", "solver", "judge"):
                if role in d:
                    d[role] = BackendConfig.from_dict(d[role])
            if "probe" in d:
                d["probe"] = ProbeConfig.from_dict(d["probe"])
            if "filters" in d:
                d["filters"] = FilterConfig(**d["filters"])
            if "pass_band" in d:
                d["pass_band"] = tuple(float(v) for v in d["pass_band"])
            return cls(**d)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc


def parse_override(item: str) -> tuple[list[str], Any]:
    """``a.b=value`` -> (["a", "b"], parsed value). Values use TOML syntax, else strings."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, _, text = item.partition("=")
    path = [p.strip() for p in key.split(".")]
    if not all(path):
        raise ConfigError(f"bad override key {key!r}")
    try:
        value = tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        value = text
    return path, value


def apply_overrides(raw: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for item in overrides:
        path, value = parse_override(item)
        node = out
        for p in path[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a non-table")
        node[path[-1]] = value
    return out


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> RunConfig:
    raw: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        try:
            raw = tomllib.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {p} not found") from None
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        # relative seed pool / output paths resolve against the config file
        for key in ("seed_pool", "output_dir"):
            if key in raw and raw[key] != "builtin" and not Path(raw[key]).is_absolute():
                raw[key] = str((p.parent / raw[key]).resolve())
    return RunConfig.from_mapping(apply_overrides(raw, overrides or []))
