"""Command-line entry points.

Structured results go to stdout as JSON; progress and diagnostics go to
stderr. Exit codes: 0 success, 1 rejected / empty selection, 2 usage or
configuration error, 3 backend failure, 4 store failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from hardgen.errors import BackendUnavailable, ConfigError, EmptySelection, ExprSyntaxError, StoreFailure

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_STORE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(obj: Any) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_config(args):
    from hardgen.config import load_config

    return load_config(getattr(args, "config", None), getattr(args, "set", None) or [])


def _read_pool(path: str):
    from hardgen.pipeline import PoolRecord
    from hardgen.store import read_jsonl

    p = Path(path)
    if not p.exists():
        raise ConfigError(f"pool file {p} not found")
    return [PoolRecord.from_dict(d) for d in read_jsonl(p)]


def _out_dir(args, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(args.pool).resolve().parent / default_name


def _guard_inputs(out: Path, *inputs: str) -> None:
    targets = {out.resolve()} | ({p.resolve() for p in out.iterdir()} if out.is_dir() else set())
    for i in inputs:
        if i and Path(i).resolve() in targets:
            raise ConfigError(f"refusing to overwrite input file {i}")


# ----------------------------------------------------------------- commands


def cmd_verify(args) -> int:
    from hardgen.calculus import ProbeConfig
    from hardgen.expr import parse
    from hardgen.verify import verify_integral_pair

    try:
        f = parse(args.integrand)
        F = parse(args.anti)
    except ExprSyntaxError as exc:
        _err(f"syntax error: {exc}")
        return EXIT_USAGE
    verdict = verify_integral_pair(f, F, args.var, ProbeConfig(seed=args.seed))
    _emit({"integrand": f.text, "antiderivative": F.text, "variable": args.var, **verdict.to_dict()})
    return EXIT_OK if verdict.accepted else EXIT_REJECTED


def cmd_run(args) -> int:
    from dataclasses import replace

    from hardgen.pipeline import run

    config = _load_config(args)
    if args.out:
        config = replace(config, output_dir=args.out)
    manifest = run(config, progress=_err)
    _emit({"manifest": str(manifest)})
    return EXIT_OK


def cmd_filter(args) -> int:
    from hardgen.pipeline import build_pool
    from hardgen.store import dumps, write_text_atomic

    config = _load_config(args)
    out = _out_dir(args, "filtered")
    _guard_inputs(out, args.pool)
    result = build_pool(_read_pool(args.pool), config)
    text = "".join(dumps({**r.to_dict(), "schema_version": 1}) + "\n" for r in result.pool)
    write_text_atomic(out / "accepted.jsonl", text)
    write_text_atomic(out / "funnel.json", json.dumps(result.report.to_dict(), sort_keys=True, indent=2) + "\n")
    _emit({"pool": str(out / "accepted.jsonl"), "records": len(result.pool), "funnel": result.report.to_dict()})
    return EXIT_OK


def cmd_challenge(args) -> int:
    from dataclasses import replace

    from hardgen.pipeline import select_challenge
    from hardgen.store import dumps, write_text_atomic

    config = _load_config(args)
    if args.threshold is not None:
        config = replace(config, challenge_threshold=args.threshold)
    out = _out_dir(args, "challenge")
    _guard_inputs(out, args.pool)
    try:
        chosen = select_challenge(_read_pool(args.pool), config, args.size)
    except EmptySelection as exc:
        _err(f"empty selection: {exc}")
        _emit({"challenge": None, "records": 0})
        return EXIT_REJECTED
    path = out / "challenge.jsonl"
    write_text_atomic(path, "".join(dumps({**r.to_dict(), "schema_version": 1}) + "\n" for r in chosen))
    _emit({"challenge": str(path), "records": len(chosen), "ids": [r.id for r in chosen]})
    return EXIT_OK


def cmd_report(args) -> int:
    from hardgen import analytics
    from hardgen.pairs import ProblemPair
    from hardgen.pipeline import build_pool, load_seed_pool
    from hardgen.store import read_jsonl

    config = _load_config(args)
    out = _out_dir(args, "reports")
    _guard_inputs(out, args.pool, args.seeds)
    records = _read_pool(args.pool)
    if args.seeds:
        seeds = [ProblemPair.from_dict(d) for d in read_jsonl(args.seeds)]
    else:
        seeds = load_seed_pool(config)
    funnel = build_pool(records, config).report.to_dict()
    paths = analytics.emit_reports(out, analytics.collect(records, seeds, funnel, config))
    _emit({"reports": [str(p) for p in paths], "records": len(records)})
    return EXIT_OK


def cmd_export_sft(args) -> int:
    from hardgen.pipeline import export_sft

    out = Path(args.out)
    _guard_inputs(out, args.pool)
    n = export_sft(_read_pool(args.pool), out)
    _emit({"sft": str(out), "records": n})
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hardgen", description="Verifier-gated generation of hard math problems.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="check that ANTI differentiates to INTEGRAND")
    v.add_argument("--var", default="x", help="integration variable (default x)")
    v.add_argument("--integrand", required=True)
    v.add_argument("--anti", required=True, help="candidate antiderivative")
    v.add_argument("--seed", type=int, default=0, help="probe seed")
    v.set_defaults(func=cmd_verify)

    def config_args(sp, required: bool = False):
        sp.add_argument("--config", required=required, help="TOML run configuration")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")

    r = sub.add_parser("run", help="execute generation rounds, curation and reporting")
    r.add_argument("config", help="TOML run configuration")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("filter", help="run the curation funnel over a candidate pool")
    f.add_argument("pool", help="candidate pool JSONL")
    f.add_argument("--out", help="output directory")
    config_args(f)
    f.set_defaults(func=cmd_filter)

    c = sub.add_parser("challenge", help="select the zero-pass challenge set")
    c.add_argument("pool", help="pool JSONL with difficulty estimates")
    c.add_argument("--out", help="output directory")
    c.add_argument("--threshold", type=float, help="maximum local pass rate")
    c.add_argument("--size", type=int, help="maximum number of records")
    config_args(c)
    c.set_defaults(func=cmd_challenge)

    rep = sub.add_parser("report", help="write analytics reports for a pool")
    rep.add_argument("pool", help="candidate pool JSONL")
    rep.add_argument("--seeds", help="seed pool JSONL (default: built-in pool)")
    rep.add_argument("--out", help="output directory")
    config_args(rep)
    rep.set_defaults(func=cmd_report)

    e = sub.add_parser("export-sft", help="export accepted pairs as chat-format SFT records")
    e.add_argument("pool", help="pool JSONL")
    e.add_argument("--out", required=True, help="output JSONL path")
    e.set_defaults(func=cmd_export_sft)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(f"configuration error: {exc}")
        return EXIT_USAGE
    except BackendUnavailable as exc:
        _err(f"backend failure: {exc}")
        return EXIT_BACKEND
    except StoreFailure as exc:
        _err(f"store failure: {exc}")
        return EXIT_STORE
    except ExprSyntaxError as exc:
        _err(f"syntax error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
