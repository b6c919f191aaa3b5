"""Append-only JSONL persistence for pools, training records and indexes.

Layout under the run directory::

    pools/candidates.jsonl   every generated candidate with verdict and difficulty
    pools/accepted.jsonl     the curated pool after build_pool
    pools/challenge.jsonl    the challenge selection
    records/setter.jsonl     setter training records
    records/solver.jsonl     solver training records
    index/dedup.jsonl        persisted dedup keys
    index/rounds.jsonl       round status transitions
    reports/*.json|csv       analytics
    manifest.json            file list with sha256 digests

A write that dies mid-line leaves a trailing fragment without a newline;
opening the store truncates it so every stream is a prefix of what was
logically written.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

from hardgen.errors import SchemaMismatch, StoreFailure


@dataclass(frozen=True)
class StreamSpec:
    path: str
    version: int
    required: tuple[str, ...]


POOL_FIELDS = ("pair", "verdict", "round", "index", "exact_key", "template_key", "setter_reward")

STREAMS: dict[str, StreamSpec] = {
    "candidates": StreamSpec("pools/candidates.jsonl", 1, POOL_FIELDS),
    "accepted": StreamSpec("pools/accepted.jsonl", 1, POOL_FIELDS + ("stage",)),
    "challenge": StreamSpec("pools/challenge.jsonl", 1, POOL_FIELDS + ("stage",)),
    "training_setter": StreamSpec("records/setter.jsonl", 1, ("role", "pair_id", "round", "reward", "prompt", "completion")),
    "training_solver": StreamSpec("records/solver.jsonl", 1, ("role", "pair_id", "round", "reward", "prompt", "completion")),
    "dedup": StreamSpec("index/dedup.jsonl", 1, ("kind", "key")),
    "rounds": StreamSpec("index/rounds.jsonl", 1, ("round", "status")),
}


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, no insignificant whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def recover_jsonl(path: Path) -> int:
    """Truncate a torn trailing line; return the number of complete lines."""
    if not path.exists():
        return 0
    with open(path, "rb+") as fh:
        data = fh.read()
        cut = data.rfind(b"\n") + 1
        if cut != len(data):
            fh.truncate(cut)
            fh.flush()
            os.fsync(fh.fileno())
    return data[:cut].count(b"\n")


def read_jsonl(path: str | os.PathLike) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.endswith("\n"):
                # incomplete final line: not committed
                return
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreFailure(f"{path}:{n}: corrupt record") from exc


def write_json_atomic(path: Path, obj: Any) -> None:
    write_text_atomic(path, json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n")


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise StoreFailure(f"cannot write {path}: {exc}") from exc


class KeyKind(str, enum.Enum):
    EXACT = "EXACT"
    TEMPLATE = "TEMPLATE"


class Store:
    """Single-writer handle on a run directory."""

    def __init__(self, root: str | os.PathLike, create: bool = True):
        self.root = Path(root)
        if create:
            try:
                self.root.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise StoreFailure(f"cannot create {self.root}: {exc}") from exc
        elif not self.root.is_dir():
            raise StoreFailure(f"run directory {self.root} does not exist")
        self._lock = threading.Lock()
        self._counts = {name: recover_jsonl(self.path(name)) for name in STREAMS}
        self._dedup: set[tuple[str, str]] = {
            (r["kind"], r["key"]) for r in self.read("dedup")
        }

    def path(self, stream: str) -> Path:
        try:
            return self.root / STREAMS[stream].path
        except KeyError:
            raise StoreFailure(f"unknown stream {stream!r}") from None

    def count(self, stream: str) -> int:
        return self._counts[stream]

    def _validate(self, stream: str, record: Mapping[str, Any]) -> dict[str, Any]:
        spec = STREAMS[stream]
        if not isinstance(record, Mapping):
            raise SchemaMismatch(f"{stream}: record is not an object")
        missing = [f for f in spec.required if f not in record]
        if missing:
            raise SchemaMismatch(f"{stream}: missing field(s) {', '.join(missing)}")
        version = record.get("schema_version", spec.version)
        if version != spec.version:
            raise SchemaMismatch(f"{stream}: schema_version {version!r}, expected {spec.version}")
        return {**record, "schema_version": spec.version}

    def append_records(self, stream: str, records: Iterable[Mapping[str, Any]]) -> int:
        """Append ``records`` in order; all are validated before anything is written."""
        path = self.path(stream)
        try:
            lines = [dumps(self._validate(stream, r)) + "\n" for r in records]
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SchemaMismatch):
                raise
            raise SchemaMismatch(f"{stream}: record is not JSON-serializable: {exc}") from exc
        if not lines:
            return 0
        with self._lock:
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "a", encoding="utf-8", newline="\n") as fh:
                    fh.write("".join(lines))
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StoreFailure(f"append to {path} failed: {exc}") from exc
            self._counts[stream] += len(lines)
        return len(lines)

    def read(self, stream: str) -> list[dict[str, Any]]:
        path = self.path(stream)
        return list(read_jsonl(path)) if path.exists() else []

    def dedup_check(self, kind: KeyKind | str, key: str) -> bool:
        """Return whether ``(kind, key)`` was seen before, registering it if not."""
        kind = KeyKind(kind).value
        with self._lock:
            if (kind, key) in self._dedup:
                return True
            self._dedup.add((kind, key))
        self.append_records("dedup", [{"kind": kind, "key": key}])
        return False

    def round_status(self) -> dict[int, str]:
        status: dict[int, str] = {}
        for r in self.read("rounds"):
            status[int(r["round"])] = r["status"]
        return status

    def set_round_status(self, round_index: int, status: str) -> None:
        order = ("PENDING", "RUNNING", "DONE")
        current = self.round_status().get(round_index, "PENDING")
        if order.index(status) < order.index(current):
            raise StoreFailure(f"round {round_index} cannot go from {current} to {status}")
        if status != current:
            self.append_records("rounds", [{"round": round_index, "status": status}])

    def file_entry(self, rel: str) -> dict[str, Any]:
        p = self.root / rel
        lines = None
        if p.suffix == ".jsonl":
            with open(p, "rb") as fh:
                lines = sum(1 for _ in fh)
        return {"path": rel, "sha256": sha256_file(p), "records": lines}

    def write_manifest(self, body: Mapping[str, Any], files: Iterable[str]) -> Path:
        """Write ``manifest.json`` listing ``files`` (relative paths) with digests."""
        entries = [self.file_entry(rel) for rel in sorted(set(files))]
        manifest = {**body, "files": entries}
        path = self.root / "manifest.json"
        write_json_atomic(path, manifest)
        return path


def verify_manifest(root: str | os.PathLike) -> list[str]:
    """Return the paths whose digest no longer matches the manifest."""
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    bad = []
    for entry in manifest["files"]:
        p = root / entry["path"]
        if not p.exists() or sha256_file(p) != entry["sha256"]:
            bad.append(entry["path"])
    return bad
