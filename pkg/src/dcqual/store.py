"""Append-only NDJSON corpus store.

Layout under the store root::

    records/<repo_id>.ndjson   one harvested record per line
    manifest.json              per-repository harvest summaries
    .lock                      advisory writer lock

Line schema (``schema`` = 1)::

    {"schema": 1, "repo_id": str, "identifier": str, "datestamp": str,
     "set_specs": [str], "harvested_at": str,
     "metadata": {"<dc element>": [str, ...], ...}}

Duplicates are resolved when the corpus is loaded, never on write.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

from filelock import FileLock, Timeout

from dcqual.errors import StoreError, StoreLocked
from dcqual.records import DublinCoreRecord, HarvestedRecord, RecordHeader

SCHEMA_VERSION = 1


def record_to_json(record: HarvestedRecord) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "repo_id": record.repo_id,
        "identifier": record.header.identifier,
        "datestamp": record.header.datestamp,
        "set_specs": list(record.header.set_specs),
        "harvested_at": record.harvested_at,
        "metadata": record.metadata.to_mapping(),
    }


def _str_list(value, what: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValueError(f"{what} must be a list of strings")
    return tuple(value)


def record_from_json(obj: dict) -> HarvestedRecord:
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    if obj.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema {obj.get('schema')!r}")
    for key in ("repo_id", "identifier", "datestamp", "harvested_at"):
        if not isinstance(obj.get(key), str):
            raise ValueError(f"{key} missing or not a string")
    if not obj["identifier"]:
        raise ValueError("empty identifier")
    metadata = obj.get("metadata")
    if not isinstance(metadata, dict):
        raise ValueError("metadata must be an object")
    return HarvestedRecord(
        repo_id=obj["repo_id"],
        header=RecordHeader(
            identifier=obj["identifier"],
            datestamp=obj["datestamp"],
            set_specs=_str_list(obj.get("set_specs", []), "set_specs"),
        ),
        metadata=DublinCoreRecord.from_mapping(
            {k: _str_list(v, f"metadata.{k}") for k, v in metadata.items()}
        ),
        harvested_at=obj["harvested_at"],
    )


def dedup_records(records: Iterable[HarvestedRecord]) -> list[HarvestedRecord]:
    """Keep one record per (repo_id, identifier).

    The later datestamp wins; ties go to the later ``harvested_at`` and then
    to whichever arrived last.
    """
    best: dict[tuple[str, str], HarvestedRecord] = {}
    for rec in records:
        current = best.get(rec.key)
        if current is None or (rec.header.datestamp, rec.harvested_at) >= (
            current.header.datestamp,
            current.harvested_at,
        ):
            best[rec.key] = rec
    return list(best.values())


@dataclass(frozen=True)
class CorruptLine:
    path: str
    line_no: int
    message: str


class Corpus:
    """Deduplicated records ordered by repo_id, then OAI identifier."""

    def __init__(
        self,
        records: Iterable[HarvestedRecord] = (),
        manifest: dict | None = None,
        corrupt: Iterable[CorruptLine] = (),
    ):
        self.records: tuple[HarvestedRecord, ...] = tuple(
            sorted(dedup_records(records), key=lambda r: r.key)
        )
        self.manifest = manifest or {}
        self.corrupt: tuple[CorruptLine, ...] = tuple(corrupt)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[HarvestedRecord]:
        return iter(self.records)

    def __bool__(self) -> bool:
        return bool(self.records)

    @cached_property
    def by_repo(self) -> dict[str, tuple[HarvestedRecord, ...]]:
        groups: dict[str, list[HarvestedRecord]] = {}
        for rec in self.records:
            groups.setdefault(rec.repo_id, []).append(rec)
        return {k: tuple(v) for k, v in groups.items()}

    @property
    def repo_ids(self) -> list[str]:
        return list(self.by_repo)


def _check_repo_id(repo_id: str) -> None:
    if not repo_id or repo_id in (".", "..") or "/" in repo_id or "\\" in repo_id or repo_id != repo_id.strip():
        raise StoreError(f"repo_id {repo_id!r} cannot be used as a file name")


class CorpusStore:
    """Single-writer handle on a store directory.

    Use as a context manager; the advisory lock is held until exit. One
    instance may be shared by several harvesting threads.
    """

    def __init__(self, root: str | os.PathLike, lock_timeout: float = 0):
        self.root = Path(root)
        self.lock_timeout = lock_timeout
        self._lock: FileLock | None = None
        self._mutex = threading.Lock()

    @property
    def records_dir(self) -> Path:
        return self.root / "records"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def open(self) -> "CorpusStore":
        try:
            self.records_dir.mkdir(parents=True, exist_ok=True)
            self._lock = FileLock(str(self.root / ".lock"), timeout=self.lock_timeout)
            self._lock.acquire()
        except Timeout as exc:
            raise StoreLocked(f"store {self.root} is locked by another writer") from exc
        except OSError as exc:
            raise StoreError(f"cannot open store {self.root}: {exc}") from exc
        return self

    def close(self) -> None:
        if self._lock is not None:
            self._lock.release()
            self._lock = None

    def __enter__(self) -> "CorpusStore":
        return self.open()

    def __exit__(self, *exc) -> None:
        self.close()

    def read_manifest(self) -> dict:
        return _read_manifest(self.root)

    def _write_manifest(self, manifest: dict) -> None:
        tmp = self.manifest_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
        os.replace(tmp, self.manifest_path)

    def _update_repo(self, repo_id: str, **changes) -> None:
        manifest = self.read_manifest()
        manifest.setdefault("schema", SCHEMA_VERSION)
        entry = manifest.setdefault("repositories", {}).setdefault(repo_id, {"records_appended": 0})
        appended = changes.pop("appended", 0)
        entry["records_appended"] = entry.get("records_appended", 0) + appended
        entry.update(changes)
        self._write_manifest(manifest)

    def append_page(self, repo_id: str, records: Iterable[HarvestedRecord]) -> int:
        if self._lock is None:
            raise StoreError("store is not open for writing")
        _check_repo_id(repo_id)
        records = list(records)
        for rec in records:
            if rec.repo_id != repo_id:
                raise ValueError(f"record for {rec.repo_id!r} appended to {repo_id!r}")
        payload = "".join(
            json.dumps(record_to_json(r), ensure_ascii=False, sort_keys=True) + "\n" for r in records
        )
        with self._mutex:
            try:
                with open(self.records_dir / f"{repo_id}.ndjson", "a", encoding="utf-8") as fh:
                    fh.write(payload)
                    fh.flush()
                    os.fsync(fh.fileno())
                self._update_repo(repo_id, appended=len(records))
            except OSError as exc:
                raise StoreError(f"cannot append to store {self.root}: {exc}") from exc
        return len(records)

    def record_harvest(self, repo_id: str, summary: dict, started: str, finished: str) -> None:
        with self._mutex:
            try:
                self._update_repo(
                    repo_id, summary=summary, harvest_started=started, harvest_finished=finished
                )
            except OSError as exc:
                raise StoreError(f"cannot update manifest in {self.root}: {exc}") from exc

    def writer(self, repo_id: str, batch_size: int = 500) -> "RepoWriter":
        return RepoWriter(self, repo_id, batch_size)


class RepoWriter:
    """Record sink that buffers and appends in pages."""

    def __init__(self, store: CorpusStore, repo_id: str, batch_size: int = 500):
        self.store = store
        self.repo_id = repo_id
        self.batch_size = batch_size
        self.written = 0
        self._buffer: list[HarvestedRecord] = []

    def __call__(self, record: HarvestedRecord) -> None:
        self._buffer.append(record)
        if len(self._buffer) >= self.batch_size:
            self.flush()

    def flush(self) -> None:
        if self._buffer:
            self.written += self.store.append_page(self.repo_id, self._buffer)
            self._buffer = []


def _read_manifest(root: Path) -> dict:
    path = root / "manifest.json"
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise StoreError(f"cannot read manifest {path}: {exc}") from exc


def append_page(store_path: str | os.PathLike, repo_id: str, records: Iterable[HarvestedRecord]) -> int:
    with CorpusStore(store_path) as store:
        return store.append_page(repo_id, records)


def load_corpus(store_path: str | os.PathLike) -> Corpus:
    """Load, validate and deduplicate every record in the store.

    Lines that do not parse are skipped and reported in ``Corpus.corrupt``
    with their 1-based line numbers.
    """
    root = Path(store_path)
    if not root.is_dir():
        raise StoreError(f"store {root} does not exist")
    manifest = _read_manifest(root)
    records: list[HarvestedRecord] = []
    corrupt: list[CorruptLine] = []
    records_dir = root / "records"
    files = sorted(records_dir.glob("*.ndjson")) if records_dir.is_dir() else []
    for path in files:
        try:
            fh = open(path, "rb")
        except OSError as exc:
            raise StoreError(f"cannot read {path}: {exc}") from exc
        with fh:
            for line_no, raw in enumerate(fh, 1):
                if not raw.strip():
                    continue
                try:
                    records.append(record_from_json(json.loads(raw.decode("utf-8"))))
                except (ValueError, TypeError) as exc:
                    corrupt.append(CorruptLine(str(path), line_no, str(exc)))
    return Corpus(records, manifest, corrupt)
