"""File-backed record store for routes, variations, models, and maps.

One directory per store: ``records/{id}.json`` holds each record
envelope, ``index.json`` lists ids with ordering metadata. Everything
is plain JSON, so a store can be backed up or inspected with standard
tools. Writes go through a temp-file-then-rename step and a process
lock: single writer, any number of readers, and readers never see a
half-written file.

Ids are content addresses: the first 12 hex digits of the SHA-256 of
the record's kind, owner, and payload, extended on the (unlikely)
collision with different content. Identical content raises DuplicateId
carrying the existing id, which callers may treat as idempotent
success.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import chaos, crdl, icmap, vomm

STORE_FORMAT = "betamix.store"
STORE_VERSION = 1
KINDS = ("route", "variation", "model", "icmap")

_ID_LENGTH = 12


class StoreError(Exception):
    pass


class NotFound(StoreError):
    def __init__(self, record_id: str):
        super().__init__(f"no record {record_id!r}")
        self.record_id = record_id


class ValidationFailed(StoreError):
    pass


class DuplicateId(StoreError):
    def __init__(self, record_id: str):
        super().__init__(f"identical record already stored as {record_id!r}")
        self.record_id = record_id


@dataclass(frozen=True)
class StoredRecord:
    id: str
    kind: str
    created_at: str
    owner: str | None
    payload: str | dict


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class Store:
    """A single store directory. Safe to share across threads."""

    def __init__(self, root, clock: Callable[[], str] = _utc_now):
        self.root = Path(root)
        self.records_dir = self.root / "records"
        self.index_path = self.root / "index.json"
        self.clock = clock
        self._lock = threading.Lock()
        self.records_dir.mkdir(parents=True, exist_ok=True)
        if self.index_path.exists():
            with open(self.index_path, encoding="utf-8") as fh:
                index = json.load(fh)
            if index.get("format") != STORE_FORMAT or index.get("version") != STORE_VERSION:
                raise StoreError(f"{self.index_path} is not a compatible store index")
            self._index: dict[str, dict] = index["records"]
            self._next_seq: int = index["next_seq"]
        else:
            self._index = {}
            self._next_seq = 0
            self._flush_index()

    # --- write side ---

    def put(self, kind: str, payload, owner: str | None = None) -> StoredRecord:
        """Validate, assign an id, and persist. Returns the stored record."""
        self._validate(kind, payload)
        with self._lock:
            record_id = self._assign_id(kind, owner, payload)
            record = StoredRecord(
                id=record_id,
                kind=kind,
                created_at=self.clock(),
                owner=owner,
                payload=payload,
            )
            envelope = {
                "format": "betamix.record",
                "version": 1,
                "id": record.id,
                "kind": record.kind,
                "created_at": record.created_at,
                "owner": record.owner,
                "payload": record.payload,
            }
            _write_atomic(self.records_dir / f"{record_id}.json", _canonical(envelope) + "\n")
            self._index[record_id] = {
                "kind": kind,
                "created_at": record.created_at,
                "owner": owner,
                "seq": self._next_seq,
            }
            self._next_seq += 1
            self._flush_index()
            return record

    def delete(self, record_id: str) -> bool:
        with self._lock:
            if record_id not in self._index:
                raise NotFound(record_id)
            if self._index[record_id]["kind"] == "route":
                for other_id, meta in self._index.items():
                    if meta["kind"] != "variation":
                        continue
                    plan = self._read_envelope(other_id)["payload"]
                    if record_id in plan.get("inputs", []):
                        raise ValidationFailed(
                            f"route {record_id!r} is an input of variation {other_id!r}"
                        )
            path = self.records_dir / f"{record_id}.json"
            del self._index[record_id]
            self._flush_index()
            try:
                os.unlink(path)
            except FileNotFoundError:
                pass
            return True

    # --- read side ---

    def get(self, record_id: str) -> StoredRecord:
        envelope = self._read_envelope(record_id)
        return StoredRecord(
            id=envelope["id"],
            kind=envelope["kind"],
            created_at=envelope["created_at"],
            owner=envelope["owner"],
            payload=envelope["payload"],
        )

    def list(
        self,
        kind: str | None = None,
        owner: str | None = None,
        grade: str | None = None,
    ) -> list[StoredRecord]:
        """Records sorted by created_at (insertion order breaks ties)."""
        if kind is not None and kind not in KINDS:
            raise ValidationFailed(f"unknown record kind {kind!r}")
        chosen = [
            record_id
            for record_id, meta in self._index.items()
            if (kind is None or meta["kind"] == kind)
            and (owner is None or meta["owner"] == owner)
        ]
        chosen.sort(key=lambda rid: (self._index[rid]["created_at"], self._index[rid]["seq"]))
        records = [self.get(record_id) for record_id in chosen]
        if grade is not None:
            records = [
                r
                for r in records
                if r.kind == "route" and crdl.parse_crdl(r.payload).grade == grade
            ]
        return records

    # --- internals ---

    def _flush_index(self) -> None:
        index = {
            "format": STORE_FORMAT,
            "version": STORE_VERSION,
            "next_seq": self._next_seq,
            "records": self._index,
        }
        _write_atomic(self.index_path, _canonical(index) + "\n")

    def _read_envelope(self, record_id: str) -> dict:
        path = self.records_dir / f"{record_id}.json"
        try:
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)
        except FileNotFoundError:
            raise NotFound(record_id) from None

    def _assign_id(self, kind: str, owner: str | None, payload) -> str:
        digest = hashlib.sha256(
            _canonical({"kind": kind, "owner": owner, "payload": payload}).encode()
        ).hexdigest()
        for length in range(_ID_LENGTH, len(digest) + 1):
            candidate = digest[:length]
            if candidate not in self._index:
                return candidate
            existing = self._read_envelope(candidate)
            if (
                existing["kind"] == kind
                and existing["owner"] == owner
                and existing["payload"] == payload
            ):
                raise DuplicateId(candidate)
        raise StoreError("id space exhausted")  # 64 hex chars deep; unreachable

    def _validate(self, kind: str, payload) -> None:
        if kind not in KINDS:
            raise ValidationFailed(f"unknown record kind {kind!r}")
        try:
            if kind == "route":
                if not isinstance(payload, str):
                    raise ValidationFailed("route payload must be CRDL text")
                crdl.parse_crdl(payload)
            elif kind == "variation":
                if not isinstance(payload, dict):
                    raise ValidationFailed("variation payload must be a plan document")
                plan = chaos.plan_from_dict(payload)
                for route_id in plan.inputs:
                    meta = self._index.get(route_id)
                    if meta is None or meta["kind"] != "route":
                        raise ValidationFailed(f"variation references unknown route {route_id!r}")
            elif kind == "model":
                if not isinstance(payload, dict):
                    raise ValidationFailed("model payload must be a model document")
                vomm.model_from_dict(payload)
            elif kind == "icmap":
                if not isinstance(payload, dict):
                    raise ValidationFailed("icmap payload must be a map document")
                icmap.map_from_dict(payload)
        except ValidationFailed:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ValidationFailed(str(exc)) from exc
