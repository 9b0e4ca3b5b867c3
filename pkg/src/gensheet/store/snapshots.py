"""Immutable workbook snapshots in a directory.

Layout: ``snapshots/<seq>-<label>.gws``. Sequence numbers are strictly
increasing; snapshot files are written once and never rewritten.
"""

from __future__ import annotations

import os
import re
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from ..engine.workbook import Workbook
from .fileformat import load_workbook, save_workbook


class SnapshotNotFound(KeyError):
    pass


_LABEL_SAFE = re.compile(r"[^A-Za-z0-9_-]+")
_FILE_RE = re.compile(r"(\d+)-(.*)\.gws$")


@dataclass(frozen=True, slots=True)
class Snapshot:
    sequence: int
    timestamp: float
    label: str
    path: Path


class SnapshotStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _entries(self) -> list[Snapshot]:
        found = []
        for path in self.directory.glob("*.gws"):
            m = _FILE_RE.fullmatch(path.name)
            if m is None:
                continue
            found.append(
                Snapshot(
                    sequence=int(m.group(1)),
                    timestamp=path.stat().st_mtime,
                    label=m.group(2),
                    path=path,
                )
            )
        return sorted(found, key=lambda s: s.sequence)

    def list_snapshots(self) -> list[Snapshot]:
        return self._entries()

    def take(self, workbook: Workbook, label: str | None = None) -> Snapshot:
        entries = self._entries()
        sequence = entries[-1].sequence + 1 if entries else 1
        safe_label = _LABEL_SAFE.sub("-", label or "").strip("-") or "snapshot"
        path = self.directory / f"{sequence}-{safe_label}.gws"
        payload = save_workbook(workbook)
        fd, tmp_name = tempfile.mkstemp(dir=self.directory, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp_name, path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise
        return Snapshot(
            sequence=sequence, timestamp=time.time(), label=safe_label, path=path
        )

    def restore(self, sequence: int) -> Workbook:
        for entry in self._entries():
            if entry.sequence == sequence:
                return load_workbook(entry.path.read_bytes())
        raise SnapshotNotFound(sequence)
