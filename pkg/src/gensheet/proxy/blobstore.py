"""Filesystem blob store for generated images.

Blob filenames are the key's hex digest with a ``.png`` suffix. Writes go
to a temp file in the same directory followed by an atomic rename, with a
content checksum in a ``.sum`` sidecar written first; reads verify the
checksum so a partially written blob is never served.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path


class BlobStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _blob_path(self, digest: str) -> Path:
        return self.root / f"{digest}.png"

    def _sum_path(self, digest: str) -> Path:
        return self.root / f"{digest}.sum"

    def path_for(self, digest: str) -> Path:
        return self._blob_path(digest)

    def get(self, digest: str) -> bytes | None:
        """Blob bytes, or None when missing or failing its integrity check."""
        blob_path = self._blob_path(digest)
        sum_path = self._sum_path(digest)
        if not blob_path.is_file() or not sum_path.is_file():
            return None
        data = blob_path.read_bytes()
        expected = sum_path.read_text().strip()
        if hashlib.sha256(data).hexdigest() != expected:
            return None
        return data

    def has(self, digest: str) -> bool:
        return self.get(digest) is not None

    def put(self, digest: str, data: bytes) -> Path:
        checksum = hashlib.sha256(data).hexdigest()
        self._atomic_write(self._sum_path(digest), checksum.encode("ascii"))
        blob_path = self._atomic_write(self._blob_path(digest), data)
        return blob_path

    def _atomic_write(self, path: Path, data: bytes) -> Path:
        fd, tmp_name = tempfile.mkstemp(dir=self.root, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp_name, path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise
        return path

    def entries(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.png"))

    def total_bytes(self) -> int:
        return sum(p.stat().st_size for p in self.root.glob("*.png"))
