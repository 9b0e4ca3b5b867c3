"""Content-address for cached generations.

The canonical encoding is: UTF-8 prompt bytes, 0x1F, decimal seed, 0x1F,
cfg with exactly one decimal place. The digest is SHA-256 over those bytes,
so caches are portable across processes and hosts.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..functions.model import GenerationKey


@dataclass(frozen=True, slots=True)
class CacheKey:
    digest: str  # 64 hex chars

    def __post_init__(self) -> None:
        if len(self.digest) != 64 or any(
            c not in "0123456789abcdef" for c in self.digest
        ):
            raise ValueError(f"not a sha256 hex digest: {self.digest!r}")


def canonical_encoding(key: GenerationKey) -> bytes:
    return key.canonical_bytes()


def key_hash(key: GenerationKey) -> CacheKey:
    return CacheKey(key.digest())
