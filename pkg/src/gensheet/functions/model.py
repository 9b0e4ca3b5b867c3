"""Request/result types shared by the function registry, engine, and proxy."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

MAX_SEED = 2**32 - 1
MAX_CFG = 35.0
DEFAULT_SEED = 0
DEFAULT_CFG = 7.0
IMAGE_SIZE = 512

# Separator between the fields of a generation key's canonical encoding.
_FIELD_SEP = b"\x1f"


class KeyValidationError(ValueError):
    pass


def format_cfg(cfg: float) -> str:
    """Guidance rendered with exactly one decimal place ("7.0", "12.5").

    Finer precision is rejected so equal keys always encode identically.
    """
    tenths = round(cfg * 10)
    if abs(cfg * 10 - tenths) > 1e-9:
        raise KeyValidationError(
            f"guidance must be a multiple of 0.1, got {cfg!r}"
        )
    if not 0 <= tenths <= MAX_CFG * 10:
        raise KeyValidationError(f"guidance out of range [0, {MAX_CFG}]: {cfg!r}")
    return f"{tenths // 10}.{tenths % 10}"


@dataclass(frozen=True, slots=True)
class GenerationKey:
    """The (prompt, seed, cfg) triple identifying one generated image."""

    prompt: str
    seed: int = DEFAULT_SEED
    cfg: float = DEFAULT_CFG

    def __post_init__(self) -> None:
        if not self.prompt.strip():
            raise KeyValidationError("prompt must be non-empty")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise KeyValidationError(f"seed out of range [0, {MAX_SEED}]: {self.seed!r}")
        format_cfg(self.cfg)  # validates range and precision

    def canonical_bytes(self) -> bytes:
        return (
            self.prompt.encode("utf-8")
            + _FIELD_SEP
            + str(self.seed).encode("ascii")
            + _FIELD_SEP
            + format_cfg(self.cfg).encode("ascii")
        )

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


@dataclass(frozen=True, slots=True)
class ImageRef:
    """Server-side image blob identified by its generation key's digest."""

    id: str
    url_or_path: str
    width: int = IMAGE_SIZE
    height: int = IMAGE_SIZE

    @classmethod
    def for_key(cls, key: GenerationKey) -> "ImageRef":
        digest = key.digest()
        return cls(id=digest, url_or_path=f"/image/{digest}")


@dataclass(frozen=True, slots=True)
class LlmRequest:
    """Ordered chat messages plus the list-shape expectations, if any."""

    messages: tuple[tuple[str, str], ...]  # (role, content)
    expects_list: bool = False
    expected_length: int | None = None

    def __post_init__(self) -> None:
        for role, _ in self.messages:
            if role not in ("system", "user", "assistant"):
                raise ValueError(f"unknown role {role!r}")
        if self.expects_list and (
            self.expected_length is None or self.expected_length < 1
        ):
            raise ValueError("list requests need a positive expected_length")


@dataclass(frozen=True, slots=True)
class TtiResult:
    """What the generation service hands back for one image request."""

    digest: str
    path: str
    width: int = IMAGE_SIZE
    height: int = IMAGE_SIZE
    from_cache: bool = False

    def to_image_ref(self) -> ImageRef:
        return ImageRef(id=self.digest, url_or_path=f"/image/{self.digest}",
                        width=self.width, height=self.height)


@dataclass(frozen=True)
class WorkbookSettings:
    """Workbook-level defaults applied when a formula omits seed or cfg."""

    default_seed: int = DEFAULT_SEED
    default_cfg: float = DEFAULT_CFG
    providers: str = "mock"

    def __post_init__(self) -> None:
        if not 0 <= self.default_seed <= MAX_SEED:
            raise KeyValidationError(f"default seed out of range: {self.default_seed}")
        format_cfg(self.default_cfg)
