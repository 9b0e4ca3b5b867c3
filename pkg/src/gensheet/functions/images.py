"""Deterministic offline image synthesis.

Pixels come from a splitmix64-style hash of (key digest, x, y); guidance
maps to a global contrast scalar so ascending cfg values render a visible
gradient. The per-pixel loop is the one hot kernel in this package: it is
jitted with numba, with a vectorized pure-numpy fallback selected by the
``GENSHEET_NO_NUMBA`` env flag (or used automatically when numba is
missing). Both paths produce byte-identical arrays.

PNG encoding uses stored (uncompressed) deflate blocks, so the emitted
bytes are fully specified and identical across platforms and zlib builds.
"""

from __future__ import annotations

import os
import struct
import zlib

import numpy as np

from .model import IMAGE_SIZE, GenerationKey

_MIX1 = np.uint64(0x9E3779B97F4A7C15)
_MIX2 = np.uint64(0xBF58476D1CE4E5B9)
_MIX3 = np.uint64(0x94D049BB133111EB)

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def contrast_scale(cfg: float) -> int:
    """Fixed-point (x/256) contrast factor, monotonically increasing in cfg.

    cfg 0 -> 64 (flat), cfg 35 -> 256 (full range). Pixel deviations from
    mid-gray are scaled by this factor, so pixel variance grows with cfg.
    """
    tenths = round(cfg * 10)
    return 64 + tenths * 192 // 350


def _render_numpy(seed64: int, scale: int, size: int) -> np.ndarray:
    ys, xs = np.meshgrid(
        np.arange(size, dtype=np.uint64),
        np.arange(size, dtype=np.uint64),
        indexing="ij",
    )
    z = (np.uint64(seed64) ^ (ys << np.uint64(32)) ^ xs) + _MIX1
    z = (z ^ (z >> np.uint64(30))) * _MIX2
    z = (z ^ (z >> np.uint64(27))) * _MIX3
    z = z ^ (z >> np.uint64(31))
    base = np.empty((size, size, 3), dtype=np.int64)
    base[:, :, 0] = (z & np.uint64(0xFF)).astype(np.int64)
    base[:, :, 1] = ((z >> np.uint64(8)) & np.uint64(0xFF)).astype(np.int64)
    base[:, :, 2] = ((z >> np.uint64(16)) & np.uint64(0xFF)).astype(np.int64)
    out = 128 + (((base - 128) * scale) >> 8)
    return out.astype(np.uint8)


if HAS_NUMBA:

    @njit(cache=True)
    def _render_numba(seed64, scale, size):  # pragma: no cover - jitted
        out = np.empty((size, size, 3), dtype=np.uint8)
        for y in range(size):
            for x in range(size):
                z = (np.uint64(seed64) ^ (np.uint64(y) << np.uint64(32)) ^ np.uint64(x)) + _MIX1
                z = (z ^ (z >> np.uint64(30))) * _MIX2
                z = (z ^ (z >> np.uint64(27))) * _MIX3
                z = z ^ (z >> np.uint64(31))
                for c in range(3):
                    b = np.int64((z >> np.uint64(8 * c)) & np.uint64(0xFF))
                    out[y, x, c] = np.uint8(128 + (((b - 128) * scale) >> 8))
        return out


def active_backend() -> str:
    """Which kernel runs: "numba" unless disabled by env flag or unavailable."""
    flag = os.environ.get("GENSHEET_NO_NUMBA", "")
    if flag not in ("", "0", "false", "False") or not HAS_NUMBA:
        return "numpy"
    return "numba"


def render_pixels(
    seed64: int, cfg: float, size: int = IMAGE_SIZE, backend: str | None = None
) -> np.ndarray:
    """(size, size, 3) uint8 array; identical output from either backend."""
    scale = contrast_scale(cfg)
    if (backend or active_backend()) == "numba":
        return _render_numba(np.uint64(seed64), scale, size)
    return _render_numpy(seed64, scale, size)


def key_seed64(key: GenerationKey) -> int:
    return int.from_bytes(bytes.fromhex(key.digest())[:8], "big")


def render_key(key: GenerationKey, size: int = IMAGE_SIZE) -> np.ndarray:
    return render_pixels(key_seed64(key), key.cfg, size)


def mock_tti_bytes(key: GenerationKey) -> bytes:
    """Deterministic 512x512 PNG for a generation key."""
    return encode_png_rgb(render_key(key))


def warm_kernel() -> None:
    """Trigger one-off jit compilation outside any timed section."""
    render_pixels(0, 7.0, size=8)


# --- minimal PNG writer -----------------------------------------------------

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(chunk_type: bytes, data: bytes) -> bytes:
    return (
        struct.pack(">I", len(data))
        + chunk_type
        + data
        + struct.pack(">I", zlib.crc32(chunk_type + data) & 0xFFFFFFFF)
    )


def _stored_deflate(raw: bytes) -> bytes:
    """zlib stream using stored blocks only: no compressor freedom, so the
    byte output is identical everywhere."""
    out = [b"\x78\x01"]
    pos = 0
    total = len(raw)
    while True:
        block = raw[pos : pos + 65535]
        pos += len(block)
        final = pos >= total
        out.append(b"\x01" if final else b"\x00")
        out.append(struct.pack("<HH", len(block), 0xFFFF - len(block)))
        out.append(block)
        if final:
            break
    out.append(struct.pack(">I", zlib.adler32(raw) & 0xFFFFFFFF))
    return b"".join(out)


def encode_png_rgb(pixels: np.ndarray) -> bytes:
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError("expected (h, w, 3) uint8 pixels")
    height, width = pixels.shape[:2]
    # Filter type 0 (None) prepended to every scanline.
    raw = np.empty((height, 1 + width * 3), dtype=np.uint8)
    raw[:, 0] = 0
    raw[:, 1:] = pixels.reshape(height, width * 3)
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (
        _PNG_SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", _stored_deflate(raw.tobytes()))
        + _chunk(b"IEND", b"")
    )


class MockTtiUpstream:
    """Callable matching the TTI upstream interface: key -> PNG bytes."""

    def __call__(self, key: GenerationKey) -> bytes:
        return mock_tti_bytes(key)
