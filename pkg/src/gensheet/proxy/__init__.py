from .blobstore import BlobStore
from .keys import CacheKey, canonical_encoding, key_hash
from .service import (
    DEFAULT_PARALLELISM,
    DEFAULT_TIMEOUT_SECS,
    CacheStats,
    GenerationService,
    InvalidBatch,
    UpstreamError,
    UpstreamTimeout,
)

__all__ = [
    "BlobStore",
    "CacheKey",
    "CacheStats",
    "DEFAULT_PARALLELISM",
    "DEFAULT_TIMEOUT_SECS",
    "GenerationService",
    "InvalidBatch",
    "UpstreamError",
    "UpstreamTimeout",
    "canonical_encoding",
    "key_hash",
]
