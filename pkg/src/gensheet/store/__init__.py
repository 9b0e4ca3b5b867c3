from .fileformat import (
    FORMAT_VERSION,
    FormatError,
    VersionError,
    load_workbook,
    save_workbook,
    workbooks_equal,
)
from .snapshots import Snapshot, SnapshotNotFound, SnapshotStore

__all__ = [
    "FORMAT_VERSION",
    "FormatError",
    "Snapshot",
    "SnapshotNotFound",
    "SnapshotStore",
    "VersionError",
    "load_workbook",
    "save_workbook",
    "workbooks_equal",
]
