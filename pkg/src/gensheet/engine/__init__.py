from .cells import (
    CellAddress,
    CellContent,
    EMPTY,
    Empty,
    Formula,
    GridRange,
    Literal,
    doc_order,
)
from .dispatch import (
    CollectingDispatcher,
    GenerationFailed,
    SyncDispatcher,
    ThreadedDispatcher,
    execute_item,
    fetch_list_items,
)
from .engine import (
    ChangeSet,
    DispatchItem,
    Engine,
    InvalidRange,
    LedgerEntry,
    ListResult,
    parse_entry,
)
from .spill import SpillDirection, SpillRegion
from .values import (
    BLANK,
    Blank,
    Error,
    ErrorKind,
    Image,
    Number,
    Pending,
    Text,
    Value,
    coerce_number,
    coerce_text,
)
from .workbook import DuplicateLabel, StaticToken, TokenBank, TokenNotFound, Workbook

__all__ = [
    "BLANK",
    "Blank",
    "CellAddress",
    "CellContent",
    "ChangeSet",
    "CollectingDispatcher",
    "DispatchItem",
    "DuplicateLabel",
    "EMPTY",
    "Empty",
    "Engine",
    "Error",
    "ErrorKind",
    "Formula",
    "GenerationFailed",
    "GridRange",
    "Image",
    "InvalidRange",
    "LedgerEntry",
    "ListResult",
    "Literal",
    "Number",
    "Pending",
    "SpillDirection",
    "SpillRegion",
    "StaticToken",
    "SyncDispatcher",
    "Text",
    "ThreadedDispatcher",
    "TokenBank",
    "TokenNotFound",
    "Value",
    "Workbook",
    "coerce_number",
    "coerce_text",
    "doc_order",
    "execute_item",
    "fetch_list_items",
    "parse_entry",
]
