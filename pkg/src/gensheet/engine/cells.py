"""Grid addressing and stored cell content."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..formula.nodes import CellRef, FormulaAst, col_to_letters


@dataclass(frozen=True, slots=True)
class CellAddress:
    sheet: str
    col: int
    row: int

    def to_a1(self) -> str:
        return f"{col_to_letters(self.col)}{self.row + 1}"

    def offset(self, delta_col: int, delta_row: int) -> "CellAddress":
        return CellAddress(self.sheet, self.col + delta_col, self.row + delta_row)


def doc_order(addr: CellAddress) -> tuple[str, int, int]:
    """Document order: sheet name, then row-major within the sheet."""
    return (addr.sheet, addr.row, addr.col)


def resolve_ref(ref: CellRef, current_sheet: str) -> CellAddress:
    return CellAddress(ref.sheet or current_sheet, ref.col, ref.row)


@dataclass(frozen=True, slots=True)
class Empty:
    pass


@dataclass(frozen=True, slots=True)
class Literal:
    value: Union[str, float]


@dataclass(frozen=True, slots=True)
class Formula:
    source: str
    ast: FormulaAst


CellContent = Union[Empty, Literal, Formula]

EMPTY = Empty()


@dataclass(frozen=True, slots=True)
class GridRange:
    """Inclusive rectangular range on one sheet."""

    sheet: str
    col0: int
    row0: int
    col1: int
    row1: int

    def __post_init__(self) -> None:
        if self.col1 < self.col0 or self.row1 < self.row0:
            raise ValueError("range corners out of order")

    @property
    def width(self) -> int:
        return self.col1 - self.col0 + 1

    @property
    def height(self) -> int:
        return self.row1 - self.row0 + 1

    def cells(self) -> list[CellAddress]:
        return [
            CellAddress(self.sheet, col, row)
            for row in range(self.row0, self.row1 + 1)
            for col in range(self.col0, self.col1 + 1)
        ]

    def contains(self, addr: CellAddress) -> bool:
        return (
            addr.sheet == self.sheet
            and self.col0 <= addr.col <= self.col1
            and self.row0 <= addr.row <= self.row1
        )

    def overlaps(self, other: "GridRange") -> bool:
        return (
            self.sheet == other.sheet
            and self.col0 <= other.col1
            and other.col0 <= self.col1
            and self.row0 <= other.row1
            and other.row0 <= self.row1
        )

    def to_a1(self) -> str:
        start = CellAddress(self.sheet, self.col0, self.row0).to_a1()
        end = CellAddress(self.sheet, self.col1, self.row1).to_a1()
        return start if start == end else f"{start}:{end}"
