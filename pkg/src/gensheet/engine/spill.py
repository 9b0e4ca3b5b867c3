"""Spill regions: the cell block a list-producing formula populates."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..formula.nodes import MAX_COL, MAX_ROW
from .cells import CellAddress


class SpillDirection(Enum):
    COLUMN = "column"
    ROW = "row"


@dataclass(frozen=True, slots=True)
class SpillRegion:
    origin: CellAddress
    direction: SpillDirection
    length: int

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("spill length must be positive")

    def cells(self) -> list[CellAddress]:
        if self.direction is SpillDirection.COLUMN:
            return [self.origin.offset(0, i) for i in range(self.length)]
        return [self.origin.offset(i, 0) for i in range(self.length)]

    def fits_grid(self) -> bool:
        last = self.cells()[-1]
        return last.col <= MAX_COL and last.row <= MAX_ROW
