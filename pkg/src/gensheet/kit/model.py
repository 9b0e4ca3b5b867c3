"""Domain types for scripted exploration structures."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from ..engine.cells import CellAddress, GridRange


class KitError(ValueError):
    pass


class InvalidAxis(KitError):
    pass


class TooManyAxes(KitError):
    pass


class InvalidValue(KitError):
    pass


class PlacementError(KitError):
    """The target region is occupied; nothing was written."""


class PowerRole(Enum):
    SEED = "seed"
    CFG = "cfg"


@dataclass(frozen=True, slots=True)
class PowerCell:
    """A cell holding a global hyperparameter that structures reference
    absolutely, so one edit regenerates everything built on it."""

    label: str
    addr: CellAddress
    role: PowerRole


@dataclass(frozen=True, slots=True)
class ManualList:
    items: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class GenerativeList:
    function: str  # registered LLM function name
    input: str
    length: int


@dataclass(frozen=True, slots=True)
class CellRangeSource:
    range: GridRange


AxisSource = Union[ManualList, GenerativeList, CellRangeSource]


@dataclass(frozen=True, slots=True)
class LiteralText:
    text: str


@dataclass(frozen=True, slots=True)
class Slot:
    slot_id: str


Segment = Union[LiteralText, Slot]


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt text with swappable slots; each slot draws from an axis source."""

    segments: tuple[Segment, ...]
    slots: dict[str, AxisSource]

    def __post_init__(self) -> None:
        if not self.segments:
            raise InvalidValue("template needs at least one segment")
        seen: set[str] = set()
        for segment in self.segments:
            if isinstance(segment, Slot):
                if segment.slot_id not in self.slots:
                    raise InvalidValue(f"slot {segment.slot_id!r} has no source")
                if segment.slot_id in seen:
                    raise InvalidValue(f"slot {segment.slot_id!r} appears twice")
                seen.add(segment.slot_id)

    def slot_order(self) -> list[str]:
        return [s.slot_id for s in self.segments if isinstance(s, Slot)]


@dataclass(frozen=True, slots=True)
class DynamicToken:
    """A saved, regenerable prompt slot backed by a generator."""

    label: str
    generator: AxisSource
    items: tuple[str, ...] = ()
