"""Computed cell values and coercion rules."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from ..formula.nodes import format_number
from ..functions.model import ImageRef


class ErrorKind(Enum):
    NAME = "#NAME?"
    REF = "#REF!"
    VALUE = "#VALUE!"
    CYCLE = "#CYCLE!"
    SPILL = "#SPILL!"
    GEN = "#GEN_ERR"


@dataclass(frozen=True, slots=True)
class Blank:
    pass


@dataclass(frozen=True, slots=True)
class Text:
    text: str


@dataclass(frozen=True, slots=True)
class Number:
    value: float


@dataclass(frozen=True, slots=True)
class Image:
    ref: ImageRef


@dataclass(frozen=True, slots=True)
class Error:
    kind: ErrorKind
    message: str = ""


@dataclass(frozen=True, slots=True)
class Pending:
    request_id: int


Value = Union[Blank, Text, Number, Image, Error, Pending]

BLANK = Blank()


def value_error(message: str) -> Error:
    return Error(ErrorKind.VALUE, message)


def is_scalar(value: Value) -> bool:
    return isinstance(value, (Blank, Text, Number))


def coerce_text(value: Value) -> str | Error:
    """Text for concatenation and prompts. Blank joins as the empty string;
    numbers use shortest round-trip formatting; images do not coerce."""
    if isinstance(value, Blank):
        return ""
    if isinstance(value, Text):
        return value.text
    if isinstance(value, Number):
        return format_number(value.value)
    if isinstance(value, Error):
        return value
    return value_error("image values cannot be used as text")


def coerce_number(value: Value) -> float | Error:
    if isinstance(value, Number):
        return value.value
    if isinstance(value, Blank):
        return 0.0
    if isinstance(value, Text):
        try:
            return float(value.text)
        except ValueError:
            return value_error(f"not a number: {value.text!r}")
    if isinstance(value, Error):
        return value
    return value_error("image values cannot be used as numbers")
