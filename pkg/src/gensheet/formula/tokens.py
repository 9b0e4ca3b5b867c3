"""Token types for the cell formula language."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto


class TokenKind(Enum):
    EQUALS = auto()
    IDENT = auto()
    NUMBER = auto()
    STRING = auto()
    CELL_REF = auto()
    COLON = auto()
    COMMA = auto()
    LPAREN = auto()
    RPAREN = auto()
    AMP = auto()
    PLUS = auto()
    MINUS = auto()
    STAR = auto()
    SLASH = auto()


@dataclass(frozen=True, slots=True)
class Token:
    """One lexeme with its half-open byte span in the source text."""

    kind: TokenKind
    lexeme: str
    start: int
    end: int


class LexError(ValueError):
    """Raised for any character sequence outside the formula grammar."""

    def __init__(self, position: int, found: str):
        self.position = position
        self.found = found
        super().__init__(f"unexpected {found!r} at byte offset {position}")
