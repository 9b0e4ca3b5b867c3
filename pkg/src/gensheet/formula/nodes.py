"""Formula AST nodes, A1-notation helpers, serialization, and reference rewriting."""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, replace
from typing import Union

MAX_COL = 16383  # column XFD
MAX_ROW = 1048575


def col_to_letters(col: int) -> str:
    """0-based column index to spreadsheet letters (0 -> A, 27 -> AB)."""
    if col < 0:
        raise ValueError(f"negative column {col}")
    letters = ""
    col += 1
    while col:
        col, rem = divmod(col - 1, 26)
        letters = string.ascii_uppercase[rem] + letters
    return letters


def letters_to_col(letters: str) -> int:
    col = 0
    for ch in letters.upper():
        col = col * 26 + (ord(ch) - ord("A") + 1)
    return col - 1


def format_number(value: float) -> str:
    """Shortest decimal text that parses back to the same float.

    Integral values drop the decimal point, so 3424.0 prints as "3424".
    """
    if math.isnan(value) or math.isinf(value):
        raise ValueError("non-finite numbers have no formula representation")
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True, slots=True)
class CellRef:
    col: int
    row: int
    col_absolute: bool = False
    row_absolute: bool = False
    sheet: str | None = None

    def to_a1(self) -> str:
        prefix = f"{self.sheet}!" if self.sheet else ""
        return (
            prefix
            + ("$" if self.col_absolute else "")
            + col_to_letters(self.col)
            + ("$" if self.row_absolute else "")
            + str(self.row + 1)
        )


@dataclass(frozen=True, slots=True)
class TextLit:
    text: str


@dataclass(frozen=True, slots=True)
class NumLit:
    value: float


@dataclass(frozen=True, slots=True)
class Ref:
    ref: CellRef


@dataclass(frozen=True, slots=True)
class Range:
    start: CellRef
    end: CellRef


@dataclass(frozen=True, slots=True)
class RefError:
    """A reference shifted off the grid; evaluates to #REF!."""


@dataclass(frozen=True, slots=True)
class Binary:
    op: str  # one of & + - * /
    left: "FormulaAst"
    right: "FormulaAst"


@dataclass(frozen=True, slots=True)
class Call:
    name: str  # canonical uppercase
    args: tuple["FormulaAst", ...]


FormulaAst = Union[TextLit, NumLit, Ref, Range, RefError, Binary, Call]

_PRECEDENCE = {"&": 1, "+": 2, "-": 2, "*": 3, "/": 3}


def serialize(ast: FormulaAst) -> str:
    """Canonical source text: leading ``=``, no spaces except after commas."""
    return "=" + _serialize(ast)


def _serialize(node: FormulaAst, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(node, TextLit):
        return '"' + node.text.replace('"', '""') + '"'
    if isinstance(node, NumLit):
        return format_number(node.value)
    if isinstance(node, Ref):
        return node.ref.to_a1()
    if isinstance(node, RefError):
        return "#REF!"
    if isinstance(node, Range):
        return node.start.to_a1() + ":" + node.end.to_a1()
    if isinstance(node, Binary):
        prec = _PRECEDENCE[node.op]
        # Operators are left-associative, so a right child at equal
        # precedence needs grouping to survive re-parsing.
        text = (
            _serialize(node.left, prec, False)
            + node.op
            + _serialize(node.right, prec, True)
        )
        if prec < parent_prec or (prec == parent_prec and right_side):
            return "(" + text + ")"
        return text
    if isinstance(node, Call):
        return node.name + "(" + ", ".join(_serialize(a) for a in node.args) + ")"
    raise TypeError(f"not a formula node: {node!r}")


def rewrite_refs(ast: FormulaAst, delta_col: int, delta_row: int) -> FormulaAst:
    """Shift relative reference components; absolute anchors stay put.

    A component landing outside the grid turns the node into RefError.
    """
    if isinstance(ast, Ref):
        shifted = _shift(ast.ref, delta_col, delta_row)
        return Ref(shifted) if shifted is not None else RefError()
    if isinstance(ast, Range):
        start = _shift(ast.start, delta_col, delta_row)
        end = _shift(ast.end, delta_col, delta_row)
        if start is None or end is None:
            return RefError()
        return Range(start, end)
    if isinstance(ast, Binary):
        return Binary(
            ast.op,
            rewrite_refs(ast.left, delta_col, delta_row),
            rewrite_refs(ast.right, delta_col, delta_row),
        )
    if isinstance(ast, Call):
        return Call(
            ast.name,
            tuple(rewrite_refs(a, delta_col, delta_row) for a in ast.args),
        )
    return ast


def _shift(ref: CellRef, delta_col: int, delta_row: int) -> CellRef | None:
    col = ref.col if ref.col_absolute else ref.col + delta_col
    row = ref.row if ref.row_absolute else ref.row + delta_row
    if not (0 <= col <= MAX_COL and 0 <= row <= MAX_ROW):
        return None
    if col == ref.col and row == ref.row:
        return ref
    return replace(ref, col=col, row=row)


def strip_sheet(ast: FormulaAst, sheet: str) -> FormulaAst:
    """Drop explicit qualifiers naming ``sheet``, making those refs local."""
    if isinstance(ast, Ref) and ast.ref.sheet == sheet:
        return Ref(replace(ast.ref, sheet=None))
    if isinstance(ast, Range) and ast.start.sheet == sheet:
        return Range(replace(ast.start, sheet=None), ast.end)
    if isinstance(ast, Binary):
        return Binary(ast.op, strip_sheet(ast.left, sheet), strip_sheet(ast.right, sheet))
    if isinstance(ast, Call):
        return Call(ast.name, tuple(strip_sheet(a, sheet) for a in ast.args))
    return ast
