"""Expression evaluation against a workbook snapshot.

The evaluator owns propagation rules: errors flow through any expression
containing them, pending subexpressions make the whole cell pending (but
both operands still evaluate, so parallel requests dispatch in one pass),
and list results are only legal at the top level of a cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Union

from ..formula.nodes import (
    Binary,
    Call,
    CellRef,
    FormulaAst,
    NumLit,
    Range,
    Ref,
    RefError,
    TextLit,
)
from ..functions.model import WorkbookSettings
from ..functions.registry import lookup
from .calls import GenPlan, RangeItems, plan_call
from .cells import CellAddress, resolve_ref
from .spill import SpillDirection
from .values import (
    Blank,
    Error,
    ErrorKind,
    Number,
    Pending,
    Text,
    Value,
    coerce_number,
    coerce_text,
    value_error,
)

# Largest range a formula may read; beyond this the formula errors rather
# than dragging the whole grid into the dependency closure.
RANGE_CELL_CAP = 4096


@dataclass(frozen=True, slots=True)
class ListOutcome:
    """A list-producing call's items plus the axis they spill along."""

    items: tuple[str, ...]
    direction: SpillDirection


class EvalContext(Protocol):
    current_sheet: str
    settings: WorkbookSettings

    def sheet_exists(self, name: str) -> bool: ...

    def cell_value(self, addr: CellAddress) -> Value: ...

    def gen_value(self, plan: GenPlan) -> Union[Value, ListOutcome]: ...


def evaluate(ast: FormulaAst, ctx: EvalContext) -> Union[Value, ListOutcome]:
    if isinstance(ast, TextLit):
        return Text(ast.text)
    if isinstance(ast, NumLit):
        return Number(ast.value)
    if isinstance(ast, RefError):
        return Error(ErrorKind.REF, "reference shifted off the grid")
    if isinstance(ast, Ref):
        sheet = ast.ref.sheet or ctx.current_sheet
        if not ctx.sheet_exists(sheet):
            return Error(ErrorKind.REF, f"unknown sheet {sheet!r}")
        return ctx.cell_value(resolve_ref(ast.ref, ctx.current_sheet))
    if isinstance(ast, Range):
        return value_error("a range is only valid as a function argument")
    if isinstance(ast, Binary):
        return _binary(ast, ctx)
    if isinstance(ast, Call):
        return _call(ast, ctx)
    raise TypeError(f"not a formula node: {ast!r}")


def _binary(ast: Binary, ctx: EvalContext) -> Value:
    # Evaluate both sides unconditionally so every generative subexpression
    # dispatches in the same pass.
    left = evaluate(ast.left, ctx)
    right = evaluate(ast.right, ctx)
    if isinstance(left, ListOutcome):
        left = value_error("list result used in a scalar expression")
    if isinstance(right, ListOutcome):
        right = value_error("list result used in a scalar expression")
    for side in (left, right):
        if isinstance(side, Error):
            return side
    for side in (left, right):
        if isinstance(side, Pending):
            return side
    if ast.op == "&":
        left_text = coerce_text(left)
        if isinstance(left_text, Error):
            return left_text
        right_text = coerce_text(right)
        if isinstance(right_text, Error):
            return right_text
        return Text(left_text + right_text)
    left_num = coerce_number(left)
    if isinstance(left_num, Error):
        return left_num
    right_num = coerce_number(right)
    if isinstance(right_num, Error):
        return right_num
    if ast.op == "+":
        result = left_num + right_num
    elif ast.op == "-":
        result = left_num - right_num
    elif ast.op == "*":
        result = left_num * right_num
    else:
        if right_num == 0:
            return value_error("division by zero")
        result = left_num / right_num
    if result != result or result in (float("inf"), float("-inf")):
        return value_error("numeric overflow")
    return Number(result)


def _accepts_range(spec_base: str, index: int) -> bool:
    return spec_base == "LIST_COMPLETION" and index == 0


def _call(ast: Call, ctx: EvalContext) -> Union[Value, ListOutcome]:
    spec = lookup(ast.name)
    if spec is None:
        return Error(ErrorKind.NAME, f"unknown function {ast.name}")
    args: list[Union[Value, RangeItems]] = []
    for index, node in enumerate(ast.args):
        if isinstance(node, Range):
            if not _accepts_range(spec.base_name, index):
                args.append(value_error(f"{spec.name} does not accept a range here"))
                continue
            args.append(_gather_range(node, ctx))
            continue
        outcome = evaluate(node, ctx)
        if isinstance(outcome, ListOutcome):
            args.append(value_error("list result used in a scalar expression"))
            continue
        args.append(outcome)
    planned = plan_call(spec, args, ctx.settings)
    if isinstance(planned, GenPlan):
        return ctx.gen_value(planned)
    return planned


def _gather_range(node: Range, ctx: EvalContext) -> Union[RangeItems, Value]:
    sheet = node.start.sheet or ctx.current_sheet
    if not ctx.sheet_exists(sheet):
        return Error(ErrorKind.REF, f"unknown sheet {sheet!r}")
    width = node.end.col - node.start.col + 1
    height = node.end.row - node.start.row + 1
    if width * height > RANGE_CELL_CAP:
        return value_error(f"range larger than {RANGE_CELL_CAP} cells")
    items: list[str] = []
    pending: Pending | None = None
    for row in range(node.start.row, node.end.row + 1):
        for col in range(node.start.col, node.end.col + 1):
            value = ctx.cell_value(CellAddress(sheet, col, row))
            if isinstance(value, Error):
                return value
            if isinstance(value, Pending):
                pending = pending or value
                continue
            if isinstance(value, Blank):
                continue
            text = coerce_text(value)
            if isinstance(text, Error):
                return text
            items.append(text)
    if pending is not None:
        return pending
    return RangeItems(items=tuple(items))


def collect_static_reads(
    ast: FormulaAst, current_sheet: str
) -> frozenset[CellAddress]:
    """Cell addresses a formula reads, ranges expanded up to the cap."""
    reads: set[CellAddress] = set()
    _collect(ast, current_sheet, reads)
    return frozenset(reads)


def _collect(ast: FormulaAst, sheet: str, into: set[CellAddress]) -> None:
    if isinstance(ast, Ref):
        into.add(resolve_ref(ast.ref, sheet))
    elif isinstance(ast, Range):
        width = ast.end.col - ast.start.col + 1
        height = ast.end.row - ast.start.row + 1
        if width * height > RANGE_CELL_CAP:
            return  # formula errors at eval; no dependency edges
        range_sheet = ast.start.sheet or sheet
        for row in range(ast.start.row, ast.end.row + 1):
            for col in range(ast.start.col, ast.end.col + 1):
                into.add(CellAddress(range_sheet, col, row))
    elif isinstance(ast, Binary):
        _collect(ast.left, sheet, into)
        _collect(ast.right, sheet, into)
    elif isinstance(ast, Call):
        for arg in ast.args:
            _collect(arg, sheet, into)
