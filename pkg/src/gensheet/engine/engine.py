"""Single-writer grid engine.

Edits and request resolutions are commands serialized through one lock;
each command re-evaluates the dirty closure (the edited cells plus all
transitive dependents, including spill-region readers) in dependency
order, settles spill placement, and reports every value that changed.

Generative subexpressions are memoized by their full argument tuple, so
re-evaluation never re-dispatches an identical request; unresolved calls
surface as Pending values tied to entries in the dispatch ledger.
"""

from __future__ import annotations

import itertools
import logging
import re
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Union

from ..formula.nodes import MAX_COL, MAX_ROW, rewrite_refs, serialize, strip_sheet
from ..formula.parser import parse_source
from ..functions.model import WorkbookSettings
from ..functions.registry import OutputShape
from .calls import GenPlan
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
from .evaluator import ListOutcome, collect_static_reads, evaluate
from .graph import DependencyGraph
from .spill import SpillDirection, SpillRegion
from .values import BLANK, Blank, Error, ErrorKind, Number, Pending, Text, Value
from .workbook import Workbook

logger = logging.getLogger("gensheet.engine")

ChangeSet = list[tuple[CellAddress, Value]]

_SETTLE_ROUNDS_CAP = 64


class InvalidRange(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class LedgerEntry:
    memo_key: tuple
    plan: GenPlan
    origin: CellAddress
    content_generation: int


@dataclass(frozen=True, slots=True)
class DispatchItem:
    request_id: int
    plan: GenPlan


@dataclass(frozen=True, slots=True)
class ListResult:
    """Resolution payload for a list-producing request."""

    items: tuple[str, ...]


class Engine:
    def __init__(self, workbook: Workbook | None = None, dispatcher=None):
        self.workbook = workbook if workbook is not None else Workbook()
        self.dispatcher = dispatcher
        self._values: dict[CellAddress, Value] = {}
        self._graph = DependencyGraph()
        self._list_results: dict[CellAddress, ListOutcome] = {}
        self._manual_spills: dict[CellAddress, ListOutcome] = {}
        self._regions: dict[CellAddress, SpillRegion] = {}
        self._child_of: dict[CellAddress, CellAddress] = {}
        self._spill_watch: dict[CellAddress, set[CellAddress]] = {}
        self._memo: dict[tuple, object] = {}
        self._inflight: dict[tuple, int] = {}
        self._waiters: dict[tuple, set[CellAddress]] = {}
        self._ledger: dict[int, LedgerEntry] = {}
        self._content_generation: dict[CellAddress, int] = {}
        self._pending_cells: set[CellAddress] = set()
        self._rid_counter = itertools.count(1)
        self._outbox: list[DispatchItem] = []
        self._observers: list[Callable[[ChangeSet], None]] = []
        self._lock = threading.Lock()
        self._quiet = threading.Condition()

    # -- configuration ------------------------------------------------------

    @property
    def settings(self) -> WorkbookSettings:
        return self.workbook.settings

    def add_observer(self, callback: Callable[[ChangeSet], None]) -> None:
        self._observers.append(callback)

    # -- reads ---------------------------------------------------------------

    def get_value(self, addr: CellAddress) -> Value:
        self._check_addr(addr)
        with self._lock:
            return self._values.get(addr, BLANK)

    def values_snapshot(self) -> dict[CellAddress, Value]:
        with self._lock:
            return dict(self._values)

    def spill_region(self, origin: CellAddress) -> SpillRegion | None:
        with self._lock:
            return self._regions.get(origin)

    def is_spill_child(self, addr: CellAddress) -> bool:
        with self._lock:
            return addr in self._child_of

    def pending_cells(self) -> set[CellAddress]:
        with self._lock:
            return set(self._pending_cells)

    def inflight_requests(self) -> dict[int, LedgerEntry]:
        with self._lock:
            return dict(self._ledger)

    def is_quiescent(self) -> bool:
        with self._lock:
            return not self._inflight and not self._pending_cells and not self._outbox

    # -- commands ------------------------------------------------------------

    def set_cell(self, addr: CellAddress, content: CellContent) -> ChangeSet:
        return self.set_cells([(addr, content)])

    def set_cells(
        self, entries: Iterable[tuple[CellAddress, CellContent]]
    ) -> ChangeSet:
        entries = list(entries)
        for addr, _ in entries:
            self._check_addr(addr)
        with self._lock:
            command_old: dict[CellAddress, Value] = {}
            seeds: set[CellAddress] = set()
            for addr, content in entries:
                self.workbook.set_content(addr, content)
                self._content_generation[addr] = (
                    self._content_generation.get(addr, 0) + 1
                )
                self._manual_spills.pop(addr, None)
                if isinstance(content, Formula):
                    self._graph.set_edges(
                        addr, collect_static_reads(content.ast, addr.sheet)
                    )
                else:
                    self._graph.set_edges(addr, frozenset())
                seeds.add(addr)
                # Wake origins whose (placed or blocked) region touches the
                # edited cell: occupancy changed even without a value edge.
                seeds |= self._spill_watch.get(addr, set())
            self._recompute(seeds, command_old)
            changes = self._finalize(command_old)
        self._after_command(changes)
        return changes

    def enter(self, addr: CellAddress, raw: str) -> ChangeSet:
        """Raw text entry: '=' starts a formula, numbers become number
        literals, anything else is text; empty clears the cell."""
        return self.set_cell(addr, parse_entry(raw))

    def clear(self, addr: CellAddress) -> ChangeSet:
        return self.set_cell(addr, EMPTY)

    def place_spill(
        self, origin: CellAddress, items: list[str], direction: SpillDirection
    ) -> SpillRegion | None:
        """Register a manual spill at an empty origin. Returns the placed
        region, or None when blocked (the origin then shows #SPILL!)."""
        if not items:
            raise ValueError("spill items must be non-empty")
        self._check_addr(addr=origin)
        with self._lock:
            if not isinstance(self.workbook.content(origin), Empty):
                raise ValueError("manual spills need an empty origin cell")
            command_old: dict[CellAddress, Value] = {}
            self._manual_spills[origin] = ListOutcome(
                items=tuple(items), direction=direction
            )
            self._recompute({origin}, command_old)
            changes = self._finalize(command_old)
            region = self._regions.get(origin)
        self._after_command(changes)
        return region

    def resolve_pending(
        self, request_id: int, result: Union[Value, ListResult]
    ) -> ChangeSet:
        with self._lock:
            entry = self._ledger.pop(request_id, None)
            if entry is None:
                logger.info("resolution for unknown request id %s dropped", request_id)
                return []
            if self._inflight.get(entry.memo_key) == request_id:
                del self._inflight[entry.memo_key]
            if (
                self._content_generation.get(entry.origin, 0)
                != entry.content_generation
            ):
                # The dispatching cell was edited while the request was in
                # flight; the result still lands in the memo (it is a pure
                # function of the request) but no stale value reaches a cell.
                logger.info(
                    "stale request %s: %s edited since dispatch",
                    request_id,
                    entry.origin,
                )
            if isinstance(result, ListResult):
                self._memo[entry.memo_key] = result.items
            else:
                self._memo[entry.memo_key] = result
            waiters = self._waiters.pop(entry.memo_key, set())
            command_old: dict[CellAddress, Value] = {}
            self._recompute(set(waiters), command_old)
            changes = self._finalize(command_old)
        self._after_command(changes)
        return changes

    def recompute_all(self) -> ChangeSet:
        """Evaluate every content cell from scratch (fresh or loaded books)."""
        with self._lock:
            command_old: dict[CellAddress, Value] = {}
            seeds: set[CellAddress] = set()
            for addr, content in self.workbook.iter_cells():
                if isinstance(content, Formula):
                    self._graph.set_edges(
                        addr, collect_static_reads(content.ast, addr.sheet)
                    )
                seeds.add(addr)
            self._recompute(seeds, command_old)
            changes = self._finalize(command_old)
        self._after_command(changes)
        return changes

    def retry_failed(self) -> ChangeSet:
        """Forget memoized provider failures and re-evaluate their cells."""
        with self._lock:
            failed = [
                key
                for key, value in self._memo.items()
                if isinstance(value, Error) and value.kind is ErrorKind.GEN
            ]
            for key in failed:
                del self._memo[key]
            seeds: set[CellAddress] = set()
            if failed:
                for addr, value in self._values.items():
                    if isinstance(value, Error) and value.kind is ErrorKind.GEN:
                        seeds.add(addr)
            command_old: dict[CellAddress, Value] = {}
            self._recompute(seeds, command_old)
            changes = self._finalize(command_old)
        self._after_command(changes)
        return changes

    # -- structured edits ------------------------------------------------------

    def autofill(self, source: GridRange, target: GridRange) -> ChangeSet:
        """Copy the source block over the target with relative references
        shifted by each cell's offset; the source pattern tiles."""
        if source.sheet != target.sheet:
            raise InvalidRange("autofill stays on one sheet")
        if target.overlaps(source):
            raise InvalidRange("target overlaps source")
        vertical = source.col0 == target.col0 and source.col1 == target.col1
        horizontal = source.row0 == target.row0 and source.row1 == target.row1
        if vertical == horizontal:  # neither, or an L-shaped both
            raise InvalidRange("target must extend the source along exactly one axis")
        entries = []
        for addr in target.cells():
            src_col = source.col0 + (addr.col - target.col0) % source.width
            src_row = source.row0 + (addr.row - target.row0) % source.height
            src = CellAddress(source.sheet, src_col, src_row)
            delta_col = addr.col - src_col
            delta_row = addr.row - src_row
            entries.append((addr, _shift_content(self.workbook.content(src), delta_col, delta_row)))
        return self.set_cells(entries)

    def duplicate_range(self, source: GridRange, dest: CellAddress) -> ChangeSet:
        self._check_addr(dest)
        dest_range = GridRange(
            dest.sheet,
            dest.col,
            dest.row,
            dest.col + source.width - 1,
            dest.row + source.height - 1,
        )
        if dest_range.col1 > MAX_COL or dest_range.row1 > MAX_ROW:
            raise InvalidRange("destination extends past the grid")
        if dest_range.overlaps(source):
            raise InvalidRange("destination overlaps source")
        delta_col = dest.col - source.col0
        delta_row = dest.row - source.row0
        entries = []
        for addr in source.cells():
            target = CellAddress(
                dest.sheet, addr.col + delta_col, addr.row + delta_row
            )
            entries.append(
                (target, _shift_content(self.workbook.content(addr), delta_col, delta_row))
            )
        return self.set_cells(entries)

    def duplicate_sheet(self, source: str, new_name: str | None = None) -> tuple[str, ChangeSet]:
        if not self.workbook.has_sheet(source):
            raise KeyError(f"no such sheet: {source!r}")
        name = new_name or self.workbook.copy_name(source)
        self.workbook.add_sheet(name)
        entries = []
        for (col, row), content in sorted(
            self.workbook.sheets[source].items(), key=lambda kv: (kv[0][1], kv[0][0])
        ):
            if isinstance(content, Formula):
                # Refs naming the source sheet become local so the copy is
                # self-contained; unqualified refs already are.
                ast = strip_sheet(content.ast, source)
                content = Formula(serialize(ast), ast)
            entries.append((CellAddress(name, col, row), content))
        return name, self.set_cells(entries)

    # -- quiescence -------------------------------------------------------------

    def pump(self) -> None:
        """Deliver any queued dispatches to the attached dispatcher."""
        self._drain_outbox()

    def run_to_quiescence(self, timeout_secs: float = 120.0) -> bool:
        deadline = time.monotonic() + timeout_secs
        self._drain_outbox()
        while True:
            if self.is_quiescent():
                return True
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return False
            with self._quiet:
                self._quiet.wait(min(remaining, 0.05))

    # -- internals ---------------------------------------------------------------

    def _check_addr(self, addr: CellAddress) -> None:
        if not self.workbook.has_sheet(addr.sheet):
            raise KeyError(f"no such sheet: {addr.sheet!r}")
        if not (0 <= addr.col <= MAX_COL and 0 <= addr.row <= MAX_ROW):
            raise ValueError(f"address outside the grid: {addr}")

    def _after_command(self, changes: ChangeSet) -> None:
        if changes:
            for observer in self._observers:
                observer(changes)
        self._drain_outbox()
        with self._quiet:
            self._quiet.notify_all()

    def _drain_outbox(self) -> None:
        if self.dispatcher is None:
            return
        while True:
            with self._lock:
                items, self._outbox = self._outbox, []
            if not items:
                return
            self.dispatcher.dispatch(self, items)
            if not getattr(self.dispatcher, "synchronous", False):
                return

    def _finalize(self, command_old: dict[CellAddress, Value]) -> ChangeSet:
        changes: ChangeSet = []
        for addr in sorted(command_old, key=doc_order):
            now = self._values.get(addr, BLANK)
            if now != command_old[addr]:
                changes.append((addr, now))
        return changes

    def _record(
        self,
        addr: CellAddress,
        value: Value,
        command_old: dict[CellAddress, Value],
        pass_changes: dict[CellAddress, Value],
    ) -> None:
        old = self._values.get(addr, BLANK)
        if addr not in command_old:
            command_old[addr] = old
        if value == old:
            return
        if isinstance(value, Blank):
            self._values.pop(addr, None)
        else:
            self._values[addr] = value
        if isinstance(old, Pending):
            self._pending_cells.discard(addr)
        if isinstance(value, Pending):
            self._pending_cells.add(addr)
        pass_changes[addr] = value

    def _recompute(
        self, seeds: set[CellAddress], command_old: dict[CellAddress, Value]
    ) -> None:
        dirty = {addr for addr in seeds if self.workbook.has_sheet(addr.sheet)}
        rounds = 0
        while dirty:
            rounds += 1
            if rounds > _SETTLE_ROUNDS_CAP:
                raise RuntimeError("recomputation failed to settle")
            closure = dirty | self._graph.transitive_readers(dirty)
            pass_changes: dict[CellAddress, Value] = {}
            for scc in self._tarjan(closure):
                cyclic = len(scc) > 1 or scc[0] in self._graph.reads(scc[0])
                if cyclic:
                    for addr in sorted(scc, key=doc_order):
                        self._list_results.pop(addr, None)
                        self._record(
                            addr,
                            Error(ErrorKind.CYCLE, "cell is on a reference cycle"),
                            command_old,
                            pass_changes,
                        )
                else:
                    self._evaluate_into(scc[0], command_old, pass_changes)
            if self._list_results or self._manual_spills or self._regions:
                self._solve_spills(command_old, pass_changes)
            dirty = set(pass_changes)

    def _evaluate_into(
        self,
        addr: CellAddress,
        command_old: dict[CellAddress, Value],
        pass_changes: dict[CellAddress, Value],
    ) -> None:
        content = self.workbook.content(addr)
        if isinstance(content, Formula):
            outcome = evaluate(content.ast, _Context(self, addr))
            if isinstance(outcome, ListOutcome):
                self._list_results[addr] = outcome
                # The origin's own value is assigned by spill placement.
                return
            self._list_results.pop(addr, None)
            self._record(addr, outcome, command_old, pass_changes)
            return
        # Content is no longer a list formula; drop any stale list result.
        self._list_results.pop(addr, None)
        if isinstance(content, Literal):
            if isinstance(content.value, str):
                value: Value = Text(content.value)
            else:
                value = Number(float(content.value))
            self._record(addr, value, command_old, pass_changes)
            return
        self._record(addr, self._derived_value(addr), command_old, pass_changes)

    def _derived_value(self, addr: CellAddress) -> Value:
        origin = self._child_of.get(addr)
        if origin is not None:
            outcome = self._desired_spills().get(origin)
            region = self._regions.get(origin)
            if outcome is not None and region is not None:
                if region.direction is SpillDirection.COLUMN:
                    offset = addr.row - origin.row
                else:
                    offset = addr.col - origin.col
                if 0 <= offset < len(outcome.items):
                    return Text(outcome.items[offset])
            return BLANK
        if addr in self._manual_spills:
            if addr in self._regions:
                return Text(self._manual_spills[addr].items[0])
            return Error(ErrorKind.SPILL, "spill blocked by existing content")
        return BLANK

    def _desired_spills(self) -> dict[CellAddress, ListOutcome]:
        desired = dict(self._manual_spills)
        desired.update(self._list_results)
        return desired

    def _solve_spills(
        self,
        command_old: dict[CellAddress, Value],
        pass_changes: dict[CellAddress, Value],
    ) -> None:
        """Re-derive all spill placements from current list results.

        Placement priority is document order, so the outcome depends only on
        workbook contents, never on edit history.
        """
        desired = self._desired_spills()
        new_regions: dict[CellAddress, SpillRegion] = {}
        new_child_of: dict[CellAddress, CellAddress] = {}
        watch: dict[CellAddress, set[CellAddress]] = {}
        for origin in sorted(desired, key=doc_order):
            outcome = desired[origin]
            region = SpillRegion(origin, outcome.direction, len(outcome.items))
            cells = region.cells() if region.fits_grid() else []
            ok = bool(cells)
            for cell in cells:
                watch.setdefault(cell, set()).add(origin)
                if cell == origin:
                    continue
                if (
                    self.workbook.has_user_content(cell)
                    or cell in new_child_of
                    or cell in new_regions
                ):
                    ok = False
            if ok and len(cells) > 1:
                # A region the origin itself reads from would feed back into
                # the formula; refuse the placement instead of oscillating.
                reads = self._graph.transitive_reads(origin)
                if any(cell in reads for cell in cells):
                    ok = False
            if ok:
                new_regions[origin] = region
                for cell in cells[1:]:
                    new_child_of[cell] = origin
        old_children = set(self._child_of)
        self._regions = new_regions
        self._child_of = new_child_of
        self._spill_watch = watch
        for cell in old_children - set(new_child_of):
            if not self.workbook.has_user_content(cell):
                self._record(cell, BLANK, command_old, pass_changes)
                self._graph.set_edges(cell, frozenset())
        for cell, origin in new_child_of.items():
            region = new_regions[origin]
            items = desired[origin].items
            if region.direction is SpillDirection.COLUMN:
                offset = cell.row - origin.row
            else:
                offset = cell.col - origin.col
            self._record(cell, Text(items[offset]), command_old, pass_changes)
            self._graph.set_edges(cell, frozenset({origin}))
        for origin in desired:
            if origin in new_regions:
                value: Value = Text(desired[origin].items[0])
            else:
                value = Error(ErrorKind.SPILL, "spill blocked by existing content")
            self._record(origin, value, command_old, pass_changes)

    def _gen_value(self, plan: GenPlan, origin: CellAddress) -> Union[Value, ListOutcome]:
        if plan.memo_key in self._memo:
            memoized = self._memo[plan.memo_key]
            if isinstance(memoized, tuple):
                direction = (
                    SpillDirection.ROW
                    if plan.shape is OutputShape.LIST_ROW
                    else SpillDirection.COLUMN
                )
                return ListOutcome(items=memoized, direction=direction)
            return memoized
        rid = self._inflight.get(plan.memo_key)
        if rid is None:
            rid = next(self._rid_counter)
            self._inflight[plan.memo_key] = rid
            self._ledger[rid] = LedgerEntry(
                memo_key=plan.memo_key,
                plan=plan,
                origin=origin,
                content_generation=self._content_generation.get(origin, 0),
            )
            self._outbox.append(DispatchItem(request_id=rid, plan=plan))
        self._waiters.setdefault(plan.memo_key, set()).add(origin)
        return Pending(request_id=rid)

    def _tarjan(self, nodes: set[CellAddress]) -> list[list[CellAddress]]:
        """SCCs of the closure over read edges, dependencies first."""
        order: list[list[CellAddress]] = []
        index: dict[CellAddress, int] = {}
        low: dict[CellAddress, int] = {}
        on_stack: set[CellAddress] = set()
        stack: list[CellAddress] = []
        counter = itertools.count()

        def neighbors(node: CellAddress) -> list[CellAddress]:
            return sorted(
                (m for m in self._graph.reads(node) if m in nodes), key=doc_order
            )

        for root in sorted(nodes, key=doc_order):
            if root in index:
                continue
            index[root] = low[root] = next(counter)
            stack.append(root)
            on_stack.add(root)
            path: list[tuple[CellAddress, Iterable[CellAddress]]] = [
                (root, iter(neighbors(root)))
            ]
            while path:
                node, it = path[-1]
                descended = False
                for child in it:
                    if child not in index:
                        index[child] = low[child] = next(counter)
                        stack.append(child)
                        on_stack.add(child)
                        path.append((child, iter(neighbors(child))))
                        descended = True
                        break
                    if child in on_stack:
                        low[node] = min(low[node], index[child])
                if descended:
                    continue
                path.pop()
                if path:
                    parent = path[-1][0]
                    low[parent] = min(low[parent], low[node])
                if low[node] == index[node]:
                    scc = []
                    while True:
                        member = stack.pop()
                        on_stack.discard(member)
                        scc.append(member)
                        if member == node:
                            break
                    order.append(scc)
        return order


class _Context:
    """Evaluation context bound to the cell being evaluated."""

    def __init__(self, engine: Engine, addr: CellAddress):
        self._engine = engine
        self._addr = addr
        self.current_sheet = addr.sheet
        self.settings = engine.workbook.settings

    def sheet_exists(self, name: str) -> bool:
        return self._engine.workbook.has_sheet(name)

    def cell_value(self, addr: CellAddress) -> Value:
        return self._engine._values.get(addr, BLANK)

    def gen_value(self, plan: GenPlan) -> Union[Value, ListOutcome]:
        return self._engine._gen_value(plan, self._addr)


_NUMBER_ENTRY = re.compile(r"[+-]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")


def parse_entry(raw: str) -> CellContent:
    """Classify raw text input the way a cell editor would."""
    if raw == "":
        return EMPTY
    if raw.startswith("="):
        return Formula(raw, parse_source(raw))
    if _NUMBER_ENTRY.fullmatch(raw.strip()):
        return Literal(float(raw))
    return Literal(raw)


def _shift_content(content: CellContent, delta_col: int, delta_row: int) -> CellContent:
    if isinstance(content, Formula):
        ast = rewrite_refs(content.ast, delta_col, delta_row)
        return Formula(serialize(ast), ast)
    return content
