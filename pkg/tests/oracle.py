"""Independent reference evaluator: recompute every cell from scratch.

Used to check the engine's incremental recomputation. Deliberately avoids
the engine's machinery: no dependency bookkeeping, no memo, no dispatch.
Each pass re-derives edges from the formulas, orders cells by its own SCC
pass, evaluates everything, then re-solves spill placement; passes repeat
until the grid stops changing. Generative calls hit the offline providers
directly and synchronously.
"""

from __future__ import annotations

from gensheet.engine.cells import CellAddress, Empty, Formula, Literal
from gensheet.engine.spill import SpillDirection
from gensheet.engine.values import (
    BLANK,
    Blank,
    Error,
    ErrorKind,
    Image,
    Number,
    Text,
)
from gensheet.formula.nodes import (
    Binary,
    Call,
    MAX_COL,
    MAX_ROW,
    NumLit,
    Range,
    Ref,
    RefError,
    TextLit,
    format_number,
)
from gensheet.functions.arrays import parse_array_literal
from gensheet.functions.messages import build_list_request, build_scalar_request
from gensheet.functions.mockllm import MockLlmUpstream
from gensheet.functions.model import (
    GenerationKey,
    ImageRef,
    KeyValidationError,
    MAX_SEED,
)
from gensheet.functions.registry import (
    DEFAULT_LIST_LENGTH,
    FunctionKind,
    OutputShape,
    lookup,
)

_llm = MockLlmUpstream()

_MAX_PASSES = 32


def full_recompute(workbook) -> dict[CellAddress, object]:
    """All non-blank values for the workbook's current contents."""
    contents = {
        addr: content
        for addr, content in workbook.iter_cells()
        if not isinstance(content, Empty)
    }
    env = _Env(workbook)
    values: dict[CellAddress, object] = {}
    placements: dict[CellAddress, tuple[tuple[str, ...], SpillDirection]] = {}
    for _ in range(_MAX_PASSES):
        new_values, lists = _evaluate_all(contents, placements, env, values)
        new_placements = _solve(lists, contents, env)
        _apply_spill_values(new_values, new_placements, lists)
        if new_values == values and new_placements == placements:
            break
        values, placements = new_values, new_placements
    return {a: v for a, v in values.items() if v != BLANK}


class _Env:
    def __init__(self, workbook):
        self.workbook = workbook
        self.sheets = set(workbook.sheet_names())
        self.settings = workbook.settings


def _edges(contents, placements) -> dict[CellAddress, set[CellAddress]]:
    edges: dict[CellAddress, set[CellAddress]] = {}
    for addr, content in contents.items():
        if isinstance(content, Formula):
            edges[addr] = set(_static_reads(content.ast, addr.sheet))
    for origin, (items, direction) in placements.items():
        for offset in range(1, len(items)):
            child = _region_cell(origin, direction, offset)
            edges.setdefault(child, set()).add(origin)
    return edges


def _region_cell(origin, direction, offset):
    if direction is SpillDirection.COLUMN:
        return CellAddress(origin.sheet, origin.col, origin.row + offset)
    return CellAddress(origin.sheet, origin.col + offset, origin.row)


def _static_reads(ast, sheet):
    out = []
    if isinstance(ast, Ref):
        out.append(CellAddress(ast.ref.sheet or sheet, ast.ref.col, ast.ref.row))
    elif isinstance(ast, Range):
        range_sheet = ast.start.sheet or sheet
        for row in range(ast.start.row, ast.end.row + 1):
            for col in range(ast.start.col, ast.end.col + 1):
                out.append(CellAddress(range_sheet, col, row))
    elif isinstance(ast, Binary):
        out += _static_reads(ast.left, sheet)
        out += _static_reads(ast.right, sheet)
    elif isinstance(ast, Call):
        for arg in ast.args:
            out += _static_reads(arg, sheet)
    return out


def _sccs(nodes, edges):
    """Iterative Tarjan, dependencies-first emission order."""
    order, index, low = [], {}, {}
    stack, on_stack = [], set()
    counter = [0]

    def neighbors(n):
        return sorted(
            (m for m in edges.get(n, ()) if m in nodes),
            key=lambda a: (a.sheet, a.row, a.col),
        )

    for root in sorted(nodes, key=lambda a: (a.sheet, a.row, a.col)):
        if root in index:
            continue
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        path = [(root, iter(neighbors(root)))]
        while path:
            node, it = path[-1]
            advanced = False
            for child in it:
                if child not in index:
                    index[child] = low[child] = counter[0]
                    counter[0] += 1
                    stack.append(child)
                    on_stack.add(child)
                    path.append((child, iter(neighbors(child))))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            path.pop()
            if path:
                low[path[-1][0]] = min(low[path[-1][0]], low[node])
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


def _evaluate_all(contents, placements, env, prev_values):
    edges = _edges(contents, placements)
    nodes = set(contents) | set(edges)
    for origin in placements:
        nodes.add(origin)
    values: dict[CellAddress, object] = {}
    lists: dict[CellAddress, tuple[tuple[str, ...], SpillDirection]] = {}
    for scc in _sccs(nodes, edges):
        cyclic = len(scc) > 1 or scc[0] in edges.get(scc[0], ())
        if cyclic:
            for member in scc:
                values[member] = Error(ErrorKind.CYCLE, "cycle")
            continue
        cell = scc[0]
        content = contents.get(cell)
        if isinstance(content, Formula):
            outcome = _eval(content.ast, cell.sheet, values, env)
            if isinstance(outcome, _ListOutcome):
                lists[cell] = (outcome.items, outcome.direction)
                # Same-pass readers see the previous iteration's settled
                # origin value; placement reassigns it after the pass.
                values[cell] = prev_values.get(cell, BLANK)
            else:
                values[cell] = outcome
        elif isinstance(content, Literal):
            values[cell] = (
                Text(content.value)
                if isinstance(content.value, str)
                else Number(float(content.value))
            )
        else:
            # spill child from the previous pass's geometry
            values[cell] = _spill_value(cell, placements)
    return values, lists


def _spill_value(cell, placements):
    for origin, (items, direction) in placements.items():
        for offset in range(1, len(items)):
            if _region_cell(origin, direction, offset) == cell:
                return Text(items[offset])
    return BLANK


def _solve(lists, contents, env):
    placements = {}
    taken = {}
    for origin in sorted(lists, key=lambda a: (a.sheet, a.row, a.col)):
        items, direction = lists[origin]
        cells = [_region_cell(origin, direction, i) for i in range(len(items))]
        last = cells[-1]
        ok = last.col <= MAX_COL and last.row <= MAX_ROW
        if ok:
            for cell in cells:
                if cell != origin and (
                    cell in contents or cell in taken or cell in lists
                ):
                    ok = False
                    break
        if ok and len(cells) > 1:
            reach = _transitive_reads(origin, contents, lists, placements)
            if any(cell in reach for cell in cells):
                ok = False
        if ok:
            placements[origin] = (items, direction)
            for cell in cells:
                taken[cell] = origin
    return placements


def _transitive_reads(origin, contents, lists, placements):
    seen = set()
    stack = [origin]
    child_edges = {}
    for o, (items, direction) in placements.items():
        for offset in range(1, len(items)):
            child_edges[_region_cell(o, direction, offset)] = o
    while stack:
        node = stack.pop()
        content = contents.get(node)
        reads = (
            _static_reads(content.ast, node.sheet)
            if isinstance(content, Formula)
            else []
        )
        if node in child_edges:
            reads.append(child_edges[node])
        for read in reads:
            if read not in seen:
                seen.add(read)
                stack.append(read)
    return seen


def _apply_spill_values(values, placements, lists):
    for origin, (items, direction) in placements.items():
        values[origin] = Text(items[0])
        for offset in range(1, len(items)):
            values[_region_cell(origin, direction, offset)] = Text(items[offset])
    for origin in lists:
        if origin not in placements:
            values[origin] = Error(ErrorKind.SPILL, "blocked")


class _ListOutcome:
    def __init__(self, items, direction):
        self.items = items
        self.direction = direction


def _text(value):
    if isinstance(value, Blank):
        return ""
    if isinstance(value, Text):
        return value.text
    if isinstance(value, Number):
        return format_number(value.value)
    if isinstance(value, Error):
        return value
    return Error(ErrorKind.VALUE, "image as text")


def _num(value):
    if isinstance(value, Number):
        return value.value
    if isinstance(value, Blank):
        return 0.0
    if isinstance(value, Text):
        try:
            return float(value.text)
        except ValueError:
            return Error(ErrorKind.VALUE, "not a number")
    if isinstance(value, Error):
        return value
    return Error(ErrorKind.VALUE, "image as number")


def _eval(ast, sheet, values, env):
    if isinstance(ast, TextLit):
        return Text(ast.text)
    if isinstance(ast, NumLit):
        return Number(ast.value)
    if isinstance(ast, RefError):
        return Error(ErrorKind.REF, "off grid")
    if isinstance(ast, Ref):
        target_sheet = ast.ref.sheet or sheet
        if target_sheet not in env.sheets:
            return Error(ErrorKind.REF, "unknown sheet")
        return values.get(
            CellAddress(target_sheet, ast.ref.col, ast.ref.row), BLANK
        )
    if isinstance(ast, Range):
        return Error(ErrorKind.VALUE, "range outside argument position")
    if isinstance(ast, Binary):
        left = _eval(ast.left, sheet, values, env)
        right = _eval(ast.right, sheet, values, env)
        if isinstance(left, _ListOutcome):
            left = Error(ErrorKind.VALUE, "list in scalar context")
        if isinstance(right, _ListOutcome):
            right = Error(ErrorKind.VALUE, "list in scalar context")
        for side in (left, right):
            if isinstance(side, Error):
                return side
        if ast.op == "&":
            lt, rt = _text(left), _text(right)
            if isinstance(lt, Error):
                return lt
            if isinstance(rt, Error):
                return rt
            return Text(lt + rt)
        ln, rn = _num(left), _num(right)
        if isinstance(ln, Error):
            return ln
        if isinstance(rn, Error):
            return rn
        if ast.op == "+":
            result = ln + rn
        elif ast.op == "-":
            result = ln - rn
        elif ast.op == "*":
            result = ln * rn
        else:
            if rn == 0:
                return Error(ErrorKind.VALUE, "division by zero")
            result = ln / rn
        if result != result or result in (float("inf"), float("-inf")):
            return Error(ErrorKind.VALUE, "overflow")
        return Number(result)
    assert isinstance(ast, Call)
    return _eval_call(ast, sheet, values, env)


def _eval_call(ast, sheet, values, env):
    spec = lookup(ast.name)
    if spec is None:
        return Error(ErrorKind.NAME, ast.name)
    args = []
    for index, node in enumerate(ast.args):
        if isinstance(node, Range):
            if not (spec.base_name == "LIST_COMPLETION" and index == 0):
                args.append(Error(ErrorKind.VALUE, "range not allowed"))
                continue
            range_sheet = node.start.sheet or sheet
            if range_sheet not in env.sheets:
                args.append(Error(ErrorKind.REF, "unknown sheet"))
                continue
            gathered = []
            failed = None
            for row in range(node.start.row, node.end.row + 1):
                for col in range(node.start.col, node.end.col + 1):
                    value = values.get(CellAddress(range_sheet, col, row), BLANK)
                    if isinstance(value, Error):
                        failed = value
                        break
                    if isinstance(value, Blank):
                        continue
                    text = _text(value)
                    if isinstance(text, Error):
                        failed = text
                        break
                    gathered.append(text)
                if failed:
                    break
            args.append(failed if failed else ("range", gathered))
            continue
        outcome = _eval(node, sheet, values, env)
        if isinstance(outcome, _ListOutcome):
            outcome = Error(ErrorKind.VALUE, "list in scalar context")
        args.append(outcome)
    if not spec.min_args <= len(args) <= spec.max_args:
        return Error(ErrorKind.VALUE, "arity")
    for arg in args:
        if isinstance(arg, Error):
            return arg

    def required_text(arg):
        if isinstance(arg, tuple):
            return Error(ErrorKind.VALUE, "range not allowed")
        text = _text(arg)
        if isinstance(text, Error):
            return text
        if not text.strip():
            return Error(ErrorKind.VALUE, "empty prompt")
        return text

    def integer(arg):
        number = _num(arg)
        if isinstance(number, Error):
            return number
        if number != int(number):
            return Error(ErrorKind.VALUE, "not an integer")
        return int(number)

    if spec.kind is FunctionKind.IMAGE:
        return args[0] if isinstance(args[0], Image) else Error(ErrorKind.VALUE, "not an image")

    if spec.kind is FunctionKind.TTI:
        prompt = required_text(args[0])
        if isinstance(prompt, Error):
            return prompt
        seed = env.settings.default_seed
        if len(args) >= 2:
            seed = integer(args[1])
            if isinstance(seed, Error):
                return seed
            if not 0 <= seed <= MAX_SEED:
                return Error(ErrorKind.VALUE, "seed range")
        cfg = env.settings.default_cfg
        if len(args) >= 3:
            cfg = _num(args[2])
            if isinstance(cfg, Error):
                return cfg
        try:
            key = GenerationKey(prompt=prompt, seed=seed, cfg=cfg)
        except KeyValidationError:
            return Error(ErrorKind.VALUE, "bad key")
        return Image(ImageRef.for_key(key))

    if spec.kind in (FunctionKind.GPT, FunctionKind.EMBELLISH):
        prompt = required_text(args[0])
        if isinstance(prompt, Error):
            return prompt
        return Text(_llm(build_scalar_request(spec, prompt)))

    assert spec.kind is FunctionKind.LLM_LIST
    first = args[0]
    if isinstance(first, tuple):
        if not first[1]:
            return Error(ErrorKind.VALUE, "empty range")
        user_input = list(first[1])
    else:
        text = required_text(first)
        if isinstance(text, Error):
            return text
        user_input = text
    length = DEFAULT_LIST_LENGTH
    if len(args) >= 2 and not isinstance(args[1], Blank):
        length = integer(args[1])
        if isinstance(length, Error):
            return length
        if not 1 <= length <= 1000:
            return Error(ErrorKind.VALUE, "length range")
    items = parse_array_literal(_llm(build_list_request(spec, user_input, length)))
    direction = (
        SpillDirection.ROW
        if spec.shape is OutputShape.LIST_ROW
        else SpillDirection.COLUMN
    )
    return _ListOutcome(tuple(items[:length]), direction)
