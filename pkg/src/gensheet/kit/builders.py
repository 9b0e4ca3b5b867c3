"""Constructors for the exploration structures built by hand in practice:
seed grids, cfg sliders, power cells, and expanded prompt templates.

Every constructor writes only ordinary cell contents (formulas and
literals), so the resulting sheet keeps working if the kit is discarded;
the only registries outside the grid are power cells and the token bank.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence, Union

from ..engine.cells import CellAddress, CellContent, Formula, GridRange, Literal
from ..engine.engine import ChangeSet, Engine
from ..formula.nodes import Binary, Call, CellRef, FormulaAst, NumLit, Ref, TextLit, serialize
from ..functions.model import MAX_SEED, format_cfg
from ..functions.registry import FunctionKind, OutputShape, lookup
from .model import (
    AxisSource,
    CellRangeSource,
    GenerativeList,
    InvalidAxis,
    InvalidValue,
    LiteralText,
    ManualList,
    PlacementError,
    PowerCell,
    PowerRole,
    PromptTemplate,
    Slot,
    TooManyAxes,
)

# How prompt segments join: the comma-separated modifier style of prompt
# language ("subject, style, era").
SEGMENT_JOINER = ", "

SeedSpec = Union[int, CellAddress, None]
CfgSpec = Union[float, CellAddress, None]


def _formula(ast: FormulaAst) -> Formula:
    return Formula(serialize(ast), ast)


def _abs_ref(addr: CellAddress, sheet: str) -> Ref:
    return Ref(
        CellRef(
            col=addr.col,
            row=addr.row,
            col_absolute=True,
            row_absolute=True,
            sheet=addr.sheet if addr.sheet != sheet else None,
        )
    )


def _require_free(engine: Engine, cells: Sequence[CellAddress]) -> None:
    for addr in cells:
        if engine.workbook.has_user_content(addr) or engine.is_spill_child(addr):
            raise PlacementError(f"target cell {addr.sheet}!{addr.to_a1()} is occupied")


def _power_ref(engine: Engine, role: PowerRole, sheet: str) -> Ref | None:
    for cell in engine.workbook.power_cells.values():
        if cell.role is role:
            return _abs_ref(cell.addr, sheet)
    return None


def _seed_expr(engine: Engine, seed: SeedSpec, sheet: str) -> FormulaAst | None:
    if isinstance(seed, CellAddress):
        return _abs_ref(seed, sheet)
    if seed is not None:
        if not 0 <= int(seed) <= MAX_SEED:
            raise InvalidValue(f"seed out of range: {seed}")
        return NumLit(float(int(seed)))
    return _power_ref(engine, PowerRole.SEED, sheet)


def _cfg_expr(engine: Engine, cfg: CfgSpec, sheet: str) -> FormulaAst | None:
    if isinstance(cfg, CellAddress):
        return _abs_ref(cfg, sheet)
    if cfg is not None:
        format_cfg(float(cfg))  # range/precision validation
        return NumLit(float(cfg))
    return _power_ref(engine, PowerRole.CFG, sheet)


def _tti_call(
    prompt: FormulaAst, seed: FormulaAst | None, cfg: FormulaAst | None, default_seed: int
) -> Call:
    args: list[FormulaAst] = [prompt]
    if seed is None and cfg is not None:
        seed = NumLit(float(default_seed))
    if seed is not None:
        args.append(seed)
    if cfg is not None:
        args.append(cfg)
    return Call("TTI", tuple(args))


# -- seed grid ----------------------------------------------------------------


def build_seed_grid(
    engine: Engine,
    prompt_column: GridRange,
    seeds: Sequence[int],
    anchor: CellAddress,
    cfg: CfgSpec = None,
) -> ChangeSet:
    """Seed header row at the anchor plus a prompts x seeds block of image
    formulas; every image in a column shares its header seed, every image in
    a row shares its prompt."""
    if not seeds:
        raise InvalidAxis("seed grid needs at least one seed")
    if prompt_column.width != 1:
        raise InvalidAxis("prompt range must be a single column")
    for seed in seeds:
        if not 0 <= int(seed) <= MAX_SEED:
            raise InvalidValue(f"seed out of range: {seed}")
    sheet = anchor.sheet
    prompts = prompt_column.cells()
    targets: list[CellAddress] = []
    entries: list[tuple[CellAddress, CellContent]] = []
    for j, seed in enumerate(seeds):
        header = CellAddress(sheet, anchor.col + j, anchor.row)
        targets.append(header)
        entries.append((header, Literal(float(int(seed)))))
    cfg_expr = _cfg_expr(engine, cfg, sheet)
    for i, prompt_cell in enumerate(prompts):
        for j in range(len(seeds)):
            target = CellAddress(sheet, anchor.col + j, anchor.row + 1 + i)
            targets.append(target)
            prompt_ref = Ref(
                CellRef(
                    col=prompt_cell.col,
                    row=prompt_cell.row,
                    col_absolute=True,
                    row_absolute=False,
                    sheet=prompt_cell.sheet if prompt_cell.sheet != sheet else None,
                )
            )
            seed_ref = Ref(
                CellRef(
                    col=anchor.col + j,
                    row=anchor.row,
                    col_absolute=False,
                    row_absolute=True,
                )
            )
            call = _tti_call(
                prompt_ref, seed_ref, cfg_expr, engine.settings.default_seed
            )
            entries.append((target, _formula(call)))
    _require_free(engine, targets)
    return engine.set_cells(entries)


# -- cfg slider ----------------------------------------------------------------


def build_cfg_slider(
    engine: Engine,
    prompt: Union[str, CellAddress],
    seed: SeedSpec,
    cfg_values: Sequence[float],
    anchor: CellAddress,
) -> ChangeSet:
    """One column of ascending cfg literals with an adjacent column of image
    formulas pinned to a single prompt and seed."""
    if not cfg_values:
        raise InvalidAxis("cfg slider needs at least one value")
    values = [float(v) for v in cfg_values]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InvalidAxis("cfg values must be strictly ascending")
    for value in values:
        format_cfg(value)  # range/precision validation
    sheet = anchor.sheet
    if isinstance(prompt, CellAddress):
        prompt_expr: FormulaAst = _abs_ref(prompt, sheet)
    else:
        if not prompt.strip():
            raise InvalidValue("slider prompt must be non-empty")
        prompt_expr = TextLit(prompt)
    seed_expr = _seed_expr(engine, seed, sheet)
    entries: list[tuple[CellAddress, CellContent]] = []
    targets: list[CellAddress] = []
    for i, value in enumerate(values):
        cfg_cell = CellAddress(sheet, anchor.col, anchor.row + i)
        image_cell = CellAddress(sheet, anchor.col + 1, anchor.row + i)
        targets += [cfg_cell, image_cell]
        entries.append((cfg_cell, Literal(value)))
        cfg_ref = Ref(CellRef(col=anchor.col, row=anchor.row + i))
        call = _tti_call(prompt_expr, seed_expr, cfg_ref, engine.settings.default_seed)
        entries.append((image_cell, _formula(call)))
    _require_free(engine, targets)
    return engine.set_cells(entries)


# -- power cells ----------------------------------------------------------------


def designate_power_cell(
    engine: Engine,
    addr: CellAddress,
    role: PowerRole,
    value: float | None = None,
    label: str | None = None,
) -> PowerCell:
    """Register a numeric cell as the global seed or cfg; later kit builds
    reference it absolutely, so updating it regenerates their images."""
    content = engine.workbook.content(addr)
    current: float | None
    if isinstance(content, Literal) and isinstance(content.value, float):
        current = content.value
    elif engine.workbook.has_user_content(addr):
        raise InvalidValue("power cells must hold a number or be empty")
    else:
        current = None
    if value is None:
        value = current
    if value is None:
        raise InvalidValue("an empty cell needs an initial value")
    if role is PowerRole.SEED:
        if value != int(value) or not 0 <= int(value) <= MAX_SEED:
            raise InvalidValue(f"seed power cell needs an integer seed, got {value}")
    else:
        format_cfg(float(value))
    name = label or f"{role.value} @{addr.sheet}!{addr.to_a1()}"
    if name in engine.workbook.power_cells:
        raise InvalidValue(f"power cell label {name!r} already in use")
    power = PowerCell(label=name, addr=addr, role=role)
    engine.set_cell(addr, Literal(float(value)))
    engine.workbook.power_cells[name] = power
    return power


def update_power_cell(engine: Engine, label: str, value: float) -> ChangeSet:
    power = engine.workbook.power_cells.get(label)
    if power is None:
        raise InvalidValue(f"no power cell labeled {label!r}")
    if power.role is PowerRole.SEED and value != int(value):
        raise InvalidValue("seed power cells take integer values")
    return engine.set_cell(power.addr, Literal(float(value)))


# -- prompt templates --------------------------------------------------------------


def axis_length(source: AxisSource) -> int:
    if isinstance(source, ManualList):
        if not source.items:
            raise InvalidAxis("manual axis has no items")
        return len(source.items)
    if isinstance(source, GenerativeList):
        if source.length < 1:
            raise InvalidAxis("generative axis needs length >= 1")
        return source.length
    count = source.range.width * source.range.height
    if count < 1:
        raise InvalidAxis("range axis is empty")
    return count


def _axis_list_spec(source: GenerativeList, transposed: bool):
    spec = lookup(source.function)
    if spec is None:
        raise InvalidValue(f"unknown function {source.function!r}")
    if spec.kind is not FunctionKind.LLM_LIST:
        raise InvalidValue(f"{source.function} is not a list function")
    if transposed and spec.shape is OutputShape.LIST_COLUMN:
        twin = lookup(f"{spec.base_name}_T")
        assert twin is not None
        return twin
    if not transposed and spec.shape is OutputShape.LIST_ROW:
        base = lookup(spec.base_name)
        assert base is not None
        return base
    return spec


def expand_template(
    engine: Engine,
    template: PromptTemplate,
    layout: dict[str, Union[str, int]],
    anchor: CellAddress,
    seeds: Union[Sequence[int], SeedSpec] = None,
    cfg: CfgSpec = None,
) -> ChangeSet:
    """Materialize axis sources, write one concatenated prompt per axis
    combination, and a parallel block of image formulas consuming them.

    Layout maps each slot to "column", "row", or a fixed item index. At most
    two slots ride grid axes; slots sharing an axis advance together and must
    resolve to the same length. A seed list adds an image-only axis
    orthogonal to a column-only prompt layout.
    """
    sheet = anchor.sheet
    order = template.slot_order()
    for slot_id in layout:
        if slot_id not in template.slots:
            raise InvalidValue(f"layout names unknown slot {slot_id!r}")
    column_slots = [s for s in order if layout.get(s) == "column"]
    row_slots = [s for s in order if layout.get(s) == "row"]
    fixed_slots = [s for s in order if s not in column_slots and s not in row_slots]
    if len(column_slots) + len(row_slots) > 2:
        raise TooManyAxes("at most two slots may ride grid axes")

    n = _shared_length([template.slots[s] for s in column_slots]) if column_slots else 1
    p = _shared_length([template.slots[s] for s in row_slots]) if row_slots else 1

    seed_list: list[int] | None = None
    seed_spec: SeedSpec = None
    if isinstance(seeds, (list, tuple)):
        seed_list = [int(s) for s in seeds]
        if not seed_list:
            raise InvalidAxis("seed axis has no values")
        if row_slots:
            raise TooManyAxes("a seed axis needs a column-only prompt layout")
    else:
        seed_spec = seeds

    for slot_id in fixed_slots:
        source = template.slots[slot_id]
        index = layout.get(slot_id, 0)
        if not isinstance(index, int):
            raise InvalidValue(f"fixed slot {slot_id!r} needs an item index")
        if isinstance(source, GenerativeList):
            spec = lookup(source.function)
            if spec is None:
                raise InvalidValue(f"unknown function {source.function!r}")
            if spec.kind not in (
                FunctionKind.LLM_LIST,
                FunctionKind.EMBELLISH,
                FunctionKind.GPT,
            ):
                raise InvalidValue(f"{source.function} cannot source a slot")
        if index >= axis_length(source):
            raise InvalidAxis(f"fixed index {index} exceeds slot {slot_id!r}")

    header_band = max(1, len(row_slots))
    header_row = anchor.row + header_band - 1
    body_row0 = anchor.row + header_band
    fixed_col0 = anchor.col
    strip_col0 = fixed_col0 + len(fixed_slots)
    prompt_col0 = strip_col0 + len(column_slots)
    image_col0 = prompt_col0 + p
    image_cols = len(seed_list) if seed_list else p

    entries: list[tuple[CellAddress, CellContent]] = []
    targets: list[CellAddress] = []
    slot_expr: dict[str, list[FormulaAst] | FormulaAst] = {}

    # Fixed slots: staged in their own columns on the header row.
    for f, slot_id in enumerate(fixed_slots):
        source = template.slots[slot_id]
        index = int(layout.get(slot_id, 0))
        stage = CellAddress(sheet, fixed_col0 + f, header_row)
        if isinstance(source, ManualList):
            entries.append((stage, Literal(source.items[index])))
            targets.append(stage)
            slot_expr[slot_id] = _abs_ref(stage, sheet)
        elif isinstance(source, CellRangeSource):
            cell = source.range.cells()[index]
            slot_expr[slot_id] = _abs_ref(cell, sheet)
        else:
            call = _generative_call(source)
            entries.append((stage, _formula(call)))
            spec = lookup(source.function)
            assert spec is not None
            if spec.kind is FunctionKind.LLM_LIST:
                targets.extend(
                    CellAddress(sheet, stage.col, stage.row + k)
                    for k in range(source.length)
                )
            else:
                targets.append(stage)
            item = CellAddress(sheet, stage.col, stage.row + index)
            slot_expr[slot_id] = _abs_ref(item, sheet)

    # Column-axis slots: one strip column each, items running down the body.
    for c, slot_id in enumerate(column_slots):
        source = template.slots[slot_id]
        col = strip_col0 + c
        refs: list[FormulaAst] = []
        if isinstance(source, ManualList):
            for i, item in enumerate(source.items):
                cell = CellAddress(sheet, col, body_row0 + i)
                entries.append((cell, Literal(item)))
                targets.append(cell)
                refs.append(Ref(CellRef(col=col, row=body_row0 + i, col_absolute=True)))
        elif isinstance(source, CellRangeSource):
            for i, cell in enumerate(source.range.cells()):
                refs.append(
                    Ref(
                        CellRef(
                            col=cell.col,
                            row=cell.row,
                            col_absolute=True,
                            sheet=cell.sheet if cell.sheet != sheet else None,
                        )
                    )
                )
        else:
            spec = _axis_list_spec(source, transposed=False)
            origin = CellAddress(sheet, col, body_row0)
            call = Call(spec.name, (TextLit(source.input), NumLit(float(source.length))))
            entries.append((origin, _formula(call)))
            targets.extend(
                CellAddress(sheet, col, body_row0 + k) for k in range(source.length)
            )
            refs = [
                Ref(CellRef(col=col, row=body_row0 + i, col_absolute=True))
                for i in range(source.length)
            ]
        slot_expr[slot_id] = refs

    # Row-axis slots: one strip row each, items running across the prompt block.
    for r, slot_id in enumerate(row_slots):
        source = template.slots[slot_id]
        row = anchor.row + r
        refs = []
        if isinstance(source, ManualList):
            for j, item in enumerate(source.items):
                cell = CellAddress(sheet, prompt_col0 + j, row)
                entries.append((cell, Literal(item)))
                targets.append(cell)
                refs.append(Ref(CellRef(col=prompt_col0 + j, row=row, row_absolute=True)))
        elif isinstance(source, CellRangeSource):
            for cell in source.range.cells():
                refs.append(
                    Ref(
                        CellRef(
                            col=cell.col,
                            row=cell.row,
                            row_absolute=True,
                            sheet=cell.sheet if cell.sheet != sheet else None,
                        )
                    )
                )
        else:
            spec = _axis_list_spec(source, transposed=True)
            origin = CellAddress(sheet, prompt_col0, row)
            call = Call(spec.name, (TextLit(source.input), NumLit(float(source.length))))
            entries.append((origin, _formula(call)))
            targets.extend(
                CellAddress(sheet, prompt_col0 + k, row) for k in range(source.length)
            )
            refs = [
                Ref(CellRef(col=prompt_col0 + j, row=row, row_absolute=True))
                for j in range(source.length)
            ]
        slot_expr[slot_id] = refs

    # Prompt block: one concatenation formula per axis combination.
    prompt_cells: list[list[CellAddress]] = []
    for i in range(n):
        row_cells = []
        for j in range(p):
            target = CellAddress(sheet, prompt_col0 + j, body_row0 + i)
            ast = _prompt_ast(template, slot_expr, column_slots, row_slots, i, j)
            entries.append((target, _formula(ast)))
            targets.append(target)
            row_cells.append(target)
        prompt_cells.append(row_cells)

    # Image block: parallel to the prompts, or fanned across the seed axis.
    seed_expr = None if seed_list else _seed_expr(engine, seed_spec, sheet)
    cfg_expr = _cfg_expr(engine, cfg, sheet)
    if seed_list:
        for j, seed in enumerate(seed_list):
            header = CellAddress(sheet, image_col0 + j, header_row)
            entries.append((header, Literal(float(seed))))
            targets.append(header)
    for i in range(n):
        for j in range(image_cols):
            target = CellAddress(sheet, image_col0 + j, body_row0 + i)
            prompt_cell = prompt_cells[i][0 if seed_list else j]
            prompt_ref = Ref(
                CellRef(col=prompt_cell.col, row=prompt_cell.row, col_absolute=True)
            )
            if seed_list:
                this_seed: FormulaAst | None = Ref(
                    CellRef(col=image_col0 + j, row=header_row, row_absolute=True)
                )
            else:
                this_seed = seed_expr
            call = _tti_call(prompt_ref, this_seed, cfg_expr, engine.settings.default_seed)
            entries.append((target, _formula(call)))
            targets.append(target)

    _require_free(engine, targets)
    return engine.set_cells(entries)


def _shared_length(sources: list[AxisSource]) -> int:
    lengths = {axis_length(s) for s in sources}
    if len(lengths) != 1:
        raise InvalidAxis(f"slots sharing an axis must match in length, got {sorted(lengths)}")
    return lengths.pop()


def _generative_call(source: GenerativeList) -> Call:
    spec = lookup(source.function)
    assert spec is not None
    if spec.kind is FunctionKind.LLM_LIST:
        return Call(spec.name, (TextLit(source.input), NumLit(float(source.length))))
    return Call(spec.name, (TextLit(source.input),))


def _prompt_ast(
    template: PromptTemplate,
    slot_expr: dict[str, list[FormulaAst] | FormulaAst],
    column_slots: list[str],
    row_slots: list[str],
    i: int,
    j: int,
) -> FormulaAst:
    parts: list[FormulaAst] = []
    for segment in template.segments:
        if isinstance(segment, LiteralText):
            parts.append(TextLit(segment.text))
            continue
        expr = slot_expr[segment.slot_id]
        if isinstance(expr, list):
            index = i if segment.slot_id in column_slots else j
            parts.append(expr[index])
        else:
            parts.append(expr)
    ast = parts[0]
    for part in parts[1:]:
        ast = Binary("&", Binary("&", ast, TextLit(SEGMENT_JOINER)), part)
    return ast
