"""Headless driver: evaluate workbooks, run the server, script constructors.

Exit codes for ``eval``: 0 clean, 1 error values present (without
--allow-errors), 2 load failure, 3 unresolved pending at the timeout.
Kit subcommands exit 4 on constructor errors.
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

import click

from .engine.cells import CellAddress, Formula, GridRange, Literal
from .engine.values import Blank, Error, Image, Number, Pending, Text
from .engine.workbook import Workbook
from .formula.nodes import format_number, letters_to_col
from .httpapi import WorkbookSession, create_app
from .kit.builders import (
    build_cfg_slider,
    build_seed_grid,
    designate_power_cell,
    expand_template,
)
from .kit.model import (
    CellRangeSource,
    GenerativeList,
    KitError,
    LiteralText,
    ManualList,
    PowerRole,
    PromptTemplate,
    Slot,
)
from .runtime import build_runtime
from .store.fileformat import (
    FormatError,
    VersionError,
    load_workbook,
    save_workbook,
)

import re as _re

_A1_RE = _re.compile(r"([A-Za-z]{1,3})([0-9]+)")


def _parse_a1(sheet: str, text: str) -> CellAddress:
    m = _A1_RE.fullmatch(text)
    if m is None:
        raise click.BadParameter(f"bad cell address {text!r}")
    return CellAddress(sheet, letters_to_col(m.group(1)), int(m.group(2)) - 1)


def _parse_range(sheet: str, text: str) -> GridRange:
    parts = text.split(":")
    if len(parts) > 2:
        raise click.BadParameter(f"bad range {text!r}")
    start = _parse_a1(sheet, parts[0])
    end = _parse_a1(sheet, parts[-1])
    return GridRange(
        sheet,
        min(start.col, end.col),
        min(start.row, end.row),
        max(start.col, end.col),
        max(start.row, end.row),
    )


def _load_or_exit(path: Path) -> Workbook:
    try:
        return load_workbook(path.read_bytes())
    except (OSError, FormatError, VersionError) as exc:
        click.echo(f"error: cannot load {path}: {exc}", err=True)
        sys.exit(2)


@click.group()
def main() -> None:
    """Grid engine with generative formulas, a caching proxy, and scripted
    exploration structures."""


@main.command("eval")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--mock", is_flag=True, help="Force deterministic offline providers.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Directory for the manifest and exported images.")
@click.option("--timeout", "timeout_secs", type=float, default=120.0,
              show_default=True, help="Quiescence timeout in seconds.")
@click.option("--allow-errors", is_flag=True, help="Exit 0 even with error cells.")
@click.option("--cache-dir", type=click.Path(path_type=Path), default=None)
def cmd_eval(
    file: Path,
    mock: bool,
    out_dir: Path | None,
    timeout_secs: float,
    allow_errors: bool,
    cache_dir: Path | None,
) -> None:
    """Evaluate FILE to quiescence and export a value manifest."""
    workbook = _load_or_exit(file)
    runtime = build_runtime(workbook, mock=True if mock else None, cache_dir=cache_dir)
    engine = runtime.engine
    engine.recompute_all()
    if not engine.run_to_quiescence(timeout_secs):
        click.echo(
            f"error: {len(engine.pending_cells())} cells still pending after "
            f"{timeout_secs:g}s",
            err=True,
        )
        sys.exit(3)

    values = engine.values_snapshot()
    error_cells = [
        addr for addr, value in values.items() if isinstance(value, Error)
    ]
    if out_dir is not None:
        _export(out_dir, values, runtime)
    for addr in sorted(error_cells, key=lambda a: (a.sheet, a.row, a.col)):
        value = values[addr]
        assert isinstance(value, Error)
        click.echo(
            f"{addr.sheet}!{addr.to_a1()}: {value.kind.value} {value.message}",
            err=True,
        )
    if error_cells and not allow_errors:
        sys.exit(1)


def _manifest_lines(values: dict[CellAddress, object]) -> list[str]:
    lines = ["gensheet-manifest 1"]
    for addr in sorted(values, key=lambda a: (a.sheet, a.row, a.col)):
        value = values[addr]
        if isinstance(value, Blank):
            continue
        prefix = f'cell "{addr.sheet}" {addr.to_a1()}'
        if isinstance(value, Text):
            lines.append(f"{prefix} text {value.text!r}")
        elif isinstance(value, Number):
            lines.append(f"{prefix} number {format_number(value.value)}")
        elif isinstance(value, Image):
            lines.append(
                f"{prefix} image {value.ref.id} blobs/{value.ref.id}.png "
                f"{value.ref.width} {value.ref.height}"
            )
        elif isinstance(value, Pending):
            lines.append(f"{prefix} pending {value.request_id}")
        elif isinstance(value, Error):
            lines.append(f"{prefix} error {value.kind.value} {value.message!r}")
    return lines


def _export(out_dir: Path, values: dict, runtime) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    blob_dir = out_dir / "blobs"
    blob_dir.mkdir(exist_ok=True)
    manifest = out_dir / "manifest.txt"
    manifest.write_text("\n".join(_manifest_lines(values)) + "\n", encoding="utf-8")
    exported: set[str] = set()
    for value in values.values():
        if isinstance(value, Image) and value.ref.id not in exported:
            exported.add(value.ref.id)
            source = runtime.service.blobs.path_for(value.ref.id)
            if source.is_file():
                shutil.copyfile(source, blob_dir / f"{value.ref.id}.png")


@main.command("serve")
@click.option("--file", "file_path", type=click.Path(path_type=Path), default=None,
              help="Workbook to serve; a fresh one is created when omitted.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--mock", is_flag=True, help="Force deterministic offline providers.")
@click.option("--cache-dir", type=click.Path(path_type=Path), default=None)
@click.option("--parallelism", type=int, default=None,
              help="Upstream dispatch limit (default: PROXY_PARALLELISM or 8).")
@click.option("--ui", "ui_dir", type=click.Path(path_type=Path), default=None,
              help="Static directory for the browser UI.")
def cmd_serve(
    file_path: Path | None,
    host: str,
    port: int,
    mock: bool,
    cache_dir: Path | None,
    parallelism: int | None,
    ui_dir: Path | None,
) -> None:
    """Run the caching proxy plus the workbook API."""
    import uvicorn

    if file_path is not None and file_path.exists():
        workbook = _load_or_exit(file_path)
    else:
        workbook = Workbook()
        workbook.add_sheet("Sheet1")
    runtime = build_runtime(
        workbook,
        mock=True if mock else None,
        cache_dir=cache_dir,
        parallelism=parallelism,
        threaded=True,
    )
    runtime.engine.recompute_all()
    session = WorkbookSession(runtime, path=file_path)
    app = create_app(session, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.group("kit")
def kit_group() -> None:
    """Apply exploration constructors to a workbook file."""


def _kit_io(file: Path) -> tuple[Workbook, object]:
    workbook = _load_or_exit(file)
    runtime = build_runtime(workbook, mock=True)
    runtime.engine.recompute_all()
    return workbook, runtime


def _kit_save(file: Path, workbook: Workbook) -> None:
    file.write_bytes(save_workbook(workbook))


def _kit_fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(4)


@kit_group.command("seed-grid")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--sheet", default="Sheet1", show_default=True)
@click.option("--prompts", required=True, help="Prompt column range, e.g. A2:A6.")
@click.option("--seeds", required=True, help="Comma-separated seed integers.")
@click.option("--anchor", required=True, help="Top-left of the seed header row.")
@click.option("--cfg", type=float, default=None)
def kit_seed_grid(file: Path, sheet: str, prompts: str, seeds: str, anchor: str,
                  cfg: float | None) -> None:
    workbook, runtime = _kit_io(file)
    try:
        seed_values = [int(s) for s in seeds.split(",") if s.strip()]
        build_seed_grid(
            runtime.engine,
            _parse_range(sheet, prompts),
            seed_values,
            _parse_a1(sheet, anchor),
            cfg=cfg,
        )
    except (KitError, ValueError) as exc:
        _kit_fail(str(exc))
    _kit_save(file, workbook)


@kit_group.command("cfg-slider")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--sheet", default="Sheet1", show_default=True)
@click.option("--prompt", "prompt_text", default=None, help="Fixed prompt text.")
@click.option("--prompt-ref", default=None, help="Cell holding the prompt.")
@click.option("--seed", type=int, default=None)
@click.option("--cfgs", required=True, help="Comma-separated ascending cfg values.")
@click.option("--anchor", required=True)
def kit_cfg_slider(file: Path, sheet: str, prompt_text: str | None,
                   prompt_ref: str | None, seed: int | None, cfgs: str,
                   anchor: str) -> None:
    workbook, runtime = _kit_io(file)
    try:
        if prompt_ref:
            prompt: object = _parse_a1(sheet, prompt_ref)
        elif prompt_text:
            prompt = prompt_text
        else:
            raise KitError("one of --prompt / --prompt-ref is required")
        cfg_values = [float(v) for v in cfgs.split(",") if v.strip()]
        build_cfg_slider(
            runtime.engine, prompt, seed, cfg_values, _parse_a1(sheet, anchor)
        )
    except (KitError, ValueError) as exc:
        _kit_fail(str(exc))
    _kit_save(file, workbook)


@kit_group.command("power-cell")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--sheet", default="Sheet1", show_default=True)
@click.option("--addr", "address", required=True)
@click.option("--role", type=click.Choice(["seed", "cfg"]), required=True)
@click.option("--value", type=float, default=None)
@click.option("--label", default=None)
def kit_power_cell(file: Path, sheet: str, address: str, role: str,
                   value: float | None, label: str | None) -> None:
    workbook, runtime = _kit_io(file)
    try:
        designate_power_cell(
            runtime.engine,
            _parse_a1(sheet, address),
            PowerRole(role),
            value=value,
            label=label,
        )
    except (KitError, ValueError) as exc:
        _kit_fail(str(exc))
    _kit_save(file, workbook)


def _parse_slot_spec(spec: str):
    """NAME=manual:a|b|c, NAME=range:A1:A5, NAME=FN:input[:length]."""
    if "=" not in spec:
        raise KitError(f"bad slot spec {spec!r} (expected NAME=SOURCE)")
    name, source = spec.split("=", 1)
    parts = source.split(":")
    kind = parts[0]
    if kind == "manual":
        items = tuple(i for i in ":".join(parts[1:]).split("|") if i)
        return name, ManualList(items=items)
    if kind == "range":
        return name, ("range", ":".join(parts[1:]))
    function = kind.upper()
    if len(parts) < 2:
        raise KitError(f"slot {name!r}: generative source needs an input")
    if len(parts) >= 3 and parts[-1].isdigit():
        length = int(parts[-1])
        text = ":".join(parts[1:-1])
    else:
        length = 1 if function in ("EMBELLISH", "GPT") else 5
        text = ":".join(parts[1:])
    return name, GenerativeList(function=function, input=text, length=length)


@kit_group.command("template")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--sheet", default="Sheet1", show_default=True)
@click.option("--anchor", required=True)
@click.option("--slot", "slots", multiple=True,
              help="Slot source, e.g. style=DIVERGENTS:surrealism:5")
@click.option("--text", "texts", multiple=True,
              help="Literal segment placed in template order before slots.")
@click.option("--column", "columns", multiple=True, help="Slot riding the column axis.")
@click.option("--row", "rows", multiple=True, help="Slot riding the row axis.")
@click.option("--fix", "fixes", multiple=True, help="Fixed slot item, NAME=INDEX.")
@click.option("--seeds", default=None, help="Comma-separated seeds for an image axis.")
@click.option("--seed", type=int, default=None, help="Single seed for all images.")
@click.option("--cfg", type=float, default=None)
def kit_template(file: Path, sheet: str, anchor: str, slots: tuple[str, ...],
                 texts: tuple[str, ...], columns: tuple[str, ...],
                 rows: tuple[str, ...], fixes: tuple[str, ...],
                 seeds: str | None, seed: int | None, cfg: float | None) -> None:
    workbook, runtime = _kit_io(file)
    try:
        if not slots:
            raise KitError("at least one --slot is required")
        slot_sources = {}
        order = []
        for spec in slots:
            name, source = _parse_slot_spec(spec)
            if isinstance(source, tuple):  # deferred range parse needs the sheet
                source = CellRangeSource(_parse_range(sheet, source[1]))
            slot_sources[name] = source
            order.append(name)
        segments: list = [LiteralText(t) for t in texts]
        segments += [Slot(name) for name in order]
        layout: dict[str, object] = {}
        for name in columns:
            layout[name] = "column"
        for name in rows:
            layout[name] = "row"
        for fix in fixes:
            name, _, index = fix.partition("=")
            layout[name] = int(index or 0)
        seed_arg: object = seed
        if seeds:
            seed_arg = [int(s) for s in seeds.split(",") if s.strip()]
        expand_template(
            runtime.engine,
            PromptTemplate(segments=tuple(segments), slots=slot_sources),
            layout,  # type: ignore[arg-type]
            _parse_a1(sheet, anchor),
            seeds=seed_arg,  # type: ignore[arg-type]
            cfg=cfg,
        )
    except (KitError, ValueError) as exc:
        _kit_fail(str(exc))
    _kit_save(file, workbook)


@main.command("new")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--sheet", default="Sheet1", show_default=True)
def cmd_new(file: Path, sheet: str) -> None:
    """Write an empty workbook file."""
    workbook = Workbook()
    workbook.add_sheet(sheet)
    file.write_bytes(save_workbook(workbook))


@main.command("set")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--sheet", default="Sheet1", show_default=True)
@click.option("--cell", "cells", multiple=True, required=True,
              help="ADDRESS=raw input, e.g. A2='portrait of a woman'.")
def cmd_set(file: Path, sheet: str, cells: tuple[str, ...]) -> None:
    """Write raw cell inputs into a workbook file."""
    workbook, runtime = _kit_io(file)
    try:
        for spec in cells:
            address, _, raw = spec.partition("=")
            if not _A1_RE.fullmatch(address):
                raise KitError(f"bad cell spec {spec!r}")
            runtime.engine.enter(_parse_a1(sheet, address.strip()), raw)
    except (KitError, ValueError) as exc:
        _kit_fail(str(exc))
    _kit_save(file, workbook)


if __name__ == "__main__":
    main()
