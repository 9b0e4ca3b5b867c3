"""The .gws workbook file format.

A UTF-8 text format, one record per line, built to diff cleanly:

    gws 1
    setting default_cfg 7.0
    setting default_seed 0
    setting providers "mock"
    sheet "Sheet1"
    cell A2 text "portrait of a woman"
    cell B2 formula "=TTI($A$2, 3424)"
    cell C1 number 3424
    powercell "global seed" "Sheet1" B1 seed
    token "style" dynamic {"function":"DIVERGENTS",...} ["item", ...]
    token "vaporwave" static "vaporwave"

Ordering is canonical (settings by key, sheets alphabetical, cells
row-major, power cells and tokens by label), so saving what was loaded
reproduces the bytes exactly. Computed values are never persisted; images
live in the proxy's blob store and formulas re-key them on recompute.
"""

from __future__ import annotations

import json
import re
from typing import Iterator

from ..engine.cells import CellAddress, Formula, GridRange, Literal
from ..engine.workbook import StaticToken, TokenBank, Workbook
from ..formula.nodes import format_number, letters_to_col
from ..formula.parser import ParseError, parse_source
from ..formula.tokens import LexError
from ..functions.model import KeyValidationError, WorkbookSettings
from ..kit.model import (
    AxisSource,
    CellRangeSource,
    DynamicToken,
    GenerativeList,
    ManualList,
    PowerCell,
    PowerRole,
)

FORMAT_VERSION = 1


class FormatError(ValueError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class VersionError(ValueError):
    pass


_A1_RE = re.compile(r"([A-Z]{1,3})([0-9]+)")
_RANGE_RE = re.compile(r"([A-Z]{1,3})([0-9]+)(?::([A-Z]{1,3})([0-9]+))?")


def _dump_json(value: object) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _a1(col: int, row: int) -> str:
    return CellAddress("", col, row).to_a1()


def _source_to_json(source: AxisSource) -> dict:
    if isinstance(source, ManualList):
        return {"kind": "manual", "items": list(source.items)}
    if isinstance(source, GenerativeList):
        return {
            "kind": "generative",
            "function": source.function,
            "input": source.input,
            "length": source.length,
        }
    return {"kind": "range", "sheet": source.range.sheet, "a1": source.range.to_a1()}


def _source_from_json(data: dict, line: int) -> AxisSource:
    kind = data.get("kind")
    if kind == "manual":
        return ManualList(items=tuple(data["items"]))
    if kind == "generative":
        return GenerativeList(
            function=data["function"], input=data["input"], length=int(data["length"])
        )
    if kind == "range":
        m = _RANGE_RE.fullmatch(data["a1"])
        if m is None:
            raise FormatError(line, f"bad range {data['a1']!r}")
        col0 = letters_to_col(m.group(1))
        row0 = int(m.group(2)) - 1
        col1 = letters_to_col(m.group(3)) if m.group(3) else col0
        row1 = int(m.group(4)) - 1 if m.group(4) else row0
        return CellRangeSource(GridRange(data["sheet"], col0, row0, col1, row1))
    raise FormatError(line, f"unknown source kind {kind!r}")


def save_workbook(workbook: Workbook) -> bytes:
    lines = [f"gws {FORMAT_VERSION}"]
    settings = workbook.settings
    lines.append(f"setting default_cfg {format_number(settings.default_cfg)}")
    lines.append(f"setting default_seed {settings.default_seed}")
    lines.append(f"setting providers {_dump_json(settings.providers)}")
    for name in sorted(workbook.sheets):
        lines.append(f"sheet {_dump_json(name)}")
        cells = workbook.sheets[name]
        for (col, row) in sorted(cells, key=lambda key: (key[1], key[0])):
            content = cells[(col, row)]
            a1 = _a1(col, row)
            if isinstance(content, Formula):
                lines.append(f"cell {a1} formula {_dump_json(content.source)}")
            elif isinstance(content, Literal):
                if isinstance(content.value, str):
                    lines.append(f"cell {a1} text {_dump_json(content.value)}")
                else:
                    lines.append(f"cell {a1} number {format_number(content.value)}")
    for label in sorted(workbook.power_cells):
        power = workbook.power_cells[label]
        lines.append(
            "powercell "
            f"{_dump_json(power.label)} {_dump_json(power.addr.sheet)} "
            f"{power.addr.to_a1()} {power.role.value}"
        )
    tokens = sorted(workbook.token_bank.list_tokens(), key=lambda t: t.label)
    for token in tokens:
        if isinstance(token, StaticToken):
            lines.append(
                f"token {_dump_json(token.label)} static {_dump_json(token.text)}"
            )
        else:
            lines.append(
                f"token {_dump_json(token.label)} dynamic "
                f"{_dump_json(_source_to_json(token.generator))} "
                f"{_dump_json(list(token.items))}"
            )
    return ("\n".join(lines) + "\n").encode("utf-8")


class _LineReader:
    """Sequential field reader; JSON fields self-delimit via raw_decode."""

    def __init__(self, text: str, line_no: int):
        self.text = text
        self.pos = 0
        self.line_no = line_no
        self._decoder = json.JSONDecoder()

    def word(self) -> str:
        self._skip_spaces()
        start = self.pos
        while self.pos < len(self.text) and not self.text[self.pos].isspace():
            self.pos += 1
        if start == self.pos:
            raise FormatError(self.line_no, "unexpected end of line")
        return self.text[start : self.pos]

    def json_value(self) -> object:
        self._skip_spaces()
        try:
            value, end = self._decoder.raw_decode(self.text, self.pos)
        except json.JSONDecodeError as exc:
            raise FormatError(self.line_no, f"bad JSON field: {exc.msg}") from exc
        self.pos = end
        return value

    def done(self) -> None:
        self._skip_spaces()
        if self.pos != len(self.text):
            raise FormatError(
                self.line_no, f"trailing content: {self.text[self.pos:]!r}"
            )

    def _skip_spaces(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] == " ":
            self.pos += 1


def _parse_a1(token: str, line: int) -> tuple[int, int]:
    m = _A1_RE.fullmatch(token)
    if m is None:
        raise FormatError(line, f"bad cell address {token!r}")
    return letters_to_col(m.group(1)), int(m.group(2)) - 1


def load_workbook(data: bytes | str) -> Workbook:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines:
        raise FormatError(1, "empty file")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "gws" or not header[1].isdigit():
        raise FormatError(1, f"expected 'gws <version>' header, got {lines[0]!r}")
    if int(header[1]) != FORMAT_VERSION:
        raise VersionError(f"unsupported format version {header[1]}")

    workbook = Workbook()
    settings: dict[str, object] = {}
    current_sheet: str | None = None
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        reader = _LineReader(raw, line_no)
        directive = reader.word()
        if directive == "setting":
            key = reader.word()
            if key == "default_seed":
                settings["default_seed"] = int(reader.word())
            elif key == "default_cfg":
                settings["default_cfg"] = float(reader.word())
            elif key == "providers":
                providers = reader.json_value()
                if not isinstance(providers, str):
                    raise FormatError(line_no, "providers must be a string")
                settings["providers"] = providers
            else:
                raise FormatError(line_no, f"unknown setting {key!r}")
            reader.done()
        elif directive == "sheet":
            name = reader.json_value()
            if not isinstance(name, str) or not name:
                raise FormatError(line_no, "sheet name must be a non-empty string")
            if workbook.has_sheet(name):
                raise FormatError(line_no, f"duplicate sheet {name!r}")
            workbook.add_sheet(name)
            current_sheet = name
            reader.done()
        elif directive == "cell":
            if current_sheet is None:
                raise FormatError(line_no, "cell record before any sheet")
            a1 = reader.word()
            col, row = _parse_a1(a1, line_no)
            kind = reader.word()
            addr = CellAddress(current_sheet, col, row)
            if (col, row) in workbook.sheets[current_sheet]:
                raise FormatError(line_no, f"duplicate cell {a1}")
            if kind == "text":
                value = reader.json_value()
                if not isinstance(value, str):
                    raise FormatError(line_no, "text payload must be a string")
                workbook.set_content(addr, Literal(value))
            elif kind == "number":
                try:
                    workbook.set_content(addr, Literal(float(reader.word())))
                except ValueError as exc:
                    raise FormatError(line_no, f"bad number: {exc}") from exc
            elif kind == "formula":
                source = reader.json_value()
                if not isinstance(source, str):
                    raise FormatError(line_no, "formula payload must be a string")
                try:
                    ast = parse_source(source)
                except (ParseError, LexError) as exc:
                    raise FormatError(
                        line_no, f"cell {current_sheet}!{a1}: {exc}"
                    ) from exc
                workbook.set_content(addr, Formula(source, ast))
            else:
                raise FormatError(line_no, f"unknown cell kind {kind!r}")
            reader.done()
        elif directive == "powercell":
            label = reader.json_value()
            sheet = reader.json_value()
            a1 = reader.word()
            role_word = reader.word()
            reader.done()
            if not isinstance(label, str) or not isinstance(sheet, str):
                raise FormatError(line_no, "power cell label/sheet must be strings")
            if not workbook.has_sheet(sheet):
                raise FormatError(line_no, f"power cell on unknown sheet {sheet!r}")
            try:
                role = PowerRole(role_word)
            except ValueError as exc:
                raise FormatError(line_no, f"unknown role {role_word!r}") from exc
            col, row = _parse_a1(a1, line_no)
            if label in workbook.power_cells:
                raise FormatError(line_no, f"duplicate power cell {label!r}")
            workbook.power_cells[label] = PowerCell(
                label=label, addr=CellAddress(sheet, col, row), role=role
            )
        elif directive == "token":
            label = reader.json_value()
            if not isinstance(label, str):
                raise FormatError(line_no, "token label must be a string")
            kind = reader.word()
            if kind == "static":
                text_value = reader.json_value()
                if not isinstance(text_value, str):
                    raise FormatError(line_no, "token text must be a string")
                token: StaticToken | DynamicToken = StaticToken(
                    label=label, text=text_value
                )
            elif kind == "dynamic":
                generator_json = reader.json_value()
                items_json = reader.json_value()
                if not isinstance(generator_json, dict) or not isinstance(
                    items_json, list
                ):
                    raise FormatError(line_no, "bad dynamic token payload")
                token = DynamicToken(
                    label=label,
                    generator=_source_from_json(generator_json, line_no),
                    items=tuple(str(i) for i in items_json),
                )
            else:
                raise FormatError(line_no, f"unknown token kind {kind!r}")
            reader.done()
            if label in workbook.token_bank:
                raise FormatError(line_no, f"duplicate token {label!r}")
            workbook.token_bank.add(token)
        else:
            raise FormatError(line_no, f"unknown directive {directive!r}")
    try:
        workbook.settings = WorkbookSettings(**settings)  # type: ignore[arg-type]
    except (TypeError, KeyValidationError) as exc:
        raise FormatError(1, f"bad settings: {exc}") from exc
    return workbook


def workbooks_equal(a: Workbook, b: Workbook) -> bool:
    """Content equality through the canonical byte form."""
    return save_workbook(a) == save_workbook(b)
