"""The persistent document model: sheets of cells, workbook settings,
registered power cells, and the saved-token bank."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator

from ..functions.model import WorkbookSettings
from .cells import CellAddress, CellContent, EMPTY, Empty

if TYPE_CHECKING:  # registered by the exploration kit
    from ..kit.model import DynamicToken, PowerCell


@dataclass(frozen=True, slots=True)
class StaticToken:
    """A saved piece of prompt text, reusable across prompts."""

    label: str
    text: str


class DuplicateLabel(ValueError):
    pass


class TokenNotFound(KeyError):
    pass


class TokenBank:
    """Saved prompt tokens; labels are unique, dynamic tokens keep their
    generator so they can be refreshed."""

    def __init__(self) -> None:
        self._tokens: dict[str, object] = {}

    def add(self, token: "StaticToken | DynamicToken") -> None:
        label = token.label
        if label in self._tokens:
            raise DuplicateLabel(label)
        self._tokens[label] = token

    def add_text(self, text: str, label: str | None = None) -> StaticToken:
        token = StaticToken(label=label or text, text=text)
        self.add(token)
        return token

    def replace(self, label: str, token: "StaticToken | DynamicToken") -> None:
        if label not in self._tokens:
            raise TokenNotFound(label)
        del self._tokens[label]
        if token.label in self._tokens:
            raise DuplicateLabel(token.label)
        self._tokens[token.label] = token

    def remove(self, label: str) -> object:
        if label not in self._tokens:
            raise TokenNotFound(label)
        return self._tokens.pop(label)

    def get(self, label: str) -> object:
        if label not in self._tokens:
            raise TokenNotFound(label)
        return self._tokens[label]

    def __contains__(self, label: str) -> bool:
        return label in self._tokens

    def list_tokens(self) -> list[object]:
        return list(self._tokens.values())

    def __len__(self) -> int:
        return len(self._tokens)


_COPY_SUFFIX = re.compile(r" \((\d+)\)$")


class Workbook:
    def __init__(self, settings: WorkbookSettings | None = None):
        self.settings = settings or WorkbookSettings()
        self.sheets: dict[str, dict[tuple[int, int], CellContent]] = {}
        self.power_cells: dict[str, "PowerCell"] = {}
        self.token_bank = TokenBank()

    # -- sheets ---------------------------------------------------------------

    def add_sheet(self, name: str) -> str:
        if name in self.sheets:
            raise ValueError(f"sheet {name!r} already exists")
        self.sheets[name] = {}
        return name

    def ensure_sheet(self, name: str) -> None:
        self.sheets.setdefault(name, {})

    def has_sheet(self, name: str) -> bool:
        return name in self.sheets

    def sheet_names(self) -> list[str]:
        return list(self.sheets)

    def copy_name(self, source: str) -> str:
        """Next free "name (2)"-style name for a duplicated sheet."""
        base = _COPY_SUFFIX.sub("", source)
        n = 2
        while f"{base} ({n})" in self.sheets:
            n += 1
        return f"{base} ({n})"

    # -- cell content -----------------------------------------------------------

    def content(self, addr: CellAddress) -> CellContent:
        sheet = self.sheets.get(addr.sheet)
        if sheet is None:
            return EMPTY
        return sheet.get((addr.col, addr.row), EMPTY)

    def has_user_content(self, addr: CellAddress) -> bool:
        return not isinstance(self.content(addr), Empty)

    def set_content(self, addr: CellAddress, content: CellContent) -> None:
        if addr.sheet not in self.sheets:
            raise KeyError(f"no such sheet: {addr.sheet!r}")
        sheet = self.sheets[addr.sheet]
        if isinstance(content, Empty):
            sheet.pop((addr.col, addr.row), None)
        else:
            sheet[(addr.col, addr.row)] = content

    def iter_cells(self) -> Iterator[tuple[CellAddress, CellContent]]:
        for name in sorted(self.sheets):
            cells = self.sheets[name]
            for (col, row) in sorted(cells, key=lambda key: (key[1], key[0])):
                yield CellAddress(name, col, row), cells[(col, row)]
