"""The generative function set exposed to formulas.

Every list-producing function has a ``_T`` twin that is identical except
that its output spills across a row instead of down a column.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto


class OutputShape(Enum):
    SCALAR = auto()
    LIST_COLUMN = auto()
    LIST_ROW = auto()


class FunctionKind(Enum):
    TTI = auto()       # text-to-image
    IMAGE = auto()     # display pass-through
    GPT = auto()       # raw LLM completion
    LLM_LIST = auto()  # list-producing LLM call
    EMBELLISH = auto() # scalar LLM call with a fixed template


@dataclass(frozen=True, slots=True)
class FunctionSpec:
    name: str
    base_name: str  # shared by a function and its _T twin
    kind: FunctionKind
    min_args: int
    max_args: int
    shape: OutputShape
    prompt_template: str | None = None  # with [USER INPUT] / [LIST] slots


DEFAULT_LIST_LENGTH = 5

# Prompt templates sent upstream, one per list/scalar function. GPT_LIST
# forwards the user's text untouched.
TEMPLATES = {
    "LIST_COMPLETION": 'Similar items to this list without repeating "[LIST]"',
    "SYNONYMS": 'Synonyms of "[USER INPUT]"',
    "ANTONYMS": 'Antonyms of "[USER INPUT]"',
    "DIVERGENTS": 'Divergent words to "[USER INPUT]"',
    "ALTERNATIVES": 'Alternative ways to say "[USER INPUT]"',
    "EMBELLISH": "Embellish this sentence: [USER INPUT]",
}

_LIST_FUNCTIONS = (
    "GPT_LIST",
    "LIST_COMPLETION",
    "SYNONYMS",
    "ANTONYMS",
    "DIVERGENTS",
    "ALTERNATIVES",
)


def _build_registry() -> dict[str, FunctionSpec]:
    registry: dict[str, FunctionSpec] = {}

    def add(spec: FunctionSpec) -> None:
        registry[spec.name] = spec

    add(FunctionSpec("TTI", "TTI", FunctionKind.TTI, 1, 3, OutputShape.SCALAR))
    add(FunctionSpec("IMAGE", "IMAGE", FunctionKind.IMAGE, 1, 1, OutputShape.SCALAR))
    add(FunctionSpec("GPT", "GPT", FunctionKind.GPT, 1, 1, OutputShape.SCALAR))
    add(
        FunctionSpec(
            "EMBELLISH",
            "EMBELLISH",
            FunctionKind.EMBELLISH,
            1,
            1,
            OutputShape.SCALAR,
            TEMPLATES["EMBELLISH"],
        )
    )
    for name in _LIST_FUNCTIONS:
        template = TEMPLATES.get(name)
        add(
            FunctionSpec(
                name, name, FunctionKind.LLM_LIST, 1, 2, OutputShape.LIST_COLUMN, template
            )
        )
        add(
            FunctionSpec(
                f"{name}_T",
                name,
                FunctionKind.LLM_LIST,
                1,
                2,
                OutputShape.LIST_ROW,
                template,
            )
        )
    return registry


REGISTRY: dict[str, FunctionSpec] = _build_registry()


def lookup(name: str) -> FunctionSpec | None:
    return REGISTRY.get(name.upper())


def list_function_names(include_transposed: bool = True) -> list[str]:
    return [
        spec.name
        for spec in REGISTRY.values()
        if spec.kind is FunctionKind.LLM_LIST
        and (include_transposed or spec.shape is OutputShape.LIST_COLUMN)
    ]
