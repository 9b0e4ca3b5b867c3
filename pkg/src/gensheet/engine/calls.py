"""Turn a formula function call with evaluated arguments into either an
immediate value or a generation plan for the dispatcher."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..functions.messages import build_list_request, build_scalar_request
from ..functions.model import (
    GenerationKey,
    KeyValidationError,
    LlmRequest,
    WorkbookSettings,
    format_cfg,
    MAX_SEED,
)
from ..functions.registry import (
    DEFAULT_LIST_LENGTH,
    FunctionKind,
    FunctionSpec,
    OutputShape,
)
from .values import (
    Blank,
    Error,
    ErrorKind,
    Image,
    Pending,
    Value,
    coerce_number,
    coerce_text,
    value_error,
)

MAX_LIST_LENGTH = 1000


@dataclass(frozen=True, slots=True)
class RangeItems:
    """Scalar texts gathered from a range argument, blanks skipped."""

    items: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class GenPlan:
    """A provider request the engine may memoize or dispatch."""

    kind: FunctionKind
    memo_key: tuple
    payload: Union[GenerationKey, LlmRequest]
    shape: OutputShape
    expected_length: int | None = None


def plan_call(
    spec: FunctionSpec,
    args: list[Union[Value, RangeItems]],
    settings: WorkbookSettings,
) -> Union[Value, GenPlan]:
    if not spec.min_args <= len(args) <= spec.max_args:
        if spec.min_args == spec.max_args:
            arity = str(spec.min_args)
        else:
            arity = f"{spec.min_args}..{spec.max_args}"
        return value_error(f"{spec.name} expects {arity} argument(s), got {len(args)}")

    for arg in args:
        if isinstance(arg, Error):
            return arg
    for arg in args:
        if isinstance(arg, Pending):
            return arg

    if spec.kind is FunctionKind.IMAGE:
        arg = args[0]
        if isinstance(arg, Image):
            return arg
        return value_error("IMAGE expects an image value")

    if spec.kind is FunctionKind.TTI:
        prompt = _required_text(args[0], spec.name)
        if isinstance(prompt, Error):
            return prompt
        seed = settings.default_seed
        if len(args) >= 2:
            parsed_seed = _integer_arg(args[1], "seed")
            if isinstance(parsed_seed, Error):
                return parsed_seed
            seed = parsed_seed
        cfg = settings.default_cfg
        if len(args) >= 3:
            parsed_cfg = coerce_number(args[2])
            if isinstance(parsed_cfg, Error):
                return parsed_cfg
            cfg = parsed_cfg
        try:
            key = GenerationKey(prompt=prompt, seed=seed, cfg=cfg)
        except KeyValidationError as exc:
            return value_error(str(exc))
        return GenPlan(
            kind=FunctionKind.TTI,
            memo_key=("TTI", prompt, seed, format_cfg(cfg)),
            payload=key,
            shape=OutputShape.SCALAR,
        )

    if spec.kind in (FunctionKind.GPT, FunctionKind.EMBELLISH):
        prompt = _required_text(args[0], spec.name)
        if isinstance(prompt, Error):
            return prompt
        return GenPlan(
            kind=spec.kind,
            memo_key=(spec.name, prompt),
            payload=build_scalar_request(spec, prompt),
            shape=OutputShape.SCALAR,
        )

    assert spec.kind is FunctionKind.LLM_LIST
    user_input: Union[str, list[str]]
    first = args[0]
    if isinstance(first, RangeItems):
        if not first.items:
            return value_error(f"{spec.name} got an empty range")
        user_input = list(first.items)
        input_key: object = first.items
    else:
        text = _required_text(first, spec.name)
        if isinstance(text, Error):
            return text
        user_input = text
        input_key = text
    length = DEFAULT_LIST_LENGTH
    if len(args) >= 2 and not isinstance(args[1], Blank):
        parsed_length = _integer_arg(args[1], "length")
        if isinstance(parsed_length, Error):
            return parsed_length
        if not 1 <= parsed_length <= MAX_LIST_LENGTH:
            return value_error(f"length must be in [1, {MAX_LIST_LENGTH}]")
        length = parsed_length
    return GenPlan(
        kind=FunctionKind.LLM_LIST,
        # _T twins share the memo key: identical items, different spill axis.
        memo_key=(spec.base_name, input_key, length),
        payload=build_list_request(spec, user_input, length),
        shape=spec.shape,
        expected_length=length,
    )


def _required_text(arg: Union[Value, RangeItems], fn_name: str) -> str | Error:
    if isinstance(arg, RangeItems):
        return value_error(f"{fn_name} does not accept a range here")
    text = coerce_text(arg)
    if isinstance(text, Error):
        return text
    if not text.strip():
        return value_error(f"{fn_name} needs a non-empty prompt")
    return text


def _integer_arg(arg: Union[Value, RangeItems], what: str) -> int | Error:
    if isinstance(arg, RangeItems):
        return value_error(f"{what} cannot be a range")
    number = coerce_number(arg)
    if isinstance(number, Error):
        return number
    if number != int(number):
        return value_error(f"{what} must be an integer, got {number!r}")
    value = int(number)
    if what == "seed" and not 0 <= value <= MAX_SEED:
        return value_error(f"seed out of range [0, {MAX_SEED}]")
    return value
