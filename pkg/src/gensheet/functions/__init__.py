from .arrays import ArrayLiteralError, parse_array_literal
from .messages import (
    EMBELLISH_PREFIX,
    LIST_FEW_SHOT_ASSISTANT,
    LIST_FEW_SHOT_USER,
    LIST_SYSTEM_MESSAGE,
    build_list_request,
    build_scalar_request,
    render_prompt,
)
from .mockllm import MockLlmUpstream, slugify
from .model import (
    DEFAULT_CFG,
    DEFAULT_SEED,
    IMAGE_SIZE,
    MAX_CFG,
    MAX_SEED,
    GenerationKey,
    ImageRef,
    KeyValidationError,
    LlmRequest,
    TtiResult,
    WorkbookSettings,
    format_cfg,
)
from .registry import (
    DEFAULT_LIST_LENGTH,
    REGISTRY,
    FunctionKind,
    FunctionSpec,
    OutputShape,
    TEMPLATES,
    list_function_names,
    lookup,
)

__all__ = [
    "ArrayLiteralError",
    "DEFAULT_CFG",
    "DEFAULT_LIST_LENGTH",
    "DEFAULT_SEED",
    "EMBELLISH_PREFIX",
    "FunctionKind",
    "FunctionSpec",
    "GenerationKey",
    "IMAGE_SIZE",
    "ImageRef",
    "KeyValidationError",
    "LIST_FEW_SHOT_ASSISTANT",
    "LIST_FEW_SHOT_USER",
    "LIST_SYSTEM_MESSAGE",
    "LlmRequest",
    "MAX_CFG",
    "MAX_SEED",
    "MockLlmUpstream",
    "OutputShape",
    "REGISTRY",
    "TEMPLATES",
    "TtiResult",
    "WorkbookSettings",
    "build_list_request",
    "build_scalar_request",
    "format_cfg",
    "list_function_names",
    "lookup",
    "parse_array_literal",
    "render_prompt",
    "slugify",
]
