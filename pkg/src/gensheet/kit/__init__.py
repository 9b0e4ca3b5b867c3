from .builders import (
    SEGMENT_JOINER,
    axis_length,
    build_cfg_slider,
    build_seed_grid,
    designate_power_cell,
    expand_template,
    update_power_cell,
)
from .model import (
    AxisSource,
    CellRangeSource,
    DynamicToken,
    GenerativeList,
    InvalidAxis,
    InvalidValue,
    KitError,
    LiteralText,
    ManualList,
    PlacementError,
    PowerCell,
    PowerRole,
    PromptTemplate,
    Slot,
    TooManyAxes,
)
from .tokens import regenerate_token, resolve_axis_items

__all__ = [
    "AxisSource",
    "CellRangeSource",
    "DynamicToken",
    "GenerativeList",
    "InvalidAxis",
    "InvalidValue",
    "KitError",
    "LiteralText",
    "ManualList",
    "PlacementError",
    "PowerCell",
    "PowerRole",
    "PromptTemplate",
    "SEGMENT_JOINER",
    "Slot",
    "TooManyAxes",
    "axis_length",
    "build_cfg_slider",
    "build_seed_grid",
    "designate_power_cell",
    "expand_template",
    "regenerate_token",
    "resolve_axis_items",
    "update_power_cell",
]
