"""Assembly of the exact chat messages sent upstream for each function.

The list-function framing (system instruction plus one few-shot pair) and
the per-function prompt templates are fixed strings; golden tests pin them
byte-for-byte.
"""

from __future__ import annotations

from .model import LlmRequest
from .registry import FunctionKind, FunctionSpec

LIST_SYSTEM_MESSAGE = (
    "Respond with a Javascript array literal with the given length in parentheses"
)
LIST_FEW_SHOT_USER = "types of animals (length: 5)"
LIST_FEW_SHOT_ASSISTANT = '["dog", "cat", "frog", "horse", "deer"]'

EMBELLISH_PREFIX = "Embellish this sentence: "


def render_prompt(spec: FunctionSpec, user_input: str | list[str]) -> str:
    """Fill the function's template with the user input.

    List input (LIST_COMPLETION) is joined comma-separated inside the
    template's quoted slot; scalar input substitutes verbatim.
    """
    if spec.prompt_template is None:
        assert isinstance(user_input, str)
        return user_input
    if isinstance(user_input, list):
        return spec.prompt_template.replace("[LIST]", ", ".join(user_input))
    return spec.prompt_template.replace("[USER INPUT]", user_input)


def build_list_request(
    spec: FunctionSpec, user_input: str | list[str], length: int
) -> LlmRequest:
    prompt = render_prompt(spec, user_input)
    return LlmRequest(
        messages=(
            ("system", LIST_SYSTEM_MESSAGE),
            ("user", LIST_FEW_SHOT_USER),
            ("assistant", LIST_FEW_SHOT_ASSISTANT),
            ("user", f"{prompt} (length: {length})"),
        ),
        expects_list=True,
        expected_length=length,
    )


def build_scalar_request(spec: FunctionSpec, user_input: str) -> LlmRequest:
    """GPT sends the prompt bare; EMBELLISH applies its template, still as a
    single user message without the list framing."""
    if spec.kind is FunctionKind.GPT:
        content = user_input
    else:
        content = render_prompt(spec, user_input)
    return LlmRequest(messages=(("user", content),), expects_list=False)
