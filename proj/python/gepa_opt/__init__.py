"""Python front end to the C++ prompt optimizer."""

import json

from ._core import (
    META_PROMPT_TEMPLATE,
    CommandResult,
    GepaError,
    ancestry_dot,
    build_meta_prompt,
    dominates,
    evaluate,
    extract_last_fenced_block,
    inference_search,
    optimize,
    select_pareto,
)
from ._core import load_state_json as _load_state_json


def load_state(path):
    """Run state as a plain dict."""
    return json.loads(_load_state_json(str(path)))


__all__ = [
    "META_PROMPT_TEMPLATE",
    "CommandResult",
    "GepaError",
    "ancestry_dot",
    "build_meta_prompt",
    "dominates",
    "evaluate",
    "extract_last_fenced_block",
    "inference_search",
    "load_state",
    "optimize",
    "select_pareto",
]
