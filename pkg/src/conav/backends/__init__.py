"""Planner backends: prompt documents, parsing, and completion providers."""

from conav.backends.base import (
    AuthError,
    BackendFailure,
    PlannerBackend,
    PromptDocument,
    PromptSection,
    RateLimited,
    TransportError,
)
from conav.backends.oracle import OraclePlanner
from conav.backends.parse import (
    ParseError,
    ValidationError,
    extract_json,
    parse_plan,
    parse_strategy,
)
from conav.backends.prompts import (
    MissingProfile,
    assemble_local_prompt,
    assemble_strategy_prompt,
)

__all__ = [
    "AuthError",
    "BackendFailure",
    "MissingProfile",
    "OraclePlanner",
    "ParseError",
    "PlannerBackend",
    "PromptDocument",
    "PromptSection",
    "RateLimited",
    "TransportError",
    "ValidationError",
    "assemble_local_prompt",
    "assemble_strategy_prompt",
    "extract_json",
    "parse_plan",
    "parse_strategy",
]
