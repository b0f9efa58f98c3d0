"""Planner backend protocol, prompt documents, and the failure taxonomy."""

from __future__ import annotations

import abc
from dataclasses import dataclass, field


class BackendFailure(Exception):
    """A planner backend could not produce a usable reply.

    Raised after retries are exhausted; the engine aborts the episode and
    records a "failure" status instead of crashing.
    """


class RateLimited(BackendFailure):
    """The remote service kept returning HTTP 429 after all retries."""


class TransportError(BackendFailure):
    """Connection problems or 5xx responses that persisted across retries."""


class AuthError(BackendFailure):
    """The remote service rejected the credentials (HTTP 401/403)."""


@dataclass(frozen=True)
class PromptSection:
    """One titled block of prompt text; order within the document matters."""

    name: str
    text: str


@dataclass
class PromptDocument:
    """A prompt plus the structured facts it was rendered from.

    The rendered text (sections in fixed order, then the schema hint) is
    what a language model sees. The ``context`` dict carries the same
    facts in machine form so deterministic backends can answer without
    parsing their own prompt text.
    """

    role: str  # "strategy" or "local"
    sections: list[PromptSection] = field(default_factory=list)
    schema_hint: str = ""
    context: dict = field(default_factory=dict)

    def render(self) -> str:
        blocks = [f"## {s.name}\n\n{s.text}" for s in self.sections]
        if self.schema_hint:
            blocks.append(f"## response format\n\n{self.schema_hint}")
        return "\n\n".join(blocks) + "\n"


class PlannerBackend(abc.ABC):
    """Produces raw reply text for a prompt; parsing happens elsewhere."""

    @abc.abstractmethod
    def complete(self, prompt: PromptDocument) -> str:
        """Return the raw completion text. May raise BackendFailure."""

    def name(self) -> str:
        return type(self).__name__

    def deterministic(self) -> bool:
        """Whether identical inputs always yield identical output bytes."""
        return False
