"""Optional text-generation backend for agent turns.

The benchmark never needs this; it exists so scripted playbooks can be replaced
by generated wording. ``MockGenerator`` is deterministic and network-free.
``HttpGenerator`` posts JSON to ``MARSOPS_GEN_ENDPOINT``. If
``MARSOPS_GEN_API_KEY`` is set, it is sent as a bearer token.
"""
from __future__ import annotations

import json
import os
import urllib.request
from dataclasses import asdict, dataclass, replace
from typing import Protocol, Sequence

from .engine import Action, ReportAction, SendAction
from .memory import ContextItem, TurnRecord
from .rng import stable_hash

ENDPOINT_ENV = "MARSOPS_GEN_ENDPOINT"
API_KEY_ENV = "MARSOPS_GEN_API_KEY"


@dataclass(frozen=True)
class GenerationRequest:
    system_role: str
    context: tuple[str, ...]
    seed_prompt: str


@dataclass(frozen=True)
class GenerationResponse:
    text: str


class TextGenerator(Protocol):
    def generate(self, request: GenerationRequest) -> GenerationResponse:
        ...


class MockGenerator:
    """Echoes the prompt fragment with a stable tag derived from the whole request."""

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        tag = stable_hash(request.system_role, *request.context, request.seed_prompt) % 10_000
        return GenerationResponse(f"{request.seed_prompt} [{tag:04d}]")


class HttpGenerator:
    def __init__(self, endpoint: str | None = None, api_key: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not self.endpoint:
            raise ValueError(f"no endpoint given and {ENDPOINT_ENV} is unset")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout = timeout

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        body = json.dumps(asdict(request)).encode()
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        req = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            doc = json.loads(resp.read().decode())
        if not isinstance(doc, dict) or not isinstance(doc.get("text"), str):
            raise ValueError("generation response must be a JSON object with a string 'text'")
        return GenerationResponse(doc["text"])


def _context_text(item: ContextItem) -> str:
    return f"{item.speaker}: {item.text}" if isinstance(item, TurnRecord) else item


class GenerativeBehavior:
    """Rewrites message and report wording through a generator.

    Targets, commands and memory keys are kept from the plan, so routing and
    failure accounting behave exactly as in the scripted run.
    """

    def __init__(self, generator: TextGenerator, role_of=None):
        self.generator = generator
        self.role_of = role_of or (lambda agent: agent)

    def _ask(self, agent: str, context: Sequence[ContextItem], fragment: str) -> str:
        req = GenerationRequest(self.role_of(agent), tuple(_context_text(c) for c in context), fragment)
        return self.generator.generate(req).text

    def decide(self, agent, tick, inbox, context, planned) -> list[Action]:
        out: list[Action] = []
        for act in planned:
            if isinstance(act, SendAction):
                act = replace(act, text=self._ask(agent, context, act.text))
            elif isinstance(act, ReportAction):
                act = replace(act, content=self._ask(agent, context, act.content or act.tag))
            out.append(act)
        return out
