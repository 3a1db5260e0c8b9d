"""Response generation boundary.

The engine talks to generators through one small contract: dialogue history,
the desired dialogue act, and optional grounding text.  The default stub is
pure and template-based so conversations stay reproducible; the HTTP client
delegates to an external model service and falls back to the stub whenever
that service misbehaves, so a dead model never stalls a conversation.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Tuple

ACT_STATEMENT = "Statement"
ACT_QUESTION = "Question"
ACT_STATEMENT_THEN_QUESTION = "StatementThenQuestion"

ACTS = (ACT_STATEMENT, ACT_QUESTION, ACT_STATEMENT_THEN_QUESTION)

DEFAULT_TIMEOUT_MS = 2000


@dataclass(frozen=True)
class NrgRequest:
    history: Tuple[Tuple[str, str], ...]  # (speaker: "user"|"bot", text)
    desired_act: str
    grounding_text: Optional[str] = None


@dataclass(frozen=True)
class NrgResponse:
    text: str
    act: str
    fallback: bool = False  # True when the external backend failed and the stub answered


class Generator(Protocol):
    def generate(self, request: NrgRequest) -> NrgResponse: ...


_WORD_RE = re.compile(r"[a-z0-9]+")


def _content_word(request: NrgRequest) -> str:
    """Pick the word the reply orbits around: the longest token of the
    grounding text if present, else of the last user utterance; ties go to
    the later token."""
    source = request.grounding_text
    if not source:
        for speaker, text in reversed(request.history):
            if speaker == "user":
                source = text
                break
    best = "that"
    best_len = 0
    for token in _WORD_RE.findall((source or "").lower()):
        if len(token) >= best_len:
            best = token
            best_len = len(token)
    return best


class StubGenerator:
    """Deterministic template generator; pure given the request."""

    def generate(self, request: NrgRequest) -> NrgResponse:
        word = _content_word(request)
        if request.desired_act == ACT_STATEMENT:
            text = f"Interesting, tell me more about {word}."
        elif request.desired_act == ACT_QUESTION:
            text = f"What do you think about {word}?"
        elif request.desired_act == ACT_STATEMENT_THEN_QUESTION:
            text = f"Interesting, tell me more about {word}. What do you think about {word}?"
        else:
            raise ValueError(f"unknown dialogue act {request.desired_act!r}")
        return NrgResponse(text=text, act=request.desired_act)


class HttpGenerator:
    """Client for an external generation service.

    POSTs ``{history, act, grounding?}`` to ``<base_url>/generate`` and
    expects ``{text, act}`` back.  Timeouts, connection errors and malformed
    replies all fall back to the stub with ``fallback=True``.
    """

    def __init__(self, base_url: str, timeout_ms: int = DEFAULT_TIMEOUT_MS,
                 fallback: Optional[Generator] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout_ms = timeout_ms
        self.fallback = fallback or StubGenerator()

    def generate(self, request: NrgRequest) -> NrgResponse:
        payload: dict = {
            "history": [{"speaker": s, "text": t} for s, t in request.history],
            "act": request.desired_act,
        }
        if request.grounding_text is not None:
            payload["grounding"] = request.grounding_text
        req = urllib.request.Request(
            self.base_url + "/generate",
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_ms / 1000.0) as resp:
                body = json.loads(resp.read().decode("utf-8"))
            text = body["text"]
            act = body.get("act", request.desired_act)
            if not isinstance(text, str) or not text:
                raise ValueError("backend returned empty text")
            return NrgResponse(text=text, act=act)
        except Exception:
            stub = self.fallback.generate(request)
            return NrgResponse(text=stub.text, act=stub.act, fallback=True)


DEFAULT_GENERATOR = StubGenerator()
