"""Conversation engine: attribute scopes, traversal, actions, selection."""

from .attributes import AttributeStore, PlatformState, UndeclaredAttributeError
from .runtime import (
    Engine,
    Frame,
    Session,
    SessionEndedError,
    TurnInput,
    TurnResult,
    render_value,
    select_dialogue,
)

__all__ = [
    "AttributeStore",
    "Engine",
    "Frame",
    "PlatformState",
    "Session",
    "SessionEndedError",
    "TurnInput",
    "TurnResult",
    "UndeclaredAttributeError",
    "render_value",
    "select_dialogue",
]
