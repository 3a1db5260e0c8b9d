"""Scoped attribute storage.

Four scopes with different lifetimes: turn values reset at the start of
every turn, session values last one conversation, user values follow the
user across sessions, and community values are shared by everyone under the
same namespace.  Reads of anything undeclared yield null; declared but
unset attributes yield their default.
"""

from __future__ import annotations

import threading
from typing import Callable, Dict, Optional

from ..model.conditions import Value

SCOPES = ("turn", "session", "user", "community")


class UndeclaredAttributeError(KeyError):
    def __init__(self, scope: str, name: str):
        super().__init__(f"write to undeclared attribute {scope}.{name}")
        self.scope = scope
        self.name = name


class PlatformState:
    """User and community attribute values that outlive sessions.

    Writes are serialized by a lock (read-modify-write per key must be
    atomic when sessions run concurrently).  ``on_change`` lets a storage
    layer persist every write.
    """

    def __init__(self, on_change: Optional[Callable[[str, str, str, Value], None]] = None):
        self.users: Dict[str, Dict[str, Value]] = {}
        self.communities: Dict[str, Dict[str, Value]] = {}
        self._lock = threading.Lock()
        self.on_change = on_change

    def get_user(self, user_id: str, name: str) -> Value:
        return self.users.get(user_id, {}).get(name)

    def has_user(self, user_id: str, name: str) -> bool:
        return name in self.users.get(user_id, {})

    def set_user(self, user_id: str, name: str, value: Value) -> None:
        with self._lock:
            self.users.setdefault(user_id, {})[name] = value
        if self.on_change:
            self.on_change("user", user_id, name, value)

    def get_community(self, namespace: str, name: str) -> Value:
        return self.communities.get(namespace, {}).get(name)

    def has_community(self, namespace: str, name: str) -> bool:
        return name in self.communities.get(namespace, {})

    def set_community(self, namespace: str, name: str, value: Value) -> None:
        with self._lock:
            self.communities.setdefault(namespace, {})[name] = value
        if self.on_change:
            self.on_change("community", namespace, name, value)

    def table(self, scope: str, key: str) -> dict:
        if scope == "user":
            return dict(self.users.get(key, {}))
        if scope == "community":
            return dict(self.communities.get(key, {}))
        raise ValueError(f"no attribute table for scope {scope!r}")


class AttributeStore:
    """One session's view of all four scopes.

    Implements the condition language's AttributeView protocol, so guards
    and starting conditions evaluate directly against it.
    """

    def __init__(self, declarations: dict, platform: PlatformState,
                 user_id: str, community: str):
        self.declarations = declarations  # (scope, name) -> default
        self.platform = platform
        self.user_id = user_id
        self.community = community
        self.turn: Dict[str, Value] = {}
        self.session: Dict[str, Value] = {}

    def begin_turn(self) -> None:
        self.turn.clear()

    def _default(self, scope: str, name: str) -> Value:
        return self.declarations.get((scope, name))

    def get(self, scope: str, name: str) -> Value:
        if scope == "turn":
            if name in self.turn:
                return self.turn[name]
        elif scope == "session":
            if name in self.session:
                return self.session[name]
        elif scope == "user":
            if self.platform.has_user(self.user_id, name):
                return self.platform.get_user(self.user_id, name)
        elif scope == "community":
            if self.platform.has_community(self.community, name):
                return self.platform.get_community(self.community, name)
        else:
            return None
        return self._default(scope, name)

    def set(self, scope: str, name: str, value: Value) -> Value:
        """Write one attribute; returns the previous visible value.

        Raises :class:`UndeclaredAttributeError` for attributes no
        sub-dialogue declares.
        """
        if (scope, name) not in self.declarations:
            raise UndeclaredAttributeError(scope, name)
        old = self.get(scope, name)
        if scope == "turn":
            self.turn[name] = value
        elif scope == "session":
            self.session[name] = value
        elif scope == "user":
            self.platform.set_user(self.user_id, name, value)
        elif scope == "community":
            self.platform.set_community(self.community, name, value)
        return old
