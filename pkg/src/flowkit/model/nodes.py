"""Typed dialogue graph: nodes, payloads, sub-dialogues and whole bundles.

Everything here is immutable after parsing and safe to share across
concurrently running sessions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

from .conditions import Expr, Value

NODE_KINDS = (
    "Enter",
    "Speech",
    "UserInput",
    "Intent",
    "GlobalIntent",
    "Function",
    "Action",
    "GlobalAction",
    "SubDialogueRef",
    "Exit",
)

SITUATIONS = ("Silence", "Error", "OutOfDomain")

ATTRIBUTE_SCOPES = ("turn", "session", "user", "community")

# (dialogue id, node id): node ids are only unique within their sub-dialogue.
NodeKey = Tuple[str, str]


def node_key_str(key: NodeKey) -> str:
    return f"{key[0]}/{key[1]}"


class MarkupError(ValueError):
    """Malformed ``[text]{type}`` entity markup in an intent example."""


_TYPE_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*")


@dataclass(frozen=True)
class IntentExample:
    """One training utterance, with its entity markup resolved.

    ``raw`` keeps the authored text, ``masked`` replaces each marked span
    with ``{type}`` and is what classifiers train on, ``plain`` drops the
    markup entirely.
    """

    raw: str
    masked: str
    plain: str
    marked_spans: tuple  # ((surface, type_name), ...)

    @property
    def entity_types(self) -> frozenset:
        return frozenset(t for _, t in self.marked_spans)


def parse_intent_example(raw: str) -> IntentExample:
    """Parse ``[surface]{type}`` markup.  Square brackets must always form a
    complete marker; stray ``[`` or ``]`` raise :class:`MarkupError`."""
    masked = []
    plain = []
    spans = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "]":
            raise MarkupError(f"unmatched ']' at offset {i} in {raw!r}")
        if c != "[":
            masked.append(c)
            plain.append(c)
            i += 1
            continue
        close = raw.find("]", i + 1)
        if close < 0 or "[" in raw[i + 1 : close]:
            raise MarkupError(f"unbalanced '[' at offset {i} in {raw!r}")
        surface = raw[i + 1 : close]
        if not surface:
            raise MarkupError(f"empty entity span at offset {i} in {raw!r}")
        if close + 1 >= len(raw) or raw[close + 1] != "{":
            raise MarkupError(f"expected '{{type}}' after ']' at offset {close} in {raw!r}")
        brace = raw.find("}", close + 2)
        if brace < 0:
            raise MarkupError(f"unterminated '{{' at offset {close + 1} in {raw!r}")
        type_name = raw[close + 2 : brace]
        if not _TYPE_NAME_RE.fullmatch(type_name):
            raise MarkupError(f"bad entity type name {type_name!r} in {raw!r}")
        masked.append("{" + type_name + "}")
        plain.append(surface)
        spans.append((surface, type_name))
        i = brace + 1
    return IntentExample(raw, "".join(masked), "".join(plain), tuple(spans))


@dataclass(frozen=True)
class SpeechPayload:
    responses: tuple  # non-empty tuple of template strings
    # Emits the rendered response as grounding text for a generated question;
    # the next turn opens with a generated statement before the flow resumes.
    nrg_grounding: bool = False


@dataclass(frozen=True)
class UserInputPayload:
    local_ood_action: Optional[str] = None  # node id of an OutOfDomain Action


@dataclass(frozen=True)
class IntentPayload:
    examples: tuple  # non-empty tuple of IntentExample
    is_global: bool = False

    @property
    def entity_types(self) -> frozenset:
        types: frozenset = frozenset()
        for example in self.examples:
            types = types | example.entity_types
        return types


@dataclass(frozen=True)
class Assignment:
    target: "AttributeRef"
    expr: Expr
    source: str  # original expression text, kept for serialization


@dataclass(frozen=True)
class Transition:
    guard: Expr
    out_key: str
    source: str


@dataclass(frozen=True)
class FunctionPayload:
    assignments: tuple  # of Assignment, applied in order
    transitions: tuple  # of Transition; first true guard wins


@dataclass(frozen=True)
class ActionPayload:
    situation: str  # Silence | Error | OutOfDomain
    is_global: bool = False


@dataclass(frozen=True)
class SubDialogueRefPayload:
    dialogue_id: str


@dataclass(frozen=True)
class EmptyPayload:
    pass


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    payload: object


@dataclass(frozen=True)
class Edge:
    from_id: str
    out_key: str
    to_id: str


@dataclass(frozen=True)
class AttributeRef:
    scope: str
    name: str

    def __str__(self) -> str:
        return f"{self.scope}.{self.name}"

    @classmethod
    def parse(cls, text: str) -> "AttributeRef":
        scope, dot, name = text.partition(".")
        if not dot or scope not in ATTRIBUTE_SCOPES or not name:
            raise ValueError(f"bad attribute reference {text!r}, expected scope.name")
        return cls(scope, name)


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    scope: str
    default: Value


@dataclass(frozen=True)
class EntityRule:
    """Pattern-driven entity type (gazetteers, dates, numbers and friends)."""

    type_name: str
    patterns: tuple  # of regex source strings
    normalizer: str = "none"


@dataclass(frozen=True)
class SkimmerRule:
    """Context-free extraction rule: fires only if all patterns match."""

    patterns: tuple  # of regex source strings
    attribute: AttributeRef
    value: Value  # literal, or "$<group>" reference into the first pattern


@dataclass(frozen=True)
class BundleConfig:
    language: str = "en"
    ood_threshold: float = 0.55
    seed: int = 0


@dataclass(frozen=True)
class SubDialogue:
    id: str
    name: str
    labels: frozenset
    entity_tags: frozenset
    starting_condition: Optional[Expr]
    starting_condition_source: Optional[str]
    nodes: tuple  # of Node, in document order
    edges: tuple  # of Edge, in document order
    init_attributes: tuple  # of AttributeDecl

    def node(self, node_id: str) -> Optional[Node]:
        return self._by_id.get(node_id)

    @cached_property
    def _by_id(self) -> dict:
        return {n.id: n for n in self.nodes}

    @property
    def enter_node(self) -> Node:
        for n in self.nodes:
            if n.kind == "Enter":
                return n
        raise LookupError(f"sub-dialogue {self.id} has no Enter node")

    def out_edges(self, node_id: str) -> list:
        return [e for e in self.edges if e.from_id == node_id]

    def out_edge(self, node_id: str, out_key: Optional[str] = None) -> Optional[Edge]:
        for e in self.edges:
            if e.from_id == node_id and (out_key is None or e.out_key == out_key):
                return e
        return None

    def user_input_intents(self, user_input_id: str) -> list:
        """Local Intent nodes attached to a User Input, in edge order."""
        intents = []
        for e in self.edges:
            if e.from_id != user_input_id:
                continue
            target = self.node(e.to_id)
            if target is not None and target.kind == "Intent":
                intents.append(target)
        return intents

    @property
    def global_intents(self) -> list:
        return [n for n in self.nodes if n.kind == "GlobalIntent"]

    @property
    def user_inputs(self) -> list:
        return [n for n in self.nodes if n.kind == "UserInput"]

    def global_action(self, situation: str) -> Optional[Node]:
        for n in self.nodes:
            if n.kind == "GlobalAction" and n.payload.situation == situation:
                return n
        return None


@dataclass(frozen=True)
class DialogueBundle:
    main_dialogue_id: str
    sub_dialogues: tuple  # of SubDialogue
    entity_rules: tuple  # of EntityRule
    skimmer_rules: tuple  # of SkimmerRule
    selector_pool: tuple  # of sub-dialogue ids
    config: BundleConfig = field(default_factory=BundleConfig)

    def dialogue(self, dialogue_id: str) -> Optional[SubDialogue]:
        for d in self.sub_dialogues:
            if d.id == dialogue_id:
                return d
        return None

    @property
    def main(self) -> SubDialogue:
        d = self.dialogue(self.main_dialogue_id)
        if d is None:
            raise LookupError(f"main dialogue {self.main_dialogue_id!r} not found")
        return d

    def node_at(self, key: NodeKey) -> Optional[Node]:
        d = self.dialogue(key[0])
        return d.node(key[1]) if d else None

    def entity_rule(self, type_name: str) -> Optional[EntityRule]:
        for r in self.entity_rules:
            if r.type_name == type_name:
                return r
        return None

    def declared_attributes(self) -> dict:
        """Merged ``(scope, name) -> default`` map.

        The first declaration of a name wins across sub-dialogues.  Every
        entity type is implicitly a turn-scoped attribute (default null) so
        Function nodes can read what was recognized this turn.
        """
        merged: dict = {}
        for rule in self.entity_rules:
            merged[("turn", rule.type_name)] = None
        for d in self.sub_dialogues:
            for decl in d.init_attributes:
                merged.setdefault((decl.scope, decl.name), decl.default)
        return merged
