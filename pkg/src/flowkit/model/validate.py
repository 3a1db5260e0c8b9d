"""Structural validation of parsed bundles.

Produces an ordered list of diagnostics; an empty list means every invariant
holds.  Validation is pure: the same bundle always yields the same
diagnostics in the same order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .conditions import Lit
from .nodes import DialogueBundle, Node, SubDialogue

PLACEHOLDER_RE = re.compile(r"\{(turn|session|user|community)\.([A-Za-z_][A-Za-z0-9_]*)\}")

GROUP_REF_RE = re.compile(r"\$([A-Za-z0-9_]+)")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    location: str  # "$", "<dialogue>", or "<dialogue>/<node>"
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: [{self.rule}] {self.location}: {self.message}"


class _Collector:
    def __init__(self):
        self.items: list = []

    def error(self, location: str, rule: str, message: str) -> None:
        self.items.append(Diagnostic("error", location, rule, message))

    def warning(self, location: str, rule: str, message: str) -> None:
        self.items.append(Diagnostic("warning", location, rule, message))


def _compile_ok(pattern: str) -> bool:
    try:
        re.compile(pattern)
        return True
    except re.error:
        return False


def _check_bundle_level(bundle: DialogueBundle, out: _Collector) -> None:
    if bundle.dialogue(bundle.main_dialogue_id) is None:
        out.error("$", "missing-main", f"main dialogue {bundle.main_dialogue_id!r} does not exist")
    for pool_id in bundle.selector_pool:
        if bundle.dialogue(pool_id) is None:
            out.error("$", "dangling-selector", f"selector pool entry {pool_id!r} does not exist")

    for rule in bundle.entity_rules:
        for pattern in rule.patterns:
            if not _compile_ok(pattern):
                out.error("$", "entity-pattern",
                          f"entity type {rule.type_name!r} pattern does not compile: {pattern!r}")

    declared = bundle.declared_attributes()
    for i, rule in enumerate(bundle.skimmer_rules):
        loc = f"$skimmer[{i}]"
        compiled_first = None
        for j, pattern in enumerate(rule.patterns):
            if not _compile_ok(pattern):
                out.error(loc, "skimmer-pattern", f"pattern does not compile: {pattern!r}")
            elif j == 0:
                compiled_first = re.compile(pattern)
        if rule.attribute.scope == "turn":
            out.error(loc, "skimmer-scope",
                      "skimmer may not target turn attributes (they reset before use)")
        if (rule.attribute.scope, rule.attribute.name) not in declared:
            out.error(loc, "skimmer-attr", f"attribute {rule.attribute} is not declared")
        if isinstance(rule.value, str) and rule.value.startswith("$") and compiled_first is not None:
            group = rule.value[1:]
            known = set(compiled_first.groupindex)
            if group.isdigit():
                if int(group) > compiled_first.groups:
                    out.error(loc, "skimmer-group",
                              f"first pattern has no capture group {group}")
            elif group not in known:
                out.error(loc, "skimmer-group", f"first pattern has no capture group {group!r}")

    seen_defaults: dict = {}
    for d in bundle.sub_dialogues:
        for decl in d.init_attributes:
            key = (decl.scope, decl.name)
            if key in seen_defaults and seen_defaults[key] != decl.default:
                out.warning(d.id, "attr-conflict",
                            f"{decl.scope}.{decl.name} redeclared with a different default")
            seen_defaults.setdefault(key, decl.default)


def _reachable(dialogue: SubDialogue, start: str) -> set:
    seen = {start}
    frontier = [start]
    while frontier:
        node_id = frontier.pop()
        for edge in dialogue.edges:
            if edge.from_id == node_id and edge.to_id not in seen:
                seen.add(edge.to_id)
                frontier.append(edge.to_id)
    return seen


def _check_dialogue(bundle: DialogueBundle, dialogue: SubDialogue, out: _Collector) -> None:
    entity_types = {r.type_name for r in bundle.entity_rules}
    declared = bundle.declared_attributes()

    for tag in sorted(dialogue.entity_tags):
        if tag not in entity_types:
            out.error(dialogue.id, "entity-tag", f"entityTags names unknown entity type {tag!r}")

    for edge in dialogue.edges:
        for endpoint in (edge.from_id, edge.to_id):
            if dialogue.node(endpoint) is None:
                out.error(dialogue.id, "dangling-edge",
                          f"edge {edge.from_id} -> {edge.to_id} names unknown node {endpoint!r}")

    enters = [n for n in dialogue.nodes if n.kind == "Enter"]
    if len(enters) != 1:
        out.error(dialogue.id, "enter-count",
                  f"sub-dialogue must have exactly one Enter node, found {len(enters)}")
    else:
        reachable = _reachable(dialogue, enters[0].id)
        # A SubDialogueRef without a continuation hands control to the
        # dialogue selector, which is a legal way for this flow to end.
        def terminates(n: Node) -> bool:
            if n.id not in reachable:
                return False
            if n.kind == "Exit":
                return True
            return n.kind == "SubDialogueRef" and not dialogue.out_edges(n.id)

        if not any(terminates(n) for n in dialogue.nodes):
            out.error(dialogue.id, "unreachable-exit",
                      "no Exit (or selector hand-off) is reachable from Enter")

    # Which User Input does each intent hang off?
    intent_owner: dict = {}
    for edge in dialogue.edges:
        source = dialogue.node(edge.from_id)
        target = dialogue.node(edge.to_id)
        if source is None or target is None:
            continue
        if source.kind == "UserInput" and target.kind in ("Intent", "GlobalIntent"):
            intent_owner.setdefault(target.id, []).append(source.id)

    situations_seen: dict = {}
    for node in dialogue.nodes:
        loc = f"{dialogue.id}/{node.id}"
        if node.kind == "Intent":
            owners = intent_owner.get(node.id, [])
            if len(owners) != 1:
                out.error(loc, "intent-connection",
                          f"Intent must connect to exactly one User Input, found {len(owners)}")
        elif node.kind == "GlobalIntent":
            if intent_owner.get(node.id):
                out.error(loc, "global-intent-connection",
                          "Global Intent may not be connected to a User Input")
        elif node.kind == "UserInput":
            if not dialogue.user_input_intents(node.id):
                out.error(loc, "input-no-intent", "User Input has no connected Intent node")
            ood = node.payload.local_ood_action
            if ood is not None:
                target = dialogue.node(ood)
                if target is None or target.kind not in ("Action", "GlobalAction") \
                        or target.payload.situation != "OutOfDomain":
                    out.error(loc, "ood-action",
                              f"oodAction {ood!r} is not an OutOfDomain Action node")
        elif node.kind == "Function":
            guards = node.payload.transitions
            if guards and guards[-1].guard != Lit(True):
                out.error(loc, "function-default-guard",
                          "final transition guard must be the literal true")
            edge_keys = {e.out_key for e in dialogue.out_edges(node.id)}
            for t in guards:
                if t.out_key not in edge_keys:
                    out.error(loc, "function-out-key",
                              f"transition {t.out_key!r} has no matching edge")
        elif node.kind == "GlobalAction":
            situation = node.payload.situation
            if situation in situations_seen:
                out.error(loc, "action-duplicate",
                          f"second global {situation} action (first: {situations_seen[situation]})")
            situations_seen.setdefault(situation, node.id)
        elif node.kind == "SubDialogueRef":
            if bundle.dialogue(node.payload.dialogue_id) is None:
                out.error(loc, "dangling-ref",
                          f"references unknown sub-dialogue {node.payload.dialogue_id!r}")
        elif node.kind == "Speech":
            for template in node.payload.responses:
                for match in PLACEHOLDER_RE.finditer(template):
                    if (match.group(1), match.group(2)) not in declared:
                        out.error(loc, "template-placeholder",
                                  f"placeholder {match.group(0)} is not a declared attribute")

        if node.kind in ("Intent", "GlobalIntent"):
            for example in node.payload.examples:
                for _, type_name in example.marked_spans:
                    if type_name not in entity_types:
                        out.error(loc, "markup-type",
                                  f"entity markup uses unknown type {type_name!r}")

        if node.kind in ("Enter", "Speech", "Intent", "GlobalIntent", "Action", "GlobalAction"):
            if not dialogue.out_edges(node.id):
                out.warning(loc, "dead-end",
                            f"{node.kind} node has no outgoing edge; reaching it ends the turn in an error")


def validate_bundle(bundle: DialogueBundle) -> list:
    """Check every structural invariant; returns diagnostics (possibly empty)."""
    out = _Collector()
    _check_bundle_level(bundle, out)
    for dialogue in bundle.sub_dialogues:
        _check_dialogue(bundle, dialogue, out)
    return out.items


def has_errors(diagnostics: list) -> bool:
    return any(d.severity == "error" for d in diagnostics)
