"""Canonical bundle document format: UTF-8 JSON, parsed into DialogueBundle.

Top-level keys: ``main``, ``dialogues``, ``entities``, ``skimmer``,
``selectorPool``, ``config``.  Node records are ``{id, kind, ...payload}``,
edges are ``{from, out, to}``.
"""

from __future__ import annotations

import json
from typing import Optional

from . import conditions
from .conditions import parse_condition
from .nodes import (
    ATTRIBUTE_SCOPES,
    NODE_KINDS,
    SITUATIONS,
    ActionPayload,
    Assignment,
    AttributeDecl,
    AttributeRef,
    BundleConfig,
    DialogueBundle,
    Edge,
    EmptyPayload,
    EntityRule,
    FunctionPayload,
    IntentPayload,
    MarkupError,
    Node,
    SkimmerRule,
    SpeechPayload,
    SubDialogue,
    SubDialogueRefPayload,
    Transition,
    UserInputPayload,
    parse_intent_example,
)

NORMALIZERS = ("none", "integer", "decimal", "time-of-day", "date", "url", "money")


class BundleParseError(ValueError):
    """First structural or syntax problem found in a bundle document.

    ``line``/``col`` are set for JSON syntax errors; ``path`` points at the
    offending element for structural errors.
    """

    def __init__(self, message: str, line: Optional[int] = None,
                 col: Optional[int] = None, path: Optional[str] = None):
        where = ""
        if line is not None:
            where = f" at line {line}, column {col}"
        elif path:
            where = f" at {path}"
        super().__init__(f"{message}{where}")
        self.message = message
        self.line = line
        self.col = col
        self.path = path


def _fail(message: str, path: str) -> BundleParseError:
    raise BundleParseError(message, path=path)


def _require(obj: dict, key: str, kind: type, path: str, default=KeyError):
    if key not in obj:
        if default is KeyError:
            _fail(f"missing required field {key!r}", path)
        return default
    value = obj[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool) and kind in (int, float)):
        _fail(f"field {key!r} must be {kind.__name__}", path)
    return value


def _check_keys(obj: dict, allowed: set, path: str) -> None:
    for key in obj:
        if key not in allowed:
            _fail(f"unknown field {key!r}", path)


def _parse_expr(text, path: str):
    if not isinstance(text, str):
        _fail("expression must be a string", path)
    try:
        return parse_condition(text)
    except conditions.ParseError as err:
        _fail(f"bad expression {text!r}: {err}", path)


def _parse_node(obj, path: str) -> Node:
    if not isinstance(obj, dict):
        _fail("node must be an object", path)
    node_id = _require(obj, "id", str, path)
    if not node_id:
        _fail("node id must be non-empty", path)
    if "/" in node_id or any(c.isspace() for c in node_id):
        _fail(f"node id {node_id!r} may not contain '/' or whitespace", path)
    kind = _require(obj, "kind", str, path)
    if kind not in NODE_KINDS:
        _fail(f"unknown node kind {kind!r}", path)

    base = {"id", "kind"}
    if kind in ("Enter", "Exit"):
        _check_keys(obj, base, path)
        return Node(node_id, kind, EmptyPayload())

    if kind == "Speech":
        _check_keys(obj, base | {"responses", "nrgGrounding"}, path)
        responses = _require(obj, "responses", list, path)
        if not responses or not all(isinstance(r, str) and r for r in responses):
            _fail("Speech responses must be a non-empty list of non-empty strings", path)
        grounding = _require(obj, "nrgGrounding", bool, path, default=False)
        return Node(node_id, kind, SpeechPayload(tuple(responses), grounding))

    if kind == "UserInput":
        _check_keys(obj, base | {"oodAction"}, path)
        ood = _require(obj, "oodAction", str, path, default=None)
        return Node(node_id, kind, UserInputPayload(ood))

    if kind in ("Intent", "GlobalIntent"):
        _check_keys(obj, base | {"examples"}, path)
        examples = _require(obj, "examples", list, path)
        if not examples or not all(isinstance(e, str) and e.strip() for e in examples):
            _fail("intent examples must be a non-empty list of non-empty strings", path)
        parsed = []
        for i, raw in enumerate(examples):
            try:
                parsed.append(parse_intent_example(raw))
            except MarkupError as err:
                _fail(f"malformed entity markup: {err}", f"{path}.examples[{i}]")
        return Node(node_id, kind, IntentPayload(tuple(parsed), is_global=kind == "GlobalIntent"))

    if kind == "Function":
        _check_keys(obj, base | {"assign", "transitions"}, path)
        assignments = []
        for i, a in enumerate(_require(obj, "assign", list, path, default=[])):
            apath = f"{path}.assign[{i}]"
            if not isinstance(a, dict):
                _fail("assignment must be an object", apath)
            _check_keys(a, {"set", "to"}, apath)
            try:
                target = AttributeRef.parse(_require(a, "set", str, apath))
            except ValueError as err:
                _fail(str(err), apath)
            source = _require(a, "to", str, apath)
            assignments.append(Assignment(target, _parse_expr(source, apath), source))
        transitions = []
        raw_transitions = _require(obj, "transitions", list, path)
        if not raw_transitions:
            _fail("Function needs at least one transition", path)
        for i, t in enumerate(raw_transitions):
            tpath = f"{path}.transitions[{i}]"
            if not isinstance(t, dict):
                _fail("transition must be an object", tpath)
            _check_keys(t, {"when", "out"}, tpath)
            source = _require(t, "when", str, tpath)
            out_key = _require(t, "out", str, tpath)
            transitions.append(Transition(_parse_expr(source, tpath), out_key, source))
        return Node(node_id, kind, FunctionPayload(tuple(assignments), tuple(transitions)))

    if kind in ("Action", "GlobalAction"):
        _check_keys(obj, base | {"situation"}, path)
        situation = _require(obj, "situation", str, path)
        if situation not in SITUATIONS:
            _fail(f"unknown action situation {situation!r}", path)
        return Node(node_id, kind, ActionPayload(situation, is_global=kind == "GlobalAction"))

    # SubDialogueRef
    _check_keys(obj, base | {"dialogue"}, path)
    return Node(node_id, kind, SubDialogueRefPayload(_require(obj, "dialogue", str, path)))


def _parse_dialogue(obj, path: str) -> SubDialogue:
    if not isinstance(obj, dict):
        _fail("dialogue must be an object", path)
    _check_keys(
        obj,
        {"id", "name", "labels", "entityTags", "startingCondition", "attributes", "nodes", "edges"},
        path,
    )
    dlg_id = _require(obj, "id", str, path)
    if not dlg_id:
        _fail("dialogue id must be non-empty", path)
    if "/" in dlg_id or any(c.isspace() for c in dlg_id):
        _fail(f"dialogue id {dlg_id!r} may not contain '/' or whitespace", path)

    labels = _require(obj, "labels", list, path, default=[])
    tags = _require(obj, "entityTags", list, path, default=[])
    if not all(isinstance(x, str) for x in labels + tags):
        _fail("labels and entityTags must be lists of strings", path)

    cond_source = _require(obj, "startingCondition", str, path, default=None)
    cond = _parse_expr(cond_source, f"{path}.startingCondition") if cond_source is not None else None

    attributes = []
    seen_attrs = set()
    for i, a in enumerate(_require(obj, "attributes", list, path, default=[])):
        apath = f"{path}.attributes[{i}]"
        if not isinstance(a, dict):
            _fail("attribute must be an object", apath)
        _check_keys(a, {"name", "scope", "default"}, apath)
        name = _require(a, "name", str, apath)
        scope = _require(a, "scope", str, apath)
        if scope not in ATTRIBUTE_SCOPES:
            _fail(f"unknown attribute scope {scope!r}", apath)
        if "default" not in a:
            _fail("attribute needs a default value", apath)
        if (scope, name) in seen_attrs:
            _fail(f"duplicate attribute {scope}.{name}", apath)
        seen_attrs.add((scope, name))
        attributes.append(AttributeDecl(name, scope, a["default"]))

    nodes = []
    seen_nodes = set()
    enter_count = 0
    for i, n in enumerate(_require(obj, "nodes", list, path)):
        node = _parse_node(n, f"{path}.nodes[{i}]")
        if node.id in seen_nodes:
            _fail(f"duplicate id {node.id!r}", f"{path}.nodes[{i}]")
        seen_nodes.add(node.id)
        if node.kind == "Enter":
            enter_count += 1
        nodes.append(node)
    if enter_count == 0:
        _fail(f"sub-dialogue {dlg_id!r} has no Enter node", path)
    if enter_count > 1:
        _fail(f"multiple Enter nodes in sub-dialogue {dlg_id!r}", path)

    edges = []
    for i, e in enumerate(_require(obj, "edges", list, path, default=[])):
        epath = f"{path}.edges[{i}]"
        if not isinstance(e, dict):
            _fail("edge must be an object", epath)
        _check_keys(e, {"from", "out", "to"}, epath)
        edges.append(
            Edge(
                _require(e, "from", str, epath),
                _require(e, "out", str, epath, default="next"),
                _require(e, "to", str, epath),
            )
        )

    return SubDialogue(
        id=dlg_id,
        name=_require(obj, "name", str, path, default=dlg_id),
        labels=frozenset(labels),
        entity_tags=frozenset(tags),
        starting_condition=cond,
        starting_condition_source=cond_source,
        nodes=tuple(nodes),
        edges=tuple(edges),
        init_attributes=tuple(attributes),
    )


def parse_bundle_dict(doc: dict) -> DialogueBundle:
    """Parse an already-decoded bundle document."""
    if not isinstance(doc, dict):
        _fail("bundle document must be a JSON object", "$")
    _check_keys(doc, {"main", "dialogues", "entities", "skimmer", "selectorPool", "config"}, "$")
    main_id = _require(doc, "main", str, "$")

    dialogues = []
    seen = set()
    for i, d in enumerate(_require(doc, "dialogues", list, "$")):
        dlg = _parse_dialogue(d, f"dialogues[{i}]")
        if dlg.id in seen:
            _fail(f"duplicate sub-dialogue id {dlg.id!r}", f"dialogues[{i}]")
        seen.add(dlg.id)
        dialogues.append(dlg)

    entities = []
    seen_types = set()
    for i, e in enumerate(_require(doc, "entities", list, "$", default=[])):
        epath = f"entities[{i}]"
        if not isinstance(e, dict):
            _fail("entity rule must be an object", epath)
        _check_keys(e, {"type", "patterns", "normalizer"}, epath)
        type_name = _require(e, "type", str, epath)
        if type_name in seen_types:
            _fail(f"duplicate entity type {type_name!r}", epath)
        seen_types.add(type_name)
        patterns = _require(e, "patterns", list, epath)
        if not patterns or not all(isinstance(p, str) and p for p in patterns):
            _fail("entity patterns must be a non-empty list of strings", epath)
        normalizer = _require(e, "normalizer", str, epath, default="none")
        if normalizer not in NORMALIZERS:
            _fail(f"unknown normalizer {normalizer!r}", epath)
        entities.append(EntityRule(type_name, tuple(patterns), normalizer))

    skimmer = []
    for i, s in enumerate(_require(doc, "skimmer", list, "$", default=[])):
        spath = f"skimmer[{i}]"
        if not isinstance(s, dict):
            _fail("skimmer rule must be an object", spath)
        _check_keys(s, {"patterns", "attribute", "value"}, spath)
        patterns = _require(s, "patterns", list, spath)
        if not patterns or not all(isinstance(p, str) and p for p in patterns):
            _fail("skimmer patterns must be a non-empty list of strings", spath)
        try:
            attribute = AttributeRef.parse(_require(s, "attribute", str, spath))
        except ValueError as err:
            _fail(str(err), spath)
        if "value" not in s:
            _fail("skimmer rule needs a value", spath)
        value = s["value"]
        if not isinstance(value, (bool, str)):
            _fail("skimmer value must be true, false, a string, or a '$group' reference", spath)
        skimmer.append(SkimmerRule(tuple(patterns), attribute, value))

    pool = _require(doc, "selectorPool", list, "$", default=[])
    if not all(isinstance(p, str) for p in pool):
        _fail("selectorPool must be a list of sub-dialogue ids", "selectorPool")

    cfg = _require(doc, "config", dict, "$", default={})
    _check_keys(cfg, {"language", "oodThreshold", "seed"}, "config")
    threshold = _require(cfg, "oodThreshold", float, "config", default=0.55)
    if not 0.0 <= threshold <= 1.0:
        _fail(f"oodThreshold must be within [0, 1], got {threshold}", "config")
    config = BundleConfig(
        language=_require(cfg, "language", str, "config", default="en"),
        ood_threshold=threshold,
        seed=_require(cfg, "seed", int, "config", default=0),
    )

    return DialogueBundle(
        main_dialogue_id=main_id,
        sub_dialogues=tuple(dialogues),
        entity_rules=tuple(entities),
        skimmer_rules=tuple(skimmer),
        selector_pool=tuple(pool),
        config=config,
    )


def parse_bundle(text: str) -> DialogueBundle:
    """Parse a bundle document from JSON text.

    Raises :class:`BundleParseError` carrying line/column for syntax errors
    and a document path for structural ones.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise BundleParseError(f"invalid JSON: {err.msg}", line=err.lineno, col=err.colno) from err
    return parse_bundle_dict(doc)


def _node_to_dict(node: Node) -> dict:
    out: dict = {"id": node.id, "kind": node.kind}
    p = node.payload
    if isinstance(p, SpeechPayload):
        out["responses"] = list(p.responses)
        if p.nrg_grounding:
            out["nrgGrounding"] = True
    elif isinstance(p, UserInputPayload):
        if p.local_ood_action is not None:
            out["oodAction"] = p.local_ood_action
    elif isinstance(p, IntentPayload):
        out["examples"] = [e.raw for e in p.examples]
    elif isinstance(p, FunctionPayload):
        out["assign"] = [{"set": str(a.target), "to": a.source} for a in p.assignments]
        out["transitions"] = [{"when": t.source, "out": t.out_key} for t in p.transitions]
    elif isinstance(p, ActionPayload):
        out["situation"] = p.situation
    elif isinstance(p, SubDialogueRefPayload):
        out["dialogue"] = p.dialogue_id
    return out


def bundle_to_dict(bundle: DialogueBundle) -> dict:
    dialogues = []
    for d in bundle.sub_dialogues:
        obj: dict = {
            "id": d.id,
            "name": d.name,
            "labels": sorted(d.labels),
            "entityTags": sorted(d.entity_tags),
        }
        if d.starting_condition_source is not None:
            obj["startingCondition"] = d.starting_condition_source
        obj["attributes"] = [
            {"name": a.name, "scope": a.scope, "default": a.default} for a in d.init_attributes
        ]
        obj["nodes"] = [_node_to_dict(n) for n in d.nodes]
        obj["edges"] = [{"from": e.from_id, "out": e.out_key, "to": e.to_id} for e in d.edges]
        dialogues.append(obj)
    return {
        "main": bundle.main_dialogue_id,
        "dialogues": dialogues,
        "entities": [
            {"type": r.type_name, "patterns": list(r.patterns), "normalizer": r.normalizer}
            for r in bundle.entity_rules
        ],
        "skimmer": [
            {"patterns": list(r.patterns), "attribute": str(r.attribute), "value": r.value}
            for r in bundle.skimmer_rules
        ],
        "selectorPool": list(bundle.selector_pool),
        "config": {
            "language": bundle.config.language,
            "oodThreshold": bundle.config.ood_threshold,
            "seed": bundle.config.seed,
        },
    }


def serialize_bundle(bundle: DialogueBundle) -> str:
    return json.dumps(bundle_to_dict(bundle), ensure_ascii=False, indent=2) + "\n"
