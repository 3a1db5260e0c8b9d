"""Dialogue model: typed graphs, the bundle document format, the condition
expression language, and structural validation."""

from .bundle import BundleParseError, bundle_to_dict, parse_bundle, parse_bundle_dict, serialize_bundle
from .conditions import (
    AttributeView,
    EvalError,
    Expr,
    MappingView,
    ParseError,
    Value,
    eval_condition,
    parse_condition,
)
from .nodes import (
    AttributeDecl,
    AttributeRef,
    BundleConfig,
    DialogueBundle,
    Edge,
    EntityRule,
    IntentExample,
    MarkupError,
    Node,
    NodeKey,
    SkimmerRule,
    SubDialogue,
    node_key_str,
    parse_intent_example,
)
from .validate import Diagnostic, has_errors, validate_bundle

__all__ = [
    "AttributeDecl",
    "AttributeRef",
    "AttributeView",
    "BundleConfig",
    "BundleParseError",
    "Diagnostic",
    "DialogueBundle",
    "Edge",
    "EntityRule",
    "EvalError",
    "Expr",
    "IntentExample",
    "MappingView",
    "MarkupError",
    "Node",
    "NodeKey",
    "ParseError",
    "SkimmerRule",
    "SubDialogue",
    "Value",
    "bundle_to_dict",
    "eval_condition",
    "has_errors",
    "node_key_str",
    "parse_bundle",
    "parse_bundle_dict",
    "parse_condition",
    "parse_intent_example",
    "serialize_bundle",
    "validate_bundle",
]
