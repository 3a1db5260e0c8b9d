"""flowkit: a runtime for declaratively defined conversational applications.

Load a bundle (a set of typed dialogue graphs), train its intent and
out-of-domain models, then run, persist and analyze conversations::

    from flowkit import parse_bundle, train_pack, Engine

    bundle = parse_bundle(open("app.json").read())
    pack = train_pack(bundle)
    engine = Engine(bundle, pack)
    session, hello = engine.start_session(seed=42)
    reply = engine.process_turn(session, "hi there")
"""

from .engine import Engine, PlatformState, Session, TurnInput, TurnResult, select_dialogue
from .model import (
    BundleParseError,
    Diagnostic,
    DialogueBundle,
    eval_condition,
    parse_bundle,
    parse_condition,
    serialize_bundle,
    validate_bundle,
)
from .nlu import (
    RoutingDecision,
    TrainedNluPack,
    embed,
    mask_entities,
    pack_from_json,
    pack_to_json,
    recognize_entities,
    route_and_classify,
    train_pack,
)
from .nrg import HttpGenerator, NrgRequest, NrgResponse, StubGenerator
from .skimmer import skim
from .store import DataStore, MetricQuery, MetricSeries, TurnRecord

__version__ = "0.1.0"

__all__ = [
    "BundleParseError",
    "DataStore",
    "Diagnostic",
    "DialogueBundle",
    "Engine",
    "HttpGenerator",
    "MetricQuery",
    "MetricSeries",
    "NrgRequest",
    "NrgResponse",
    "PlatformState",
    "RoutingDecision",
    "Session",
    "StubGenerator",
    "TrainedNluPack",
    "TurnInput",
    "TurnRecord",
    "TurnResult",
    "embed",
    "eval_condition",
    "mask_entities",
    "pack_from_json",
    "pack_to_json",
    "parse_bundle",
    "parse_condition",
    "recognize_entities",
    "route_and_classify",
    "select_dialogue",
    "serialize_bundle",
    "skim",
    "train_pack",
    "validate_bundle",
]
