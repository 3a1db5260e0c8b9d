"""NLU: embedding, entity recognition, masking, training and routing."""

from .classifier import IntentClassifier, train_classifier
from .embedder import DIM, DEFAULT_EMBEDDER, Embedder, HashingEmbedder, cosine, embed, fnv1a_64
from .entities import EntitySpan, recognize_entities, span_to_dict
from .masking import mask_entities
from .pack import TrainedNluPack, TrainingError, pack_from_json, pack_to_json, train_pack
from .routing import (
    SCOPE_GLOBAL,
    SCOPE_LOCAL,
    SCOPE_OOD,
    RoutingDecision,
    masking_types,
    route_and_classify,
)

__all__ = [
    "DIM",
    "DEFAULT_EMBEDDER",
    "Embedder",
    "EntitySpan",
    "HashingEmbedder",
    "IntentClassifier",
    "RoutingDecision",
    "SCOPE_GLOBAL",
    "SCOPE_LOCAL",
    "SCOPE_OOD",
    "TrainedNluPack",
    "TrainingError",
    "cosine",
    "embed",
    "fnv1a_64",
    "mask_entities",
    "masking_types",
    "pack_from_json",
    "pack_to_json",
    "recognize_entities",
    "route_and_classify",
    "span_to_dict",
    "train_classifier",
    "train_pack",
]
