"""Training and serialization of per-application NLU packs.

A pack holds one classifier per User Input node (over its local intents),
one per sub-dialogue that declares global intents, and the bank of masked,
embedded training examples used by the similarity routing stage.

Pack files are plain JSON with decimal weight arrays, so a trained
application can be served without retraining and diffed like any other
artifact.  Bank embeddings are not stored: the embedder is deterministic,
so they are recomputed on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..model.nodes import DialogueBundle, NodeKey, node_key_str
from .classifier import IntentClassifier, train_classifier
from .embedder import DEFAULT_EMBEDDER, Embedder

EMBEDDER_TAG = "hashing-unigram-trigram"


class TrainingError(ValueError):
    pass


@dataclass
class TrainedNluPack:
    embedder: Embedder
    ood_threshold: float
    # User Input node -> classifier over its local intents.
    local_classifiers: Dict[NodeKey, IntentClassifier] = field(default_factory=dict)
    # Sub-dialogue id -> classifier over that dialogue's global intents.
    global_classifiers: Dict[str, IntentClassifier] = field(default_factory=dict)
    # Intent node -> [(masked example, embedding)].
    bank: Dict[NodeKey, List[Tuple[str, np.ndarray]]] = field(default_factory=dict)

    def bank_texts(self, intent: NodeKey) -> list:
        return [text for text, _ in self.bank.get(intent, [])]


def _usable_examples(embedder: Embedder, intent_key: NodeKey, payload) -> list:
    entries = []
    for example in payload.examples:
        emb = embedder.embed(example.masked)
        if float(np.linalg.norm(emb)) == 0.0:
            continue
        entries.append((example.masked, emb))
    if not entries:
        raise TrainingError(
            f"intent {node_key_str(intent_key)} has no usable examples after masking"
        )
    return entries


def train_pack(bundle: DialogueBundle, embedder: Optional[Embedder] = None) -> TrainedNluPack:
    """Embed every intent example (masked through its own markup) and fit all
    local and global classifiers.  Fully deterministic for a given bundle."""
    embedder = embedder or DEFAULT_EMBEDDER
    pack = TrainedNluPack(embedder=embedder, ood_threshold=bundle.config.ood_threshold)

    for dialogue in bundle.sub_dialogues:
        for user_input in dialogue.user_inputs:
            intents = dialogue.user_input_intents(user_input.id)
            if not intents:
                continue
            class_ids = []
            pairs = []
            for class_index, intent in enumerate(intents):
                key = (dialogue.id, intent.id)
                entries = _usable_examples(embedder, key, intent.payload)
                pack.bank[key] = entries
                class_ids.append(key)
                pairs.extend((class_index, emb) for _, emb in entries)
            pack.local_classifiers[(dialogue.id, user_input.id)] = train_classifier(class_ids, pairs)

        global_intents = dialogue.global_intents
        if global_intents:
            class_ids = []
            pairs = []
            for class_index, intent in enumerate(global_intents):
                key = (dialogue.id, intent.id)
                entries = _usable_examples(embedder, key, intent.payload)
                pack.bank[key] = entries
                class_ids.append(key)
                pairs.extend((class_index, emb) for _, emb in entries)
            pack.global_classifiers[dialogue.id] = train_classifier(class_ids, pairs)

    return pack


def _classifier_to_dict(clf: IntentClassifier) -> dict:
    return {
        "classes": [list(key) for key in clf.class_ids],
        "weights": [[float(w) for w in row] for row in clf.weights],
        "bias": [float(b) for b in clf.bias],
    }


def _classifier_from_dict(obj: dict) -> IntentClassifier:
    class_ids = tuple((c[0], c[1]) for c in obj["classes"])
    weights = np.asarray(obj["weights"], dtype=np.float64)
    if weights.size == 0:
        weights = weights.reshape(len(class_ids), 0)
    return IntentClassifier(class_ids, weights, np.asarray(obj["bias"], dtype=np.float64))


def pack_to_json(pack: TrainedNluPack) -> str:
    locals_obj: dict = {}
    for (dlg, node), clf in pack.local_classifiers.items():
        locals_obj.setdefault(dlg, {})[node] = _classifier_to_dict(clf)
    globals_obj = {dlg: _classifier_to_dict(clf) for dlg, clf in pack.global_classifiers.items()}
    bank_obj: dict = {}
    for (dlg, node), entries in pack.bank.items():
        bank_obj.setdefault(dlg, {})[node] = [text for text, _ in entries]
    doc = {
        "embedder": EMBEDDER_TAG,
        "dim": pack.embedder.dim,
        "oodThreshold": pack.ood_threshold,
        "locals": locals_obj,
        "globals": globals_obj,
        "bank": bank_obj,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def pack_from_json(text: str, embedder: Optional[Embedder] = None) -> TrainedNluPack:
    doc = json.loads(text)
    embedder = embedder or DEFAULT_EMBEDDER
    if doc.get("dim") != embedder.dim:
        raise ValueError(f"pack dimension {doc.get('dim')} does not match embedder {embedder.dim}")
    pack = TrainedNluPack(embedder=embedder, ood_threshold=float(doc["oodThreshold"]))
    for dlg, inputs in doc.get("locals", {}).items():
        for node, clf in inputs.items():
            pack.local_classifiers[(dlg, node)] = _classifier_from_dict(clf)
    for dlg, clf in doc.get("globals", {}).items():
        pack.global_classifiers[dlg] = _classifier_from_dict(clf)
    for dlg, intents in doc.get("bank", {}).items():
        for node, texts in intents.items():
            pack.bank[(dlg, node)] = [(t, embedder.embed(t)) for t in texts]
    return pack
