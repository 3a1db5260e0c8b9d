"""Two-stage intent routing: similarity scope selection, then classification.

Stage one embeds the masked utterance and takes its best cosine similarity
against the local example bank of the current User Input and against the
global banks of every sub-dialogue on the path to the main dialogue.  If
both maxima fall below the out-of-domain threshold the turn is out of
domain; otherwise the winning scope's classifier picks the final intent.
Ties between local and global go to the local scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from ..model.nodes import DialogueBundle, NodeKey
from .embedder import cosine
from .pack import TrainedNluPack

SCOPE_LOCAL = "Local"
SCOPE_GLOBAL = "Global"
SCOPE_OOD = "OutOfDomain"


@dataclass(frozen=True)
class RoutingDecision:
    scope: str
    best_local_sim: float
    best_global_sim: float
    chosen_intent: Optional[NodeKey] = None
    confidence: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "scope": self.scope,
            "best_local_sim": self.best_local_sim,
            "best_global_sim": self.best_global_sim,
            "chosen_intent": list(self.chosen_intent) if self.chosen_intent else None,
            "confidence": self.confidence,
        }


def _dedup(dialogue_ids: List[str]) -> list:
    seen = set()
    ordered = []
    for dlg in dialogue_ids:
        if dlg not in seen:
            seen.add(dlg)
            ordered.append(dlg)
    return ordered


def route_and_classify(
    masked_utterance: str,
    context: NodeKey,
    global_scope: List[str],
    pack: TrainedNluPack,
) -> RoutingDecision:
    """``context`` is the awaiting User Input node; ``global_scope`` lists the
    sub-dialogue ids from the current one up to (and including) main."""
    local_clf = pack.local_classifiers.get(context)
    if local_clf is None:
        raise KeyError(f"unknown context node {context[0]}/{context[1]}")

    embedding = pack.embedder.embed(masked_utterance)

    best_local = 0.0
    for intent_key in local_clf.class_ids:
        for _, example_emb in pack.bank.get(intent_key, []):
            sim = cosine(embedding, example_emb)
            if sim > best_local:
                best_local = sim

    best_global = 0.0
    best_global_dialogue = None
    for dlg in _dedup(global_scope):
        global_clf = pack.global_classifiers.get(dlg)
        if global_clf is None:
            continue
        for intent_key in global_clf.class_ids:
            for _, example_emb in pack.bank.get(intent_key, []):
                sim = cosine(embedding, example_emb)
                if sim > best_global:
                    best_global = sim
                    best_global_dialogue = dlg

    if max(best_local, best_global) < pack.ood_threshold:
        return RoutingDecision(SCOPE_OOD, best_local, best_global)

    if best_local >= best_global:
        chosen, confidence = local_clf.classify(embedding)
        return RoutingDecision(SCOPE_LOCAL, best_local, best_global, chosen, confidence)

    chosen, confidence = pack.global_classifiers[best_global_dialogue].classify(embedding)
    return RoutingDecision(SCOPE_GLOBAL, best_local, best_global, chosen, confidence)


def masking_types(bundle: DialogueBundle, context: NodeKey, global_scope: List[str]) -> set:
    """Entity types allowed to be masked for this context: the union of the
    types marked up in the local intents' examples and in the examples of
    every global intent visible on the path to main."""
    allowed: set = set()
    dialogue = bundle.dialogue(context[0])
    if dialogue is not None:
        for intent in dialogue.user_input_intents(context[1]):
            allowed |= intent.payload.entity_types
    for dlg_id in _dedup(global_scope):
        dlg = bundle.dialogue(dlg_id)
        if dlg is None:
            continue
        for intent in dlg.global_intents:
            allowed |= intent.payload.entity_types
    return allowed
