"""Walk one utterance through the NLU stages by hand.

Entity recognition -> masking -> embedding -> similarity routing, using the
same pieces the engine runs every turn.

    python3 demos/02_nlu_pipeline.py
"""

from flowkit import parse_bundle, train_pack
from flowkit.model.nodes import EntityRule
from flowkit.nlu import cosine, embed, mask_entities, recognize_entities, route_and_classify

import json


def main():
    rules = [
        EntityRule("movie", (r"\b(Matrix|Titanic|Inception)\b",), "none"),
        EntityRule("time", (r"\b(?P<hour>\d{1,2}):(?P<minute>\d{2})\b",), "time-of-day"),
    ]
    utterance = "wake me at 7:30 after Matrix"
    spans = recognize_entities(utterance, rules)
    print("entities:")
    for s in spans:
        print(f"  [{s.start}:{s.end}] {s.surface!r} -> {s.type_name} = {s.normalized}")

    masked = mask_entities(utterance, spans, {"movie", "time"})
    print(f"masked: {masked!r}")

    a, b = embed("i love this movie"), embed("i really love this movie")
    print(f"cosine(similar sentences) = {cosine(a, b):.3f}")
    print(f"cosine(unrelated)         = {cosine(a, embed('quarterly tax report')):.3f}")

    # A two-intent context: routing picks scope by nearest example, the
    # trained classifier picks the final intent.
    bundle = parse_bundle(json.dumps({
        "main": "m",
        "dialogues": [{
            "id": "m", "nodes": [
                {"id": "e", "kind": "Enter"},
                {"id": "ask", "kind": "Speech", "responses": ["Movie?"]},
                {"id": "q", "kind": "UserInput"},
                {"id": "like", "kind": "Intent", "examples": ["i love [Matrix]{movie}", "my favorite is [Titanic]{movie}"]},
                {"id": "dislike", "kind": "Intent", "examples": ["i hate romances", "that was boring"]},
                {"id": "x", "kind": "Exit"},
            ],
            "edges": [
                {"from": "e", "out": "next", "to": "ask"},
                {"from": "ask", "out": "next", "to": "q"},
                {"from": "q", "out": "intent", "to": "like"},
                {"from": "q", "out": "intent", "to": "dislike"},
                {"from": "like", "out": "next", "to": "x"},
                {"from": "dislike", "out": "next", "to": "x"},
            ],
        }],
        "entities": [{"type": "movie", "patterns": ["\\b(Matrix|Titanic)\\b"], "normalizer": "none"}],
        "skimmer": [], "selectorPool": [], "config": {},
    }))
    pack = train_pack(bundle)
    for probe in ("i love {movie}", "that was boring", "completely unrelated zzz"):
        decision = route_and_classify(probe, ("m", "q"), ["m"], pack)
        print(f"route({probe!r}) -> {decision.scope}"
              + (f", intent={decision.chosen_intent[1]} p={decision.confidence:.2f}"
                 if decision.chosen_intent else ""))


if __name__ == "__main__":
    main()
