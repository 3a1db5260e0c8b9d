import json

import pytest

from flowkit.model import parse_bundle


def node(id, kind, **payload):
    return {"id": id, "kind": kind, **payload}


def edge(from_id, to_id, out="next"):
    return {"from": from_id, "out": out, "to": to_id}


def dialogue(id, nodes, edges, **extra):
    return {"id": id, "nodes": nodes, "edges": edges, **extra}


def doc(dialogues, main=None, entities=(), skimmer=(), pool=(), config=None):
    return {
        "main": main or dialogues[0]["id"],
        "dialogues": dialogues,
        "entities": list(entities),
        "skimmer": list(skimmer),
        "selectorPool": list(pool),
        "config": config or {},
    }


def minimal_doc():
    """Smallest legal graph: Enter -> Speech("Hi!") -> Exit."""
    return doc([
        dialogue(
            "main",
            [node("enter", "Enter"), node("hi", "Speech", responses=["Hi!"]), node("out", "Exit")],
            [edge("enter", "hi"), edge("hi", "out")],
        )
    ])


def parse_doc(document):
    return parse_bundle(json.dumps(document))


@pytest.fixture
def minimal_bundle():
    return parse_doc(minimal_doc())


def yes_no_doc(extra_intent_examples=None):
    """One User Input with yes/no intents; each branch speaks and exits."""
    return doc([
        dialogue(
            "main",
            [
                node("enter", "Enter"),
                node("ask", "Speech", responses=["Ready?"]),
                node("q", "UserInput"),
                node("yes", "Intent", examples=["yes", "yeah", "yep"]),
                node("no", "Intent", examples=(extra_intent_examples or ["no", "nope"])),
                node("ok", "Speech", responses=["Great!"]),
                node("shame", "Speech", responses=["Too bad."]),
                node("out", "Exit"),
            ],
            [
                edge("enter", "ask"),
                edge("ask", "q"),
                edge("q", "yes", out="intent"),
                edge("q", "no", out="intent"),
                edge("yes", "ok"),
                edge("no", "shame"),
                edge("ok", "out"),
                edge("shame", "out"),
            ],
        )
    ])
