import json

import pytest

from flowkit.model import (
    BundleParseError,
    parse_bundle,
    parse_intent_example,
    serialize_bundle,
)
from flowkit.model.nodes import MarkupError

from conftest import dialogue, doc, edge, minimal_doc, node, parse_doc, yes_no_doc


class TestParseBundle:
    def test_minimal_bundle(self):
        bundle = parse_doc(minimal_doc())
        assert len(bundle.sub_dialogues) == 1
        assert len(bundle.main.nodes) == 3
        assert bundle.main.enter_node.id == "enter"

    def test_two_enter_nodes_rejected(self):
        document = minimal_doc()
        document["dialogues"][0]["nodes"].append(node("enter2", "Enter"))
        with pytest.raises(BundleParseError, match="multiple Enter"):
            parse_doc(document)

    def test_missing_enter_rejected(self):
        document = minimal_doc()
        document["dialogues"][0]["nodes"] = [node("out", "Exit")]
        with pytest.raises(BundleParseError, match="no Enter"):
            parse_doc(document)

    def test_intent_markup_parsed(self):
        document = yes_no_doc()
        document["dialogues"][0]["nodes"][3]["examples"] = ["My favorite movie is [Matrix]{movie}"]
        document["entities"] = [{"type": "movie", "patterns": ["Matrix"], "normalizer": "none"}]
        bundle = parse_doc(document)
        intent = bundle.main.node("yes")
        example = intent.payload.examples[0]
        assert example.marked_spans == (("Matrix", "movie"),)
        assert example.masked == "My favorite movie is {movie}"
        assert example.plain == "My favorite movie is Matrix"

    def test_malformed_markup_rejected(self):
        document = yes_no_doc()
        document["dialogues"][0]["nodes"][3]["examples"] = ["broken [Matrix{movie}"]
        with pytest.raises(BundleParseError, match="markup"):
            parse_doc(document)

    def test_duplicate_node_id_rejected(self):
        document = minimal_doc()
        document["dialogues"][0]["nodes"].append(node("hi", "Speech", responses=["again"]))
        with pytest.raises(BundleParseError, match="duplicate id"):
            parse_doc(document)

    def test_unknown_kind_rejected(self):
        document = minimal_doc()
        document["dialogues"][0]["nodes"].append(node("x", "Wormhole"))
        with pytest.raises(BundleParseError, match="unknown node kind"):
            parse_doc(document)

    def test_json_syntax_error_carries_line(self):
        with pytest.raises(BundleParseError) as err:
            parse_bundle('{"main": "m",\n  "dialogues": [}')
        assert err.value.line == 2

    def test_unknown_field_rejected(self):
        document = minimal_doc()
        document["dialogues"][0]["nodes"][1]["response"] = ["typo"]
        with pytest.raises(BundleParseError, match="unknown field"):
            parse_doc(document)

    def test_empty_speech_rejected(self):
        document = minimal_doc()
        document["dialogues"][0]["nodes"][1]["responses"] = []
        with pytest.raises(BundleParseError):
            parse_doc(document)

    def test_threshold_range_checked(self):
        document = minimal_doc()
        document["config"] = {"oodThreshold": 1.5}
        with pytest.raises(BundleParseError, match="oodThreshold"):
            parse_doc(document)

    def test_function_payload(self):
        document = minimal_doc()
        document["dialogues"][0]["attributes"] = [{"name": "n", "scope": "session", "default": 0}]
        document["dialogues"][0]["nodes"].insert(2, node(
            "f", "Function",
            assign=[{"set": "session.n", "to": "1"}],
            transitions=[{"when": "session.n > 0", "out": "pos"}, {"when": "true", "out": "other"}],
        ))
        document["dialogues"][0]["edges"] = [
            edge("enter", "hi"), edge("hi", "f"),
            edge("f", "out", out="pos"), edge("f", "out", out="other"),
        ]
        bundle = parse_doc(document)
        fn = bundle.main.node("f").payload
        assert [t.out_key for t in fn.transitions] == ["pos", "other"]
        assert str(fn.assignments[0].target) == "session.n"


class TestRoundTrip:
    def test_parse_serialize_parse_identical(self):
        document = yes_no_doc()
        document["dialogues"][0]["labels"] = ["smalltalk"]
        document["dialogues"][0]["startingCondition"] = "session.done == false"
        document["dialogues"][0]["attributes"] = [
            {"name": "done", "scope": "session", "default": False}
        ]
        document["entities"] = [{"type": "movie", "patterns": ["(?i)matrix"], "normalizer": "none"}]
        document["skimmer"] = [
            {"patterns": ["\\bbrother\\b"], "attribute": "user.has_sibling", "value": True}
        ]
        document["selectorPool"] = ["main"]
        first = parse_doc(document)
        second = parse_bundle(serialize_bundle(first))
        assert first == second

    def test_minimal_round_trip(self, minimal_bundle):
        assert parse_bundle(serialize_bundle(minimal_bundle)) == minimal_bundle


class TestMarkup:
    def test_plain_text_passthrough(self):
        example = parse_intent_example("just words")
        assert example.masked == "just words"
        assert example.marked_spans == ()

    def test_two_spans(self):
        example = parse_intent_example("from [Prague]{city} to [Brno]{city}")
        assert example.masked == "from {city} to {city}"
        assert example.plain == "from Prague to Brno"

    def test_stray_close_bracket(self):
        with pytest.raises(MarkupError):
            parse_intent_example("oops ] here")

    def test_missing_type(self):
        with pytest.raises(MarkupError):
            parse_intent_example("[Matrix] alone")

    def test_pre_masked_braces_are_plain_text(self):
        example = parse_intent_example("i like {movie}")
        assert example.masked == "i like {movie}"
