from flowkit.model.nodes import AttributeRef, SkimmerRule
from flowkit.skimmer import skim

SIBLING = SkimmerRule((r"\bbrother\b",), AttributeRef("user", "has_sibling"), True)


def test_brotherly_mention_fires():
    writes = skim("I went to the cinema with my brother yesterday.", [SIBLING])
    assert writes == [(AttributeRef("user", "has_sibling"), True)]


def test_unrelated_utterance_fires_nothing():
    assert skim("hello", [SIBLING]) == []


def test_all_patterns_must_match():
    rule = SkimmerRule((r"\bbrother\b", r"\bcinema\b"), AttributeRef("user", "movie_sibling"), True)
    assert skim("my brother is tall", [rule]) == []
    assert skim("cinema with my brother", [rule]) == [(rule.attribute, True)]


def test_case_insensitive_on_raw_utterance():
    assert skim("My BROTHER came along", [SIBLING]) == [(SIBLING.attribute, True)]


def test_capture_group_value_from_first_pattern():
    rule = SkimmerRule(
        (r"my name is (?P<name>[a-z]+)",),
        AttributeRef("user", "name"),
        "$name",
    )
    assert skim("my name is sam", [rule]) == [(rule.attribute, "sam")]


def test_numbered_capture_group():
    rule = SkimmerRule((r"i am (\d+) years old",), AttributeRef("user", "age"), "$1")
    assert skim("i am 30 years old", [rule]) == [(rule.attribute, "30")]


def test_declaration_order_and_single_fire():
    first = SkimmerRule((r"cat",), AttributeRef("session", "a"), "one")
    second = SkimmerRule((r"cat",), AttributeRef("session", "b"), "two")
    writes = skim("cat cat cat", [second, first])
    assert writes == [(second.attribute, "two"), (first.attribute, "one")]


def test_pure_function():
    args = ("my brother likes the cinema", [SIBLING])
    assert skim(*args) == skim(*args)
