import math
import random

import pytest

from flowkit.nlu import embed, route_and_classify, train_pack
from flowkit.nlu.routing import SCOPE_GLOBAL, SCOPE_LOCAL, SCOPE_OOD, masking_types

from conftest import dialogue, doc, edge, node, parse_doc, yes_no_doc


def two_level_doc():
    """Child dialogue with local yes/no; main declares a global with its own
    vocabulary; a sibling dialogue (off the child's path) has another global."""
    main = dialogue(
        "main",
        [
            node("enter", "Enter"),
            node("ref", "SubDialogueRef", dialogue="child"),
            node("gstop", "GlobalIntent", examples=["terminate immediately", "abort everything"]),
            node("bye", "Speech", responses=["Bye."]),
            node("out", "Exit"),
        ],
        [edge("enter", "ref"), edge("ref", "out"), edge("gstop", "bye"), edge("bye", "out")],
    )
    child = dialogue(
        "child",
        [
            node("enter", "Enter"),
            node("ask", "Speech", responses=["Yes or no?"]),
            node("q", "UserInput"),
            node("yes", "Intent", examples=["yes", "yeah"]),
            node("no", "Intent", examples=["no", "nope"]),
            node("out", "Exit"),
        ],
        [
            edge("enter", "ask"), edge("ask", "q"),
            edge("q", "yes", out="intent"), edge("q", "no", out="intent"),
            edge("yes", "out"), edge("no", "out"),
        ],
    )
    sibling = dialogue(
        "sibling",
        [
            node("enter", "Enter"),
            node("g", "GlobalIntent", examples=["quantum flux capacitor"]),
            node("s", "Speech", responses=["..."]),
            node("out", "Exit"),
        ],
        [edge("enter", "s"), edge("s", "out"), edge("g", "out")],
    )
    return doc([main, child, sibling])


@pytest.fixture(scope="module")
def two_level():
    bundle = parse_doc(two_level_doc())
    return bundle, train_pack(bundle)


def test_exact_match_sim_one_local(two_level):
    _, pack = two_level
    decision = route_and_classify("yes", ("child", "q"), ["child", "main"], pack)
    assert decision.scope == SCOPE_LOCAL
    assert decision.best_local_sim == pytest.approx(1.0, abs=1e-9)
    assert decision.chosen_intent == ("child", "yes")
    assert decision.confidence is not None


def test_orthogonal_utterance_is_ood(two_level):
    _, pack = two_level
    decision = route_and_classify("zzz qqq www", ("child", "q"), ["child", "main"], pack)
    assert decision.best_local_sim < pack.ood_threshold
    assert decision.best_global_sim < pack.ood_threshold
    assert decision.scope == SCOPE_OOD
    assert decision.chosen_intent is None


def test_parent_global_wins_when_matching(two_level):
    _, pack = two_level
    decision = route_and_classify(
        "terminate immediately", ("child", "q"), ["child", "main"], pack
    )
    assert decision.scope == SCOPE_GLOBAL
    assert decision.chosen_intent == ("main", "gstop")
    assert decision.best_global_sim == pytest.approx(1.0, abs=1e-9)


def test_global_off_path_never_chosen(two_level):
    _, pack = two_level
    # The sibling's vocabulary is not on the child->main path: OOD, not Global.
    decision = route_and_classify(
        "quantum flux capacitor", ("child", "q"), ["child", "main"], pack
    )
    assert decision.scope == SCOPE_OOD


def test_tie_breaks_toward_local():
    document = two_level_doc()
    # Same example text both as child-local intent and main-global intent.
    document["dialogues"][0]["nodes"][2]["examples"] = ["yes", "yeah"]
    bundle = parse_doc(document)
    pack = train_pack(bundle)
    decision = route_and_classify("yes", ("child", "q"), ["child", "main"], pack)
    assert decision.best_local_sim == pytest.approx(decision.best_global_sim, abs=1e-12)
    assert decision.scope == SCOPE_LOCAL


def test_unknown_context_raises(two_level):
    _, pack = two_level
    with pytest.raises(KeyError):
        route_and_classify("yes", ("child", "ghost"), ["child"], pack)


def test_threshold_monotonicity(two_level):
    bundle, pack = two_level
    utterances = ["yes", "yes please maybe", "nope never", "zzz qqq", "terminate now"]
    decisions = {}
    for tau in (0.1, 0.3, 0.55, 0.8, 0.99):
        pack.ood_threshold = tau
        decisions[tau] = [
            route_and_classify(u, ("child", "q"), ["child", "main"], pack).scope for u in utterances
        ]
    pack.ood_threshold = bundle.config.ood_threshold
    taus = sorted(decisions)
    for lo, hi in zip(taus, taus[1:]):
        for scope_lo, scope_hi in zip(decisions[lo], decisions[hi]):
            if scope_lo == SCOPE_OOD:
                assert scope_hi == SCOPE_OOD  # raising tau never rescues a turn


def test_masking_types_unions_local_and_path_globals():
    document = two_level_doc()
    document["entities"] = [
        {"type": "movie", "patterns": ["x"], "normalizer": "none"},
        {"type": "city", "patterns": ["y"], "normalizer": "none"},
    ]
    document["dialogues"][1]["nodes"][3]["examples"] = ["i like [Matrix]{movie}"]
    document["dialogues"][0]["nodes"][2]["examples"] = ["go to [Brno]{city}"]
    bundle = parse_doc(document)
    assert masking_types(bundle, ("child", "q"), ["child", "main"]) == {"movie", "city"}
    # Off-path dialogue contributes nothing.
    assert masking_types(bundle, ("child", "q"), ["child"]) == {"movie"}


# ---- brute-force oracle ----------------------------------------------------

def oracle_scope(masked, local_texts, global_texts, tau):
    """Exhaustive cosine over raw banks, no numpy, no shared code path."""

    def dot(a, b):
        return sum(x * y for x, y in zip(a, b))

    utt = list(embed(masked))
    best_local = max((dot(utt, list(embed(t))) for t in local_texts), default=0.0)
    best_global = max((dot(utt, list(embed(t))) for t in global_texts), default=0.0)
    if max(best_local, best_global) < tau:
        return SCOPE_OOD, best_local, best_global
    return (SCOPE_LOCAL if best_local >= best_global else SCOPE_GLOBAL), best_local, best_global


WORDS = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
]


def random_toy_bundle(rng):
    num_local = rng.randint(1, 3)
    num_global = rng.randint(0, 2)

    def utterance():
        return " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 4)))

    nodes = [node("enter", "Enter"), node("ask", "Speech", responses=["?"]), node("q", "UserInput")]
    edges = [edge("enter", "ask"), edge("ask", "q")]
    local_texts = []
    for i in range(num_local):
        examples = [utterance() for _ in range(rng.randint(1, 4))]
        local_texts.extend(examples)
        nodes.append(node(f"i{i}", "Intent", examples=examples))
        edges.append(edge("q", f"i{i}", out="intent"))
        edges.append(edge(f"i{i}", "out"))
    global_texts = []
    for i in range(num_global):
        examples = [utterance() for _ in range(rng.randint(1, 4))]
        global_texts.extend(examples)
        nodes.append(node(f"g{i}", "GlobalIntent", examples=examples))
        edges.append(edge(f"g{i}", "out"))
    nodes.append(node("out", "Exit"))
    edges.append(edge("q", "out"))  # placate reachability; never traversed in routing tests
    return doc([dialogue("main", nodes, edges)]), local_texts, global_texts


def test_scope_matches_brute_force_oracle():
    rng = random.Random(2024)
    for _ in range(30):
        document, local_texts, global_texts = random_toy_bundle(rng)
        bundle = parse_doc(document)
        pack = train_pack(bundle)
        for _ in range(6):
            probe = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 5)))
            expected_scope, bl, bg = oracle_scope(probe, local_texts, global_texts, pack.ood_threshold)
            decision = route_and_classify(probe, ("main", "q"), ["main"], pack)
            assert decision.scope == expected_scope
            assert math.isclose(decision.best_local_sim, bl, abs_tol=1e-9)
            assert math.isclose(decision.best_global_sim, bg, abs_tol=1e-9)
