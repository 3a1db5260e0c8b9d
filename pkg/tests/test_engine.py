import pytest

from flowkit.engine import Engine, PlatformState, SessionEndedError, select_dialogue
from flowkit.model import MappingView, validate_bundle, has_errors
from flowkit.nlu import train_pack

from conftest import dialogue, doc, edge, minimal_doc, node, parse_doc, yes_no_doc


def build_engine(document, **kwargs):
    bundle = parse_doc(document)
    diagnostics = validate_bundle(bundle)
    assert not has_errors(diagnostics), [str(d) for d in diagnostics]
    return Engine(bundle, train_pack(bundle), **kwargs)


class TestStartSession:
    def test_minimal_bundle_runs_to_exit(self):
        engine = build_engine(minimal_doc())
        session, result = engine.start_session()
        assert result.responses == ["Hi!"]
        assert result.ended is True
        assert session.ended_reason == "main-exit"
        assert result.record.turn_index == 0

    def test_stops_at_user_input(self):
        engine = build_engine(yes_no_doc())
        session, result = engine.start_session()
        assert result.responses == ["Ready?"]
        assert result.ended is False
        assert session.awaiting == ("main", "q")

    def test_multi_response_speech_is_seeded(self):
        document = minimal_doc()
        document["dialogues"][0]["nodes"][1]["responses"] = ["One.", "Two.", "Three."]
        picks = set()
        for _ in range(3):
            engine = build_engine(document)
            _, result = engine.start_session(seed=42)
            picks.add(result.responses[0])
        assert len(picks) == 1  # same seed, same pick, every time
        other_engine = build_engine(document)
        _, other = other_engine.start_session(seed=43)
        # different seeds may or may not differ; determinism is what matters
        assert other.responses[0] in {"One.", "Two.", "Three."}


class TestTurns:
    def test_yes_branch(self):
        engine = build_engine(yes_no_doc())
        session, _ = engine.start_session()
        result = engine.process_turn(session, "yes")
        assert result.responses == ["Great!"]
        assert result.ended is True
        assert result.record.routing["scope"] == "Local"
        assert result.record.routing["chosen_intent"] == ["main", "yes"]

    def test_no_branch(self):
        engine = build_engine(yes_no_doc())
        session, _ = engine.start_session()
        result = engine.process_turn(session, "nope")
        assert result.responses == ["Too bad."]

    def test_turn_after_end_raises(self):
        engine = build_engine(yes_no_doc())
        session, _ = engine.start_session()
        engine.process_turn(session, "yes")
        with pytest.raises(SessionEndedError):
            engine.process_turn(session, "yes")

    def test_records_are_persisted_in_order(self):
        engine = build_engine(yes_no_doc())
        session, _ = engine.start_session()
        engine.process_turn(session, "yes")
        transcript = engine.store.get_transcript(session.session_id)
        assert [r.turn_index for r in transcript] == [0, 1]
        assert transcript[1].raw_utterance == "yes"


def function_doc():
    document = minimal_doc()
    d = document["dialogues"][0]
    d["attributes"] = [{"name": "n", "scope": "session", "default": 0}]
    d["nodes"] = [
        node("enter", "Enter"),
        node("f", "Function",
             assign=[],
             transitions=[{"when": "session.n > 0", "out": "pos"}, {"when": "true", "out": "other"}]),
        node("pos", "Speech", responses=["positive"]),
        node("other", "Speech", responses=["other"]),
        node("out", "Exit"),
    ]
    d["edges"] = [
        edge("enter", "f"),
        edge("f", "pos", out="pos"),
        edge("f", "other", out="other"),
        edge("pos", "out"),
        edge("other", "out"),
    ]
    return document


class TestFunctions:
    def test_guard_order_first_true_wins(self):
        engine = build_engine(function_doc())
        _, result = engine.start_session()
        assert result.responses == ["other"]  # n defaults to 0

    def test_assignments_apply_in_order(self):
        document = function_doc()
        document["dialogues"][0]["nodes"][1]["assign"] = [
            {"set": "session.n", "to": "1"},
            {"set": "session.n", "to": "session.n + 0"},  # no '+' operator -> parse error
        ]
        with pytest.raises(Exception):
            build_engine(document)

    def test_assignment_updates_guard_input(self):
        document = function_doc()
        document["dialogues"][0]["nodes"][1]["assign"] = [{"set": "session.n", "to": "5"}]
        engine = build_engine(document)
        _, result = engine.start_session()
        assert result.responses == ["positive"]

    def test_eval_error_routes_to_error_action(self):
        document = function_doc()
        d = document["dialogues"][0]
        d["nodes"][1]["transitions"] = [
            {"when": 'session.n > "oops"', "out": "pos"},
            {"when": "true", "out": "other"},
        ]
        d["nodes"].append(node("err", "GlobalAction", situation="Error"))
        d["nodes"].append(node("sorry", "Speech", responses=["Something broke."]))
        d["edges"] += [edge("err", "sorry"), edge("sorry", "out")]
        engine = build_engine(document)
        _, result = engine.start_session()
        assert result.responses == ["Something broke."]
        assert "type-mismatch" in result.record.error

    def test_unhandled_error_ends_session_with_flag(self):
        document = function_doc()
        document["dialogues"][0]["nodes"][1]["transitions"] = [
            {"when": 'session.n > "oops"', "out": "pos"},
            {"when": "true", "out": "other"},
        ]
        engine = build_engine(document)
        session, result = engine.start_session()
        assert result.ended is True
        assert session.ended_reason == "error"
        assert result.record.error


class TestTemplates:
    def test_placeholder_rendering(self):
        document = minimal_doc()
        d = document["dialogues"][0]
        d["attributes"] = [{"name": "favMovie", "scope": "session", "default": None}]
        d["nodes"] = [
            node("enter", "Enter"),
            node("f", "Function",
                 assign=[{"set": "session.favMovie", "to": '"Matrix"'}],
                 transitions=[{"when": "true", "out": "next"}]),
            node("nice", "Speech", responses=["Nice, {session.favMovie}!"]),
            node("out", "Exit"),
        ]
        d["edges"] = [edge("enter", "f"), edge("f", "nice", out="next"), edge("nice", "out")]
        engine = build_engine(document)
        _, result = engine.start_session()
        assert result.responses == ["Nice, Matrix!"]

    def test_null_renders_empty_and_bools_lowercase(self):
        document = minimal_doc()
        d = document["dialogues"][0]
        d["attributes"] = [
            {"name": "a", "scope": "session", "default": None},
            {"name": "b", "scope": "session", "default": True},
        ]
        d["nodes"][1]["responses"] = ["[{session.a}|{session.b}]"]
        engine = build_engine(document)
        _, result = engine.start_session()
        assert result.responses == ["[|true]"]


def nested_doc():
    """main -> outer -> inner, inner exits back through both parents."""
    main = dialogue(
        "main",
        [
            node("enter", "Enter"),
            node("hi", "Speech", responses=["start"]),
            node("ref", "SubDialogueRef", dialogue="outer"),
            node("end", "Speech", responses=["back at main"]),
            node("out", "Exit"),
        ],
        [edge("enter", "hi"), edge("hi", "ref"), edge("ref", "end"), edge("end", "out")],
    )
    outer = dialogue(
        "outer",
        [
            node("enter", "Enter"),
            node("a", "Speech", responses=["outer in"]),
            node("ref", "SubDialogueRef", dialogue="inner"),
            node("b", "Speech", responses=["outer resumed"]),
            node("out", "Exit"),
        ],
        [edge("enter", "a"), edge("a", "ref"), edge("ref", "b"), edge("b", "out")],
        labels=["outer-topic"],
    )
    inner = dialogue(
        "inner",
        [
            node("enter", "Enter"),
            node("x", "Speech", responses=["inner"]),
            node("out", "Exit"),
        ],
        [edge("enter", "x"), edge("x", "out")],
        labels=["inner-topic"],
    )
    return doc([main, outer, inner])


class TestNesting:
    def test_two_levels_deep_and_back(self):
        engine = build_engine(nested_doc())
        session, result = engine.start_session()
        assert result.responses == ["start", "outer in", "inner", "outer resumed", "back at main"]
        assert result.ended is True
        assert [t for t in result.record.traversed_nodes if t.startswith("inner/")] == [
            "inner/enter", "inner/x", "inner/out"
        ]

    def test_discussed_labels_accumulate(self):
        engine = build_engine(nested_doc())
        session, _ = engine.start_session()
        assert {"outer-topic", "inner-topic"} <= session.discussed_labels


def selector_doc(d1_cond=None, d2_cond=None):
    main = dialogue(
        "main",
        [
            node("enter", "Enter"),
            node("hi", "Speech", responses=["hi"]),
            node("ref", "SubDialogueRef", dialogue="d1"),  # no out edge: selector after
            node("out", "Exit"),
        ],
        [edge("enter", "hi"), edge("hi", "ref")],
        labels=["movies", "sport"],
    )
    # main declares labels so the session discusses {movies, sport} at start.
    d1 = dialogue(
        "d1",
        [node("enter", "Enter"), node("s", "Speech", responses=["d1 here"]), node("out", "Exit")],
        [edge("enter", "s"), edge("s", "out")],
        labels=["movies"],
        attributes=[{"name": "d1done", "scope": "session", "default": False}],
        **({"startingCondition": d1_cond} if d1_cond else {}),
    )
    d2 = dialogue(
        "d2",
        [node("enter", "Enter"), node("s", "Speech", responses=["d2 here"]), node("out", "Exit")],
        [edge("enter", "s"), edge("s", "out")],
        labels=["movies", "sport"],
        **({"startingCondition": d2_cond} if d2_cond else {}),
    )
    return doc([main, d1, d2], pool=["d1", "d2"])


class TestSelector:
    def test_biggest_overlap_wins(self):
        # d2 overlaps {movies, sport}, d1 only {movies}: d2 scores 2 > 1.
        document = selector_doc(d1_cond="session.d1done == false", d2_cond="true")
        engine = build_engine(document)
        bundle = engine.bundle
        chosen = select_dialogue(
            bundle, ["d1", "d2"], {"movies", "sport"}, set(), MappingView({"session.d1done": False})
        )
        assert chosen == "d2"

    def test_condition_filters_candidates(self):
        document = selector_doc(d1_cond="true", d2_cond="false")
        engine = build_engine(document)
        chosen = select_dialogue(
            engine.bundle, ["d1", "d2"], {"movies", "sport"}, set(), MappingView({})
        )
        assert chosen == "d1"

    def test_empty_pool_is_none(self):
        engine = build_engine(selector_doc())
        assert select_dialogue(engine.bundle, [], {"movies"}, set(), MappingView({})) is None

    def test_condition_eval_error_disqualifies(self):
        document = selector_doc(d1_cond='session.d1done > "x"', d2_cond="true")
        engine = build_engine(document)
        chosen = select_dialogue(
            engine.bundle, ["d1", "d2"], {"movies", "sport"}, set(), MappingView({})
        )
        assert chosen == "d2"

    def test_engine_runs_selected_dialogue_after_exit(self):
        # d1 runs (pool order tie at score... d2 wins by overlap), then d2; no
        # conditions: infinite alternation is prevented by nothing here, so
        # give both conditions that hold once.
        document = selector_doc(d1_cond="session.d1done == false", d2_cond="false")
        # d1 sets d1done so the second selector round finds nothing eligible.
        document["dialogues"][1]["nodes"].insert(2, node(
            "mark", "Function",
            assign=[{"set": "session.d1done", "to": "true"}],
            transitions=[{"when": "true", "out": "next"}],
        ))
        document["dialogues"][1]["edges"] = [
            edge("enter", "s"), edge("s", "mark"), edge("mark", "out", out="next")
        ]
        engine = build_engine(document)
        session, result = engine.start_session()
        assert result.responses == ["hi", "d1 here"]
        assert result.ended is True  # second selector pass: none eligible
        assert session.ended_reason == "no-eligible-dialogue"


def actions_doc():
    """Global silence + error actions in main; local OOD action at the input."""
    main = dialogue(
        "main",
        [
            node("enter", "Enter"),
            node("ask", "Speech", responses=["Favorite movie?"]),
            node("q", "UserInput", oodAction="ood"),
            node("tell", "Intent", examples=["i like [Matrix]{movie}", "my favorite is [Titanic]{movie}"]),
            node("ood", "Action", situation="OutOfDomain"),
            node("oops", "Speech", responses=["Back to movies please."]),
            node("sil", "GlobalAction", situation="Silence"),
            node("hello", "Speech", responses=["Still there?"]),
            node("nice", "Speech", responses=["Good pick."]),
            node("out", "Exit"),
        ],
        [
            edge("enter", "ask"), edge("ask", "q"),
            edge("q", "tell", out="intent"),
            edge("tell", "nice"), edge("nice", "out"),
            edge("ood", "oops"), edge("oops", "q"),
            edge("sil", "hello"), edge("hello", "q"),
        ],
        entityTags=["movie"],
    )
    return doc([main], entities=[
        {"type": "movie", "patterns": ["(?i)\\b(matrix|titanic)\\b"], "normalizer": "none"}
    ])


class TestActions:
    def test_silence_routes_to_global_silence_action(self):
        engine = build_engine(actions_doc())
        session, _ = engine.start_session()
        result = engine.process_turn(session, "")
        assert result.responses == ["Still there?"]
        assert session.awaiting == ("main", "q")
        assert result.record.routing is None

    def test_silence_without_handler_stays_quiet(self):
        engine = build_engine(yes_no_doc())
        session, _ = engine.start_session()
        result = engine.process_turn(session, "")
        assert result.responses == []
        assert session.awaiting == ("main", "q")

    def test_ood_routes_to_local_action(self):
        engine = build_engine(actions_doc())
        session, _ = engine.start_session()
        result = engine.process_turn(session, "zzz qqq unrelated")
        assert result.responses == ["Back to movies please."]
        assert result.record.routing["scope"] == "OutOfDomain"

    def test_entity_flows_into_turn_attribute_and_mask(self):
        engine = build_engine(actions_doc())
        session, _ = engine.start_session()
        result = engine.process_turn(session, "i like Matrix")
        assert result.record.masked_utterance == "i like {movie}"
        assert result.responses == ["Good pick."]
        assert "movie" in session.discussed_entities
        assert result.record.entities[0]["surface"] == "Matrix"


def global_intent_doc():
    main = dialogue(
        "main",
        [
            node("enter", "Enter"),
            node("ref", "SubDialogueRef", dialogue="child"),
            node("gbye", "GlobalIntent", examples=["goodbye now", "bye bye now"]),
            node("bye", "Speech", responses=["See you!"]),
            node("done", "Speech", responses=["child done"]),
            node("out", "Exit"),
        ],
        [edge("enter", "ref"), edge("ref", "done"), edge("done", "out"),
         edge("gbye", "bye"), edge("bye", "out")],
    )
    child = dialogue(
        "child",
        [
            node("enter", "Enter"),
            node("ask", "Speech", responses=["Yes or no?"]),
            node("q", "UserInput"),
            node("yes", "Intent", examples=["yes", "yeah"]),
            node("no", "Intent", examples=["no", "nope"]),
            node("fine", "Speech", responses=["ok"]),
            node("out", "Exit"),
        ],
        [edge("enter", "ask"), edge("ask", "q"),
         edge("q", "yes", out="intent"), edge("q", "no", out="intent"),
         edge("yes", "fine"), edge("no", "fine"), edge("fine", "out")],
    )
    return doc([main, child])


class TestGlobalIntents:
    def test_parent_global_unwinds_stack(self):
        engine = build_engine(global_intent_doc())
        session, _ = engine.start_session()
        assert [f.dialogue_id for f in session.stack] == ["main", "child"]
        result = engine.process_turn(session, "goodbye now")
        assert result.record.routing["scope"] == "Global"
        assert result.responses == ["See you!"]
        assert result.ended is True
        assert [f.dialogue_id for f in session.stack] == ["main"]

    def test_local_still_wins_on_exact_match(self):
        engine = build_engine(global_intent_doc())
        session, _ = engine.start_session()
        result = engine.process_turn(session, "yes")
        assert result.record.routing["scope"] == "Local"
        assert result.responses == ["ok", "child done"]
        assert result.ended is True


class TestLoopGuard:
    def test_cyclic_functions_trip_the_guard(self):
        document = minimal_doc()
        d = document["dialogues"][0]
        d["attributes"] = [{"name": "n", "scope": "session", "default": 0}]
        d["nodes"] = [
            node("enter", "Enter"),
            node("f", "Function", assign=[], transitions=[{"when": "true", "out": "loop"}]),
            node("g", "Function", assign=[], transitions=[{"when": "true", "out": "back"}]),
            node("out", "Exit"),
        ]
        d["edges"] = [
            edge("enter", "f"), edge("f", "g", out="loop"), edge("g", "f", out="back"),
            edge("f", "out", out="unused"),
        ]
        engine = build_engine(document)
        session, result = engine.start_session()
        assert result.ended is True
        assert session.ended_reason == "error"
        assert "node visits" in result.record.error


class TestDeterminism:
    def test_identical_runs_identical_transcripts(self):
        document = actions_doc()
        script = ["", "zzz qqq", "i like Titanic"]

        def run():
            engine = build_engine(document)
            session, start = engine.start_session(user_id="u", seed=7)
            outputs = [start.responses]
            for utterance in script:
                outputs.append(engine.process_turn(session, utterance).responses)
            records = engine.store.get_transcript(session.session_id)
            stripped = [
                {k: v for k, v in r.to_dict().items() if k not in ("at", "duration_ms", "session_id")}
                for r in records
            ]
            return outputs, stripped

        assert run() == run()
