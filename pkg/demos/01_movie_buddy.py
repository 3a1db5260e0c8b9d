"""Run a whole scripted conversation and watch the engine's decisions.

The bundle under tests/data/buddy.json nests three sub-dialogues, handles
silence and out-of-domain turns, falls back to the response generator when
no handler exists, and lets the dialogue selector pick the next topic.

    python3 demos/01_movie_buddy.py
"""

from pathlib import Path

from flowkit import Engine, parse_bundle, train_pack, validate_bundle

BUNDLE = Path(__file__).parent.parent / "tests" / "data" / "buddy.json"

TURNS = [
    "sure thing",
    "",  # silence
    "blargh kwyjibo zzz",  # out of domain -> local OOD action
    "My favorite movie is Matrix",
    "yes",
    "i went to the stadium with my brother yesterday",  # skimmer + NRG fallback
    "the crowd was amazing",
    "my favorite sport is tennis",
    "i do",
    "not yet",
    "not yet",
    "please stop now",  # global intent, unwinds to main
]


def main():
    bundle = parse_bundle(BUNDLE.read_text(encoding="utf-8"))
    for diag in validate_bundle(bundle):
        print(diag)
    pack = train_pack(bundle)
    engine = Engine(bundle, pack)

    session, result = engine.start_session(user_id="ada", seed=42)
    for line in result.responses:
        print(f"  bot: {line}")

    for utterance in TURNS:
        result = engine.process_turn(session, utterance)
        print(f"\n  you: {utterance!r}")
        record = result.record
        if record.routing:
            print(f"       scope={record.routing['scope']}"
                  f" local={record.routing['best_local_sim']:.2f}"
                  f" global={record.routing['best_global_sim']:.2f}"
                  f" intent={record.routing['chosen_intent']}")
        if record.skimmer_writes:
            print(f"       skimmed: {record.skimmer_writes}")
        if record.nrg_used:
            print(f"       generated ({record.nrg_used['act']})")
        for line in result.responses:
            print(f"  bot: {line}")

    print(f"\nsession ended: {session.ended_reason}")
    print(f"user attributes now: {engine.platform.table('user', 'ada')}")


if __name__ == "__main__":
    main()
