"""Sessions in, metrics out.

Runs a handful of conversations from different clients against one engine,
then asks the store for per-client session counts, turn counts, the
out-of-domain rate, and a user attribute table.

    python3 demos/03_analytics.py
"""

from pathlib import Path

from flowkit import Engine, MetricQuery, parse_bundle, train_pack

BUNDLE = Path(__file__).parent.parent / "tests" / "data" / "buddy.json"


def main():
    bundle = parse_bundle(BUNDLE.read_text(encoding="utf-8"))
    engine = Engine(bundle, train_pack(bundle))

    chats = [
        ("web", "ada", ["sure thing", "My favorite movie is Titanic", "yes", "please stop now"]),
        ("web", "bob", ["no thanks"]),
        ("android", "ada", ["sure thing", "blargh zzz", "i don't know", "please stop now"]),
        ("ios", "eve", ["not today"]),
    ]
    for client, user, turns in chats:
        session, _ = engine.start_session(user_id=user, client_tag=client, seed=1)
        for utterance in turns:
            if session.ended:
                break
            engine.process_turn(session, utterance)

    store = engine.store
    print("sessions per client:")
    for bucket, key, value in store.query_metrics(
        MetricQuery("sessions", group_by="client", granularity="day")
    ).buckets:
        print(f"  {bucket}  {key:8} {value}")

    print("turns total:")
    for bucket, key, value in store.query_metrics(MetricQuery("turns")).buckets:
        print(f"  {bucket}  {key:8} {value}")

    print("out-of-domain rate:")
    for bucket, key, value in store.query_metrics(MetricQuery("ood_rate")).buckets:
        print(f"  {bucket}  {key:8} {value:.3f}")

    print(f"ada's attributes: {engine.platform.table('user', 'ada')}")

    transcript = store.get_transcript(
        next(iter(store.sessions))
    )
    print(f"first stored transcript has {len(transcript)} turns; "
          f"turn 1 traversed {transcript[1].traversed_nodes if len(transcript) > 1 else []}")


if __name__ == "__main__":
    main()
