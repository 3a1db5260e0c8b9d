"""Command-line entry points.

    flowkit validate <bundle>
    flowkit train <bundle> -o <pack>
    flowkit chat <bundle> [--seed N] [--user U]
    flowkit simulate <bundle> <script>
    flowkit serve [--port P] [--data DIR] [--apps DIR] [--console DIR]

Exit codes: 0 success, 1 failed validation/training/simulation, 2 unreadable
or malformed input files.  ``FLOWKIT_DATA`` overrides the serve data dir.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .engine import Engine, SessionEndedError
from .model import BundleParseError, has_errors, parse_bundle, validate_bundle
from .nlu import pack_to_json, train_pack
from .nlu.pack import TrainingError
from .service import FlowkitService, serve as run_server


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        print(f"error: cannot read {path}: {err}", file=sys.stderr)
        raise SystemExit(2)


def _load_bundle(path: str):
    text = _read_text(path)
    try:
        return parse_bundle(text)
    except BundleParseError as err:
        print(f"error: {path}: {err}", file=sys.stderr)
        raise SystemExit(2)


def _load_valid_bundle(path: str):
    bundle = _load_bundle(path)
    diagnostics = validate_bundle(bundle)
    for d in diagnostics:
        print(str(d), file=sys.stderr)
    if has_errors(diagnostics):
        raise SystemExit(1)
    return bundle


def cmd_validate(args) -> int:
    bundle = _load_bundle(args.bundle)
    diagnostics = validate_bundle(bundle)
    for d in diagnostics:
        print(str(d))
    if has_errors(diagnostics):
        return 1
    print(f"ok: {len(bundle.sub_dialogues)} sub-dialogue(s), "
          f"{sum(len(d.nodes) for d in bundle.sub_dialogues)} node(s)")
    return 0


def cmd_train(args) -> int:
    bundle = _load_valid_bundle(args.bundle)
    try:
        pack = train_pack(bundle)
    except TrainingError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    Path(args.out).write_text(pack_to_json(pack), encoding="utf-8")
    print(f"trained {len(pack.local_classifiers)} input classifier(s), "
          f"{len(pack.global_classifiers)} global classifier(s) -> {args.out}")
    return 0


def cmd_chat(args) -> int:
    bundle = _load_valid_bundle(args.bundle)
    try:
        pack = train_pack(bundle)
    except TrainingError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    engine = Engine(bundle, pack)
    session, result = engine.start_session(
        user_id=args.user, client_tag="cli", seed=args.seed
    )
    for line in result.responses:
        print(f"bot: {line}")
    interactive = sys.stdin.isatty()
    while not result.ended:
        if interactive:
            try:
                utterance = input("you: ")
            except EOFError:
                break
        else:
            raw = sys.stdin.readline()
            if raw == "":
                break
            utterance = raw.rstrip("\r\n")
            print(f"you: {utterance}")
        result = engine.process_turn(session, utterance)
        for line in result.responses:
            print(f"bot: {line}")
    return 0


def cmd_simulate(args) -> int:
    bundle = _load_valid_bundle(args.bundle)
    try:
        script = json.loads(_read_text(args.script))
    except json.JSONDecodeError as err:
        print(f"error: bad script: {err}", file=sys.stderr)
        return 2
    try:
        pack = train_pack(bundle)
    except TrainingError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    engine = Engine(bundle, pack)
    session, result = engine.start_session(
        user_id=script.get("user", "sim"),
        community=script.get("community", "default"),
        client_tag=script.get("client", "sim"),
        seed=script.get("seed"),
    )

    failures = []

    def check(label, expected, actual):
        if expected is not None and list(expected) != list(actual):
            failures.append(f"{label}:\n  expected: {expected}\n  actual:   {actual}")

    check("session start", script.get("start"), result.responses)
    for i, turn in enumerate(script.get("turns", [])):
        if result.ended:
            print(f"error: turn {i + 1} scripted after the session ended", file=sys.stderr)
            return 2
        try:
            result = engine.process_turn(session, turn.get("say", ""))
        except SessionEndedError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        check(f"turn {i + 1} ({turn.get('say', '')!r})", turn.get("expect"), result.responses)
    if script.get("expectEnd") is not None and bool(script["expectEnd"]) != result.ended:
        failures.append(f"session end: expected ended={script['expectEnd']}, actual {result.ended}")

    if failures:
        print("FAIL")
        for f in failures:
            print(f)
        return 1
    print(f"pass: {len(script.get('turns', []))} turn(s) matched")
    return 0


def cmd_serve(args) -> int:
    data_dir = os.environ.get("FLOWKIT_DATA", args.data)
    service = FlowkitService(data_dir=data_dir, console_dir=args.console)
    if args.apps:
        for app in service.load_apps_dir(args.apps):
            print(f"loaded {app.app_id} from {args.apps}")
    run_server(service, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowkit",
                                     description="Run declaratively defined conversational applications.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a bundle and report diagnostics")
    p.add_argument("bundle")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("train", help="train NLU models and write a pack artifact")
    p.add_argument("bundle")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("chat", help="interactive terminal conversation")
    p.add_argument("bundle")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--user", default="local")
    p.set_defaults(fn=cmd_chat)

    p = sub.add_parser("simulate", help="replay a scripted conversation and diff expectations")
    p.add_argument("bundle")
    p.add_argument("script")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--data", default=None, help="data directory (or FLOWKIT_DATA)")
    p.add_argument("--apps", default=None, help="directory of bundle .json files to load")
    p.add_argument("--console", default=None, help="directory of console static files")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
