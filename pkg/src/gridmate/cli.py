"""Command-line entry points.

    gridmate serve  --port 7341              run the session service
    gridmate repl   --backend scripted --script FILE   terminal chat loop
    gridmate eval   --workbook FILE --formula "=..."    evaluate one formula
    gridmate replay --fixture FILE --transcript OUT     headless session replay

Exit codes: 0 success, 1 user error, 2 internal error. The replay fixture
may be a script/v1 file (user inputs included) or a fixture/v1 recording
plus --inputs with the user messages.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from gridmate.codec import dump_workbook, find_markdown_table, load_workbook, serialize_state
from gridmate.formula.evaluate import evaluate
from gridmate.formula.parser import ParseError, parse_formula
from gridmate.formula.recalc import recalculate
from gridmate.gateway import (
    BackendConfig,
    GatewayError,
    ReplayBackend,
    ScriptedBackend,
    load_script,
    make_backend,
)
from gridmate.orchestrator import Session
from gridmate.service import DEFAULT_PORT, create_app
from gridmate.values import format_value
from gridmate.workbook import Workbook


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # map argparse's exit(2) onto exit 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gridmate", description="Conversational spreadsheet workbench")
    commands = parser.add_subparsers(dest="command", metavar="command")

    serve = commands.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--ui", default=None, help="directory with the built chat UI")

    repl = commands.add_parser("repl", help="interactive terminal chat")
    repl.add_argument("--backend", choices=["live", "scripted", "replay"], default=None)
    repl.add_argument("--script", default=None, help="script/v1 file for the scripted backend")
    repl.add_argument("--fixture", default=None, help="fixture/v1 file for the replay backend")

    ev = commands.add_parser("eval", help="evaluate a formula against a workbook file")
    ev.add_argument("--workbook", default=None, help="workbook/v1 JSON file")
    ev.add_argument("--formula", required=True)
    ev.add_argument("--sheet", default=None)

    replay = commands.add_parser("replay", help="run a scripted session end to end")
    replay.add_argument("--fixture", required=True, help="script/v1 or fixture/v1 file")
    replay.add_argument("--transcript", default=None, help="write the event log here")
    replay.add_argument("--inputs", default=None, help="JSON array of user messages (fixture/v1 only)")

    return parser


def _cmd_serve(args) -> int:
    import uvicorn

    app = create_app(BackendConfig.from_env(), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _config_from_args(args) -> BackendConfig:
    config = BackendConfig.from_env()
    if args.backend:
        config.mode = args.backend
    if args.script:
        config.script_path = args.script
        if not args.backend:
            config.mode = "scripted"
    if getattr(args, "fixture", None):
        config.fixture_path = args.fixture
        if not args.backend:
            config.mode = "replay"
    return config


def _print_turn(outcome, out) -> None:
    for event in outcome.events:
        if event["type"] == "utterance":
            text = event["data"]["text"]
            print(text, file=out)
            proto = find_markdown_table(text)
            if proto is not None:
                print(f"[table preview: {proto.name or 'untitled'} "
                      f"({len(proto.columns)} columns, {len(proto.rows)} rows)]", file=out)
        elif event["type"] == "tool_result":
            print(f"  [{event['data']['status']}] {event['data']['message']}", file=out)
        elif event["type"] == "suggestions":
            for index, item in enumerate(event["data"]["items"], start=1):
                print(f"  ({index}) {item['suggestion']}", file=out)


def _cmd_repl(args) -> int:
    config = _config_from_args(args)
    session = Session(backend=make_backend(config), session_id="repl")
    out = sys.stdout
    print("gridmate repl; type a message, a pill number, 'undo', or 'quit'", file=out)
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            return 0
        if not line:
            continue
        if line in ("quit", "exit"):
            return 0
        if line == "undo":
            try:
                session.undo()
                print("  [undone]", file=out)
            except Exception as error:
                print(f"  [{error}]", file=out)
            continue
        if line.isdigit() and session.conversation.pending_suggestions:
            index = int(line) - 1
            pending = session.conversation.pending_suggestions
            if 0 <= index < len(pending):
                line = pending[index].text
                print(f"> {line}", file=out)
        outcome = session.run_turn(line)
        _print_turn(outcome, out)
        if outcome.aborted:
            return 0


def _cmd_eval(args) -> int:
    if args.workbook:
        path = Path(args.workbook)
        if not path.exists():
            raise UsageError(f"no such workbook file: {path}")
        workbook = load_workbook(path.read_text(encoding="utf-8"))
        recalculate(workbook)
    else:
        workbook = Workbook()
    sheet = args.sheet or workbook.sheets[0].name
    try:
        ast = parse_formula(args.formula)
    except ParseError as error:
        raise UsageError(f"bad formula: {error}") from error
    print(format_value(evaluate(ast, workbook, sheet)))
    return 0


def _cmd_replay(args) -> int:
    path = Path(args.fixture)
    if not path.exists():
        raise UsageError(f"no such fixture file: {path}")
    document = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(document, dict) and document.get("version") == "script/v1":
        backend = ScriptedBackend(load_script(path))
        inputs = backend.user_inputs
    elif isinstance(document, list):
        if not args.inputs:
            raise UsageError("fixture/v1 replay needs --inputs with the user messages")
        backend = ReplayBackend(document)
        inputs = json.loads(Path(args.inputs).read_text(encoding="utf-8"))
    else:
        raise UsageError("fixture must be a script/v1 object or a fixture/v1 array")

    session = Session(backend=backend, session_id="replay")
    for text in inputs:
        outcome = session.run_turn(text)
        _print_turn(outcome, sys.stdout)
        if outcome.aborted:
            print("replay aborted", file=sys.stderr)
            return 2
    transcript = {
        "version": "transcript/v1",
        "events": session.events,
        "finalState": json.loads(serialize_state(session.workbook)),
        "finalWorkbook": json.loads(dump_workbook(session.workbook)),
    }
    if args.transcript:
        Path(args.transcript).write_text(
            json.dumps(transcript, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "repl":
            return _cmd_repl(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "replay":
            return _cmd_replay(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as error:
        print(f"error: {error}", file=sys.stderr)
        print(parser.format_usage().strip(), file=sys.stderr)
        return 1
    except GatewayError as error:
        print(f"error: {error}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception as error:  # internal failure
        print(f"internal error: {error}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
