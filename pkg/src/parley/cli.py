"""Command line entry point: serve, REPL, or batch-drive a user script."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import Engine, EngineConfig, default_config_path
from .metrics import summarize


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parley",
        description="Mixed-initiative dialogue engine over a knowledge base and search index.",
    )
    parser.add_argument("--config", type=Path, default=None, help="engine config JSON")
    parser.add_argument("--port", type=int, default=None, help="HTTP port (serve mode)")
    parser.add_argument("--repl", action="store_true", help="interactive console session")
    parser.add_argument("--transcript", type=Path, default=None, help="directory for transcript JSONL files")
    parser.add_argument("--script", type=Path, default=None, help="file of user turns to drive in batch")
    return parser


def run_script(engine: Engine, script_path: Path, out=None) -> str:
    """Drive one session with scripted user turns; returns the session id."""
    out = out or sys.stdout
    session_id, opening = engine.create_session()
    print(f"system> {opening}", file=out)
    for line in script_path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        print(f"user> {line}", file=out)
        reply, _ = engine.post_user_turn(session_id, line)
        print(f"system> {reply}", file=out)
    return session_id


def run_repl(engine: Engine, stdin=None, out=None) -> None:
    stdin = stdin or sys.stdin
    out = out or sys.stdout
    session_id, opening = engine.create_session()
    debug_on = False
    print(f"system> {opening}", file=out)
    print("(type /debug to toggle the inspector, /quit to finish)", file=out)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        if line == "/quit":
            break
        if line == "/debug":
            debug_on = not debug_on
            print(f"debug {'on' if debug_on else 'off'}", file=out)
            continue
        reply, debug = engine.post_user_turn(session_id, line)
        print(f"system> {reply}", file=out)
        if debug_on:
            print(json.dumps(debug, indent=2), file=out)
    metrics = engine.session_metrics(session_id)
    report = summarize([metrics])
    print(report.to_text(), file=out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config_path = args.config or default_config_path()
    config = EngineConfig.load(config_path)
    engine = Engine(config, transcript_dir=args.transcript)

    if args.script is not None:
        run_script(engine, args.script)
        return 0
    if args.repl:
        run_repl(engine)
        return 0

    import uvicorn

    from .service import create_app

    frontend_dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(engine, frontend_dist=frontend_dist)
    port = args.port or config.port
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
