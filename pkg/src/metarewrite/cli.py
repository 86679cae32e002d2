"""Command line entry point: ``engine repl | run | query | check | test``.

Exit codes: 0 on success, 1 on user error, 2 on internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import EngineError
from .harness import SUITE_NAMES, GeneratorConfig, run_suite
from .pattern import query_in
from .repl import Session, interact, render_bindings

log = logging.getLogger("metarewrite")


def _use_color(stream) -> bool:
    setting = os.environ.get("ENGINE_COLOR")
    if setting is not None:
        return setting not in ("0", "", "false", "no")
    return hasattr(stream, "isatty") and stream.isatty()


def _style(text: str, code: str, stream) -> str:
    return f"\033[{code}m{text}\033[0m" if _use_color(stream) else text


def _session(args) -> Session:
    return Session(max_steps=args.max_steps, workers=args.workers)


def _load_files(session: Session, files, emit) -> None:
    for name in files:
        path = Path(name)
        session.base_dir = path.resolve().parent
        session.run_text(path.read_text(encoding="utf-8"), emit, str(name))


def cmd_repl(args) -> int:
    session = _session(args)
    if args.files:
        _load_files(session, args.files, print)
    return interact(session, color=_use_color(sys.stdout))


def cmd_run(args) -> int:
    session = _session(args)

    def emit(text: str):
        if text.startswith("error:"):
            sys.stdout.flush()
            print(_style(text, "31", sys.stderr), file=sys.stderr)
        else:
            print(text)

    _load_files(session, args.files, emit)
    return 1 if session.errors else 0


def cmd_query(args) -> int:
    session = _session(args)
    _load_files(session, [args.file], _raise_on_error)
    data = session.store.snapshot()
    scratch, pattern = session.scratch_pattern(args.pattern)
    results = query_in(pattern, scratch.snapshot(), data)
    for line in sorted(render_bindings(scratch, b) for b in results):
        print(line)
    return 0


def cmd_check(args) -> int:
    session = _session(args)
    system = session.types.system(args.system)
    _load_files(session, [args.file], _raise_on_error)
    snap = session.store.snapshot()
    counts = {"accept": 0, "reject": 0}
    for atom in sorted(snap.annotated_atoms(), key=snap.render):
        if not session.types.annotations(atom, system, snap):
            continue
        verdict = str(session.types.check_atom(atom, system, snap))
        counts[verdict] = counts.get(verdict, 0) + 1
        print(f"{verdict}\t{snap.render(atom)}")
    print(f"# {counts['accept']} accepted, {counts['reject']} rejected under {system.name}")
    return 1 if counts["reject"] else 0


def cmd_test(args) -> int:
    cfg = GeneratorConfig(seed=args.seed)
    report = run_suite(args.suite, cfg, args.cases)
    if args.format == "lines":
        sys.stdout.write(report.lines())
    else:
        text = report.text()
        sys.stdout.write(_style(text, "32" if report.ok else "31", sys.stdout))
    return 0 if report.ok else 1


def _raise_on_error(text: str):
    if text.startswith("error: "):
        raise EngineError(text[len("error: "):])
    print(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-steps", type=int, default=1000, metavar="N",
                        help="default step or round bound (default: %(default)s)")
    common.add_argument("--workers", type=int, default=1, metavar="N",
                        help="worker threads for forward chaining (default: %(default)s)")
    common.add_argument("--seed", type=int, default=0, metavar="N",
                        help="seed for randomized harnesses (default: %(default)s)")
    common.add_argument("-v", "--verbose", action="store_true", help="log debugging detail")

    parser = argparse.ArgumentParser(prog="engine", description="Metagraph rewriting engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repl", parents=[common], help="interactive session")
    p.add_argument("files", nargs="*", help="files to load first")
    p.set_defaults(func=cmd_repl)

    p = sub.add_parser("run", parents=[common], help="run script files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("query", parents=[common], help="load a file and match one pattern")
    p.add_argument("file")
    p.add_argument("--pattern", required=True, metavar="EXPR")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("check", parents=[common], help="verdicts for annotated atoms under one system")
    p.add_argument("file")
    p.add_argument("--system", required=True, metavar="NAME")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("test", parents=[common], help="run a seeded property suite")
    p.add_argument("--suite", required=True, choices=SUITE_NAMES)
    p.add_argument("--cases", type=int, default=100, metavar="K")
    p.add_argument("--format", choices=("text", "lines"), default="text")
    p.set_defaults(func=cmd_test)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad usage; that is a user error here
        return 1 if e.code == 2 else (e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.max_steps < 0 or args.workers < 1:
        print("error: --max-steps must be >= 0 and --workers >= 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (EngineError, OSError) as e:
        print(_style(f"error: {e}", "31", sys.stderr), file=sys.stderr)
        return 1
    except Exception:  # noqa: BLE001 - last-resort boundary
        log.exception("internal error")
        return 2


if __name__ == "__main__":
    sys.exit(main())
