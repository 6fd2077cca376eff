"""Command line front door: check a file, amend it, or serve the HTTP API.

Exit codes are part of the contract: 0 when the file is clean or the
requested repairs left nothing behind in their scope, 1 when violations
remain, 2 for usage and parse problems, 3 when the configured solver
cannot be used.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .assertions import GlobalAssertion, check_well_formed
from .errors import ParseError, SolverError
from .hs import hs_violations, phi1, phi2
from .logic import TRUE, Decider, SolverConfig
from .parser import format_assertion, parse
from . import session as sessions
from . import ts

EXIT_CLEAN = 0
EXIT_VIOLATIONS = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


class _Fail(Exception):
    """Message already printed; carry only the exit code."""

    def __init__(self, code: int):
        self.code = code


def _load(path: str) -> GlobalAssertion:
    if path == "-":
        text = sys.stdin.read()
        where = "<stdin>"
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            print(f"cannot read {path}: {exc}", file=sys.stderr)
            raise _Fail(EXIT_USAGE) from exc
        where = path
    try:
        g = parse(text)
    except ParseError as exc:
        print(f"{where}:{exc}", file=sys.stderr)
        raise _Fail(EXIT_USAGE) from exc
    defects = check_well_formed(g)
    if defects:
        for d in defects:
            print(f"{where}: {d}", file=sys.stderr)
        raise _Fail(EXIT_USAGE)
    return g


def _decider(args) -> Decider:
    return Decider(SolverConfig.from_environment(getattr(args, "solver_cmd", None)))


def _dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _where(v: dict) -> str:
    span = v.get("span")
    if span is None:
        return "?"
    return f"{span['line']}:{span['column']}"


def _detail(v: dict) -> str:
    if v["kind"] == "HS":
        return "needs " + ", ".join(v.get("unknownVars", ()))
    obligation = v.get("obligation")
    if obligation:
        return f"cannot ensure {obligation}"
    return "no branch can be taken"


def _print_table(payload: list[dict], out=None) -> None:
    out = out if out is not None else sys.stdout
    if not payload:
        print("no violations", file=out)
        return
    rows = [
        (v["id"], v["kind"], _where(v), v.get("responsible") or "-", _detail(v))
        for v in payload
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for r in rows:
        lead = "  ".join(r[i].ljust(widths[i]) for i in range(4))
        print(f"{lead}  {r[4]}", file=out)
    print(f"{len(rows)} violation{'s' if len(rows) != 1 else ''}", file=out)


def _print_conflicts(payload: list[dict], out=None) -> None:
    out = out if out is not None else sys.stderr
    for v in payload:
        conflict = v.get("conflict")
        if conflict is None:
            continue
        who = [
            f"{c['variable']} (introduced by {c['owner'] or 'nobody'})"
            for c in conflict["constrainedBy"]
        ]
        print(f"{v['id']} cannot be repaired:", file=out)
        if who:
            print(f"  constrained by {', '.join(who)}", file=out)
        for attempt in conflict["attempts"]:
            for ins in attempt["insertions"]:
                if not ins["satisfiable"]:
                    print(
                        f"  lifting {attempt['lifted']} would need {ins['predicate']} "
                        f"at node {ins['node']}, which is unsatisfiable",
                        file=out,
                    )
            if attempt["refusal"]:
                print(f"  {attempt['refusal']}", file=out)


def cmd_check(args) -> int:
    g = _load(args.file)
    session = sessions.start_session(g, _decider(args))
    payload = sessions.session_payload(session)
    if args.json:
        print(_dumps(payload))
    else:
        _print_table(payload)
        _print_conflicts(payload)
    return EXIT_CLEAN if not payload else EXIT_VIOLATIONS


def _auto(session: sessions.AmendSession) -> sessions.AmendSession:
    """Apply the first offer of the first repairable violation until stuck.

    Offers per violation already rank substitution before forwarding, so
    the quiet repair wins whenever both apply.
    """
    fuel = 10 * (len(session.violations) + 1)
    while fuel > 0:
        fuel -= 1
        offered = sessions.offers(session)
        chosen = None
        for violation in session.violations:
            mine = [c for c in offered if c.violation_id == violation.id]
            if mine:
                chosen = mine[0]
                break
        if chosen is None:
            break
        session = sessions.apply(session, chosen.id)
    return session


def _emit_result(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}", file=sys.stderr)
    elif not args.json:
        print(text, end="" if text.endswith("\n") else "\n")


def _scope_clean(g: GlobalAssertion, strategy: str, decider: Decider) -> bool:
    if strategy in ("phi1", "phi2"):
        return not hs_violations(g)
    if strategy == "phi3":
        return not ts.ts_violations(g, decider)
    return not sessions.diagnose(g, decider)


def cmd_amend(args) -> int:
    g = _load(args.file)
    decider = _decider(args)
    if args.interactive:
        return _interactive(args, g, decider)

    if args.strategy == "auto":
        session = _auto(sessions.start_session(g, decider))
        result = session.current
        changes = tuple(c for _, choice in session.history for c in choice.changes)
        for _, choice in session.history:
            for change in choice.changes:
                print(
                    f"applied {choice.algorithm} at node {change.node_id}: {change.note}",
                    file=sys.stderr,
                )
    else:
        outcome = {
            "phi1": lambda: phi1(g, decider),
            "phi2": lambda: phi2(g),
            "phi3": lambda: ts.phi3(g, decider, branch_policy="disjunction"),
        }[args.strategy]()
        if isinstance(outcome, (ts.Fixed, ts.Failed)):
            result = outcome.result if isinstance(outcome, ts.Fixed) else outcome.best_effort
            changes = outcome.changes
        else:
            result, changes = g, ()
        if isinstance(outcome, ts.Failed) and outcome.reason:
            print(f"stuck at node {outcome.node_id}: {outcome.reason}", file=sys.stderr)
        for change in changes:
            print(f"applied {args.strategy} at node {change.node_id}: {change.note}", file=sys.stderr)

    after = sessions.start_session(result, decider)
    remaining = sessions.session_payload(after)
    text = format_assertion(result)
    _emit_result(args, text)
    if args.json:
        print(
            _dumps(
                {
                    "amended": text,
                    "strategy": args.strategy,
                    "changes": [
                        {
                            "node": c.node_id,
                            "before": sessions._label_text(c.before),
                            "after": sessions._label_text(c.after),
                            "note": c.note,
                        }
                        for c in changes
                    ],
                    "remaining": remaining,
                }
            )
        )
    else:
        if remaining:
            _print_table(remaining, out=sys.stderr)
        _print_conflicts(remaining)
    return EXIT_CLEAN if _scope_clean(result, args.strategy, decider) else EXIT_VIOLATIONS


def _interactive(args, g: GlobalAssertion, decider: Decider) -> int:
    session = sessions.start_session(g, decider)
    while True:
        payload = sessions.session_payload(session)
        if not payload:
            print("no violations left")
        _print_table(payload)
        numbered = []
        for v in payload:
            for option in v["options"]:
                numbered.append(option)
                warn = f"  [{'; '.join(option['warnings'])}]" if option["warnings"] else ""
                summary = "; ".join(c["note"] for c in option["changes"])
                print(f"  {len(numbered)}) {v['id']} {option['algorithm']}: {summary}{warn}")
        print("pick a number, u to undo, q to finish: ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            break
        line = line.strip().lower()
        if line == "q":
            break
        if line == "u":
            try:
                session = sessions.undo(session)
            except Exception as exc:
                print(exc, file=sys.stderr)
            continue
        if line.isdigit() and 1 <= int(line) <= len(numbered):
            session = sessions.apply(session, numbered[int(line) - 1]["id"])
        elif line:
            print(f"unrecognized input {line!r}", file=sys.stderr)
    text = format_assertion(session.current)
    _emit_result(args, text)
    return EXIT_CLEAN if not session.violations else EXIT_VIOLATIONS


def cmd_serve(args) -> int:
    decider = _decider(args)
    try:
        decider.is_valid(TRUE)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    import socket

    import uvicorn

    from .api import create_app

    app = create_app(
        solver_cmd=args.solver_cmd,
        snapshot_path=args.snapshot,
        cors_origin=args.cors_origin,
    )
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((args.host, args.port))
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    host, port = sock.getsockname()[:2]
    print(f"listening on {host}:{port}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return EXIT_CLEAN


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="choramend",
        description="Check asserted choreographies and repair what the checker rejects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--solver-cmd",
            default=None,
            help="external SMT-LIB solver command (default: built-in decision procedure, "
            "or the CHOREO_SOLVER_CMD environment variable)",
        )

    p_check = sub.add_parser("check", help="diagnose a file and list violations")
    p_check.add_argument("file", help="input path, or - for stdin")
    p_check.add_argument("--json", action="store_true", help="machine-readable report")
    common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_amend = sub.add_parser("amend", help="repair a file")
    p_amend.add_argument("file", help="input path, or - for stdin")
    p_amend.add_argument(
        "--strategy",
        choices=("phi1", "phi2", "phi3", "auto"),
        default="auto",
        help="which repair family to run (default: auto)",
    )
    p_amend.add_argument("--interactive", action="store_true", help="pick repairs one by one")
    p_amend.add_argument("--out", default=None, help="write the amended file here")
    p_amend.add_argument("--json", action="store_true", help="machine-readable report")
    common(p_amend)
    p_amend.set_defaults(func=cmd_amend)

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000, help="0 picks a free port")
    p_serve.add_argument("--snapshot", default=None, help="dump sessions to this file on shutdown")
    p_serve.add_argument("--cors-origin", default=None, help="allow this origin on the API")
    common(p_serve)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        return exc.code
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
