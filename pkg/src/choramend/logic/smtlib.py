"""SMT-LIB 2 rendering and the external-solver subprocess backend.

to_smtlib produces a self-contained script that declares every free
variable as an Int constant and asserts the *negation* of the formula, so
an `unsat` verdict means the formula is valid.  check_valid pipes the
script into a user-configured solver command (anything speaking SMT-LIB 2
on stdin/stdout works) and interprets the last sat/unsat line.
"""

from __future__ import annotations

import subprocess

from ..errors import SolverError, SolverTimeout
from . import terms as T


def _sexpr_expr(e: T.Expression) -> str:
    match e:
        case T.Lit(v):
            return str(v) if v >= 0 else f"(- {-v})"
        case T.Var(name):
            return _ident(name)
        case T.Add(l, r):
            return f"(+ {_sexpr_expr(l)} {_sexpr_expr(r)})"
        case T.Sub(l, r):
            return f"(- {_sexpr_expr(l)} {_sexpr_expr(r)})"
        case T.Mul(k, a):
            coeff = str(k) if k >= 0 else f"(- {-k})"
            return f"(* {coeff} {_sexpr_expr(a)})"
    raise TypeError(f"not an expression: {e!r}")


def _ident(name: str) -> str:
    # Apostrophes from Barendregt renaming need SMT-LIB quoting.
    if name.isidentifier():
        return name
    return f"|{name}|"


def _sexpr(f: T.Formula) -> str:
    match f:
        case T.BoolLit(v):
            return "true" if v else "false"
        case T.Cmp(op, l, r):
            a, b = _sexpr_expr(l), _sexpr_expr(r)
            if op == "!=":
                return f"(distinct {a} {b})"
            return f"({op} {a} {b})"
        case T.Divisible(d, e):
            return f"(= (mod {_sexpr_expr(e)} {d}) 0)"
        case T.Not(a):
            return f"(not {_sexpr(a)})"
        case T.And(args):
            return "(and " + " ".join(_sexpr(a) for a in args) + ")"
        case T.Or(args):
            return "(or " + " ".join(_sexpr(a) for a in args) + ")"
        case T.Implies(l, r):
            return f"(=> {_sexpr(l)} {_sexpr(r)})"
        case T.Exists(names, body):
            binds = " ".join(f"({_ident(n)} Int)" for n in names)
            return f"(exists ({binds}) {_sexpr(body)})"
        case T.Forall(names, body):
            binds = " ".join(f"({_ident(n)} Int)" for n in names)
            return f"(forall ({binds}) {_sexpr(body)})"
    raise TypeError(f"not a formula: {f!r}")


def to_smtlib(f: T.Formula) -> str:
    """Validity script: unsat answer == f is valid over the integers."""
    lines = ["(set-logic LIA)"]
    for name in sorted(T.free_vars(f)):
        lines.append(f"(declare-const {_ident(name)} Int)")
    lines.append(f"(assert (not {_sexpr(f)}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def check_valid(f: T.Formula, command: tuple[str, ...], timeout: float) -> bool:
    script = to_smtlib(f)
    try:
        proc = subprocess.run(
            list(command),
            input=script,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise SolverTimeout(f"external solver exceeded {timeout}s") from exc
    except OSError as exc:
        raise SolverError(f"cannot run external solver {command[0]!r}: {exc}") from exc
    verdict = None
    for line in proc.stdout.splitlines():
        line = line.strip()
        if line in ("sat", "unsat", "unknown"):
            verdict = line
    if verdict == "unsat":
        return True
    if verdict == "sat":
        return False
    detail = verdict or proc.stderr.strip() or f"exit status {proc.returncode}"
    raise SolverError(f"external solver gave no verdict: {detail}")


def probe(command: tuple[str, ...], timeout: float = 5.0) -> None:
    """Raise SolverError unless the command answers a trivial query."""
    check_valid(T.TRUE, command, timeout)
