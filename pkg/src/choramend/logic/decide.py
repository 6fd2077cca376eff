"""Validity queries with caching, timeouts, and backend selection.

The built-in Cooper engine is the default backend, so the tool runs with no
external dependency.  An SMT-LIB solver can be swapped in through
SolverConfig (CLI --solver-cmd, config key solver.cmd, or the
CHOREO_SOLVER_CMD environment variable); answers of "unknown" or a timeout
are surfaced as SolverError / SolverTimeout.

The repair engine never wants an exception mid-search, so the *_or_false
wrappers map solver failure onto the conservative answer (condition failed,
repair not offered) while recording a warning.
"""

from __future__ import annotations

import os
import shlex
import time
from dataclasses import dataclass, field

from ..errors import SolverError, SolverTimeout
from . import qe
from . import smtlib
from .terms import Formula, Implies, Not

ENV_SOLVER_CMD = "CHOREO_SOLVER_CMD"


@dataclass(frozen=True)
class SolverConfig:
    """How validity is decided.

    command=None selects the built-in quantifier-elimination backend.
    """

    command: tuple[str, ...] | None = None
    timeout: float = 5.0

    @staticmethod
    def from_environment(override: str | None = None, timeout: float = 5.0) -> "SolverConfig":
        raw = override if override is not None else os.environ.get(ENV_SOLVER_CMD)
        if raw:
            return SolverConfig(command=tuple(shlex.split(raw)), timeout=timeout)
        return SolverConfig(timeout=timeout)


@dataclass
class Decider:
    config: SolverConfig = field(default_factory=SolverConfig)
    warnings: list[str] = field(default_factory=list)
    _cache: dict[Formula, bool] = field(default_factory=dict, repr=False)

    def is_valid(self, f: Formula) -> bool:
        """True iff f holds for every integer assignment of its free variables."""
        hit = self._cache.get(f)
        if hit is not None:
            return hit
        if self.config.command is None:
            deadline = time.monotonic() + self.config.timeout
            result = qe.is_valid(f, deadline)
        else:
            result = smtlib.check_valid(f, self.config.command, self.config.timeout)
        self._cache[f] = result
        return result

    def entails(self, hypothesis: Formula, conclusion: Formula) -> bool:
        return self.is_valid(Implies(hypothesis, conclusion))

    def satisfiable(self, f: Formula) -> bool:
        return not self.is_valid(Not(f))

    # Conservative variants: solver trouble means "condition failed".

    def entails_or_false(self, hypothesis: Formula, conclusion: Formula) -> bool:
        try:
            return self.entails(hypothesis, conclusion)
        except SolverTimeout:
            self.warnings.append("entailment check timed out; treated as not entailed")
            return False
        except SolverError as exc:
            self.warnings.append(f"solver failure during entailment check: {exc}")
            return False

    def satisfiable_or_false(self, f: Formula) -> bool:
        try:
            return self.satisfiable(f)
        except SolverTimeout:
            self.warnings.append("satisfiability check timed out; treated as unsatisfiable")
            return False
        except SolverError as exc:
            self.warnings.append(f"solver failure during satisfiability check: {exc}")
            return False

    def drain_warnings(self) -> list[str]:
        out, self.warnings = self.warnings, []
        return out


def default_decider() -> Decider:
    """Fresh decider honoring CHOREO_SOLVER_CMD when set."""
    return Decider(SolverConfig.from_environment())
