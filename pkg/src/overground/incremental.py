"""Overgrounding sessions.

A :class:`Session` keeps the accumulated facts of all shots so far and
the overgrounded program ``G_k = Inst(P, UF_k)^inf``.  Each shot only
grounds what the genuinely new atoms make applicable; nothing is ever
removed, so ``G_k`` stays correct for every fact set seen before.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from typing import Iterable

from .ground import GroundProgram, GroundRule, Grounder, HerbrandUniverse, facts_as_rules
from .solver import DEFAULT_CAP, AnswerSet, solve
from .syntax import Atom, Program

CSV_HEADER = ("shot", "new_facts", "delta_rules", "total_rules", "ground_time_us", "solve_time_us")


@dataclass
class ShotRecord:
    shot: int
    new_facts: int
    delta_rules: int
    total_rules: int
    ground_time_us: int
    solve_time_us: int | None = None

    def row(self, timing: bool = True) -> list:
        if not timing:
            return [self.shot, self.new_facts, self.delta_rules, self.total_rules, 0,
                    "" if self.solve_time_us is None else 0]
        return [self.shot, self.new_facts, self.delta_rules, self.total_rules,
                self.ground_time_us, "" if self.solve_time_us is None else self.solve_time_us]


def records_to_csv(records: Iterable[ShotRecord], timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row(timing))
    return buf.getvalue()


def _elapsed_us(start_ns: int) -> int:
    return (time.perf_counter_ns() - start_ns) // 1000


class Session:
    """Multi-shot grounding of one fixed program.

    Creating the session runs shot 1 on ``facts``; every :meth:`shot`
    afterwards returns the delta ``G_k - G_{k-1}``.
    """

    def __init__(self, program: Program, facts: Iterable[Atom] = (), *,
                 max_rules: int | None = None, solver_cap: int = DEFAULT_CAP):
        self.program = program
        self.solver_cap = solver_cap
        self.universe = HerbrandUniverse.from_inputs(program)
        self.accumulated: set[Atom] = set()
        self.shot_log: list[ShotRecord] = []
        self.current_facts: frozenset[Atom] = frozenset()
        self._grounder = Grounder(program, max_rules=max_rules)
        self.shot(facts)

    @property
    def overground(self) -> GroundProgram:
        return self._grounder.ground

    @property
    def shot_counter(self) -> int:
        return len(self.shot_log)

    @property
    def diagnostics(self):
        return self._grounder.diagnostics

    def shot(self, facts: Iterable[Atom]) -> list[GroundRule]:
        facts = frozenset(facts)
        start = time.perf_counter_ns()
        fresh = facts - self.accumulated
        self.accumulated |= fresh
        delta = self._grounder.add_facts(fresh)
        elapsed = _elapsed_us(start)
        self.universe.add_atoms(fresh)
        self.universe.add_rules(delta)
        self.current_facts = facts
        self.shot_log.append(ShotRecord(len(self.shot_log) + 1, len(fresh), len(delta),
                                        len(self.overground), elapsed))
        return delta

    def solve(self, facts: Iterable[Atom] | None = None, n: int = 0) -> list[AnswerSet]:
        """Answer sets of ``G_k`` plus the given facts (default: this shot's)."""
        facts = self.current_facts if facts is None else frozenset(facts)
        if not facts <= self.accumulated:
            raise ValueError("facts were never submitted as a shot")
        start = time.perf_counter_ns()
        result = solve([*self.overground, *facts_as_rules(facts)], n, self.solver_cap)
        self.shot_log[-1].solve_time_us = _elapsed_us(start)
        return result

    def stats(self) -> list[ShotRecord]:
        return list(self.shot_log)

    def stats_csv(self, timing: bool = True) -> str:
        return records_to_csv(self.shot_log, timing)
