"""Multi-shot benchmark drivers.

Both drivers run a program over a stream of fact sets in one of two
modes: ``incremental`` keeps a single :class:`~overground.incremental.Session`,
``from-scratch`` re-grounds the accumulated facts with a fresh grounder at
every shot.  The two must agree on ground programs and answer sets.

Run ``python -m overground.bench --help`` for the command line.
"""
from __future__ import annotations

import argparse
import random
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

from .ground import GroundRule, Grounder, facts_as_rules
from .incremental import Session, ShotRecord, records_to_csv
from .solver import DEFAULT_CAP, AnswerSet, solve
from .syntax import Atom, Program, parse_facts, parse_program

INCREMENTAL = "incremental"
FROM_SCRATCH = "from-scratch"
MODES = (INCREMENTAL, FROM_SCRATCH)


def load_encoding(name: str) -> Program:
    """One of the bundled encodings: ``sudoku``, ``reach`` or ``pacman``."""
    text = resources.files("overground.encodings").joinpath(f"{name}.lp").read_text()
    return parse_program(text)


@dataclass
class BenchRun:
    mode: str
    records: list[ShotRecord] = field(default_factory=list)
    answer_sets: list[list[AnswerSet]] = field(default_factory=list)
    programs: list[frozenset[GroundRule]] = field(default_factory=list)
    boards: list = field(default_factory=list)
    outcome: object = None

    def ground_time_us(self, from_shot: int = 1) -> int:
        return sum(r.ground_time_us for r in self.records if r.shot >= from_shot)

    def deltas(self) -> list[int]:
        return [r.delta_rules for r in self.records]


class _Runner:
    def __init__(self, program: Program, mode: str, keep_programs: bool, solver_cap: int,
                 solving: bool = True):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.program, self.mode = program, mode
        self.keep_programs, self.solver_cap = keep_programs, solver_cap
        self.solving = solving
        self.run = BenchRun(mode)
        self.session: Session | None = None
        self.accumulated: set[Atom] = set()

    def shot(self, facts: frozenset[Atom]) -> list[AnswerSet]:
        if self.mode == INCREMENTAL:
            if self.session is None:
                self.session = Session(self.program, facts, solver_cap=self.solver_cap)
            else:
                self.session.shot(facts)
            answer = self.session.solve(facts) if self.solving else []
            record = self.session.shot_log[-1]
            ground = self.session.overground
        else:
            start = time.perf_counter_ns()
            new = len(facts - self.accumulated)
            self.accumulated |= facts
            grounder = Grounder(self.program)
            grounder.add_facts(self.accumulated)
            ground = grounder.ground
            elapsed = (time.perf_counter_ns() - start) // 1000
            record = ShotRecord(len(self.run.records) + 1, new, len(ground), len(ground), elapsed)
            answer = []
            if self.solving:
                start = time.perf_counter_ns()
                answer = solve([*ground, *facts_as_rules(facts)], 0, self.solver_cap)
                record.solve_time_us = (time.perf_counter_ns() - start) // 1000
        self.run.records.append(record)
        self.run.answer_sets.append(answer)
        if self.keep_programs:
            self.run.programs.append(ground.rules())
        return answer


# --------------------------------------------------------------------------
# Sudoku

@dataclass(frozen=True)
class SudokuInstance:
    n: int                                   # box side; the board is n*n x n*n
    givens: frozenset = frozenset()          # (row, col, value), 1-based

    @property
    def side(self) -> int:
        return self.n * self.n

    @classmethod
    def from_string(cls, text: str) -> "SudokuInstance":
        """Row-major cells, ``.``/``0`` for blanks, ``1-9`` then ``A-P`` for values."""
        cells = [c for c in text if not c.isspace()]
        n = int(round(len(cells) ** 0.25))
        if n ** 4 != len(cells):
            raise ValueError(f"{len(cells)} cells is not a square board")
        givens = set()
        for i, c in enumerate(cells):
            if c not in ".0":
                v = int(c) if c.isdigit() else ord(c.upper()) - ord("A") + 10
                givens.add((i // (n * n) + 1, i % (n * n) + 1, v))
        return cls(n, frozenset(givens))

    @classmethod
    def from_facts(cls, atoms: Iterable[Atom]) -> "SudokuInstance":
        n = None
        givens = set()
        for a in atoms:
            if a.predicate == "size" and len(a.args) == 1:
                n = a.args[0]
            elif a.predicate == "given" and len(a.args) == 3:
                givens.add(tuple(a.args))
        if n is None:
            raise ValueError("instance has no size/1 fact")
        return cls(n, frozenset(givens))

    def facts(self) -> frozenset[Atom]:
        return frozenset({Atom("size", (self.n,))} | {Atom("given", g) for g in self.givens})

    def with_values(self, values: Iterable[tuple]) -> "SudokuInstance":
        return SudokuInstance(self.n, self.givens | frozenset(values))

    def is_complete(self) -> bool:
        return len({(r, c) for r, c, _ in self.givens}) == self.side ** 2

    def is_consistent(self) -> bool:
        seen = set()
        for r, c, v in self.givens:
            if not (1 <= r <= self.side and 1 <= c <= self.side and 1 <= v <= self.side):
                return False
            b = ((r - 1) // self.n, (c - 1) // self.n)
            for key in (("cell", r, c), ("row", r, v), ("col", c, v), ("box", b, v)):
                if key in seen:
                    return False
                seen.add(key)
        return True

    def __str__(self) -> str:
        grid = [["." for _ in range(self.side)] for _ in range(self.side)]
        for r, c, v in self.givens:
            grid[r - 1][c - 1] = str(v) if v < 10 else chr(ord("A") + v - 10)
        return "\n".join("".join(row) for row in grid)


# solvable with naked and hidden singles alone
SUDOKU_INSTANCES = {
    "mini4": "1...  ..3.  .4..  ...2",
    "wiki9": "530070000600195000098000060800060003400803001700020006060000280000419005000080079",
    "euler9": "003020600900305001001806400008102900700000008006708200002609500800203009005010300",
}


class ConvergenceError(RuntimeError):
    pass


def sudoku_driver(instance: SudokuInstance, mode: str = INCREMENTAL, *,
                  max_shots: int = 200, keep_programs: bool = False,
                  program: Program | None = None) -> BenchRun:
    """Feed each shot's derived cells back as the next shot's givens
    until a shot derives nothing.  ``outcome`` is the final board."""
    runner = _Runner(program or load_encoding("sudoku"), mode, keep_programs, DEFAULT_CAP)
    board = instance
    for _ in range(max_shots):
        runner.run.boards.append(board)
        answer = runner.shot(board.facts())
        if len(answer) != 1:
            raise ConvergenceError(f"expected one answer set, got {len(answer)}")
        derived = {a.args for a in answer[0].atoms if a.predicate == "newValue"}
        if not derived:
            runner.run.outcome = board
            return runner.run
        board = board.with_values(derived)
        if not board.is_consistent():
            raise ConvergenceError("strategies derived conflicting values")
    raise ConvergenceError(f"no fixpoint after {max_shots} shots")


# --------------------------------------------------------------------------
# dynamic graphs

def graph_driver(shots: Sequence[Iterable[Atom]], mode: str = INCREMENTAL, *,
                 keep_programs: bool = False, program: Program | None = None,
                 solver_cap: int = DEFAULT_CAP, solving: bool = True) -> BenchRun:
    """Run each fact set as one shot.

    The disjunctive reachability program can have exponentially many
    answer sets, so pass ``solving=False`` to measure grounding alone on
    anything beyond a handful of nodes.
    """
    runner = _Runner(program or load_encoding("reach"), mode, keep_programs, solver_cap, solving)
    for facts in shots:
        runner.shot(frozenset(facts))
    return runner.run


def random_edge_stream(nodes: int, shots: int, edges: int, seed: int,
                       ab_rate: float = 0.2) -> list[frozenset[Atom]]:
    rng = random.Random(seed)
    names = [chr(ord("a") + i) for i in range(nodes)]
    out = []
    for _ in range(shots):
        facts = {Atom("e", (rng.choice(names), rng.choice(names))) for _ in range(edges)}
        facts |= {Atom("ab", (x,)) for x in names if rng.random() < ab_rate}
        out.append(frozenset(facts))
    return out


def speedup(scratch: BenchRun, incremental: BenchRun, from_shot: int = 1) -> float:
    inc = incremental.ground_time_us(from_shot)
    return scratch.ground_time_us(from_shot) / max(inc, 1)


# --------------------------------------------------------------------------

def _report(runs: dict, out, timing: bool) -> None:
    for mode, run in runs.items():
        out.write(f"# mode={mode}\n")
        out.write(records_to_csv(run.records, timing))
    if len(runs) == 2 and timing:
        out.write(f"speedup={speedup(runs[FROM_SCRATCH], runs[INCREMENTAL]):.2f}\n")


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="python -m overground.bench",
                                     description="multi-shot grounding benchmarks")
    parser.add_argument("--mode", choices=(*MODES, "both"), default="both")
    parser.add_argument("--no-timing", action="store_true")
    parser.add_argument("--solver-cap", type=int, default=DEFAULT_CAP, metavar="N")
    sub = parser.add_subparsers(dest="bench", required=True)
    sp = sub.add_parser("sudoku", help="iterated naked/hidden single inference")
    sp.add_argument("instance", help=f"fact file or one of {', '.join(SUDOKU_INSTANCES)}")
    gp = sub.add_parser("graph", help="reachability over streamed edge facts")
    gp.add_argument("facts", nargs="*", help="one fact file per shot")
    gp.add_argument("--random", type=int, metavar="SEED", help="generate a random stream")
    gp.add_argument("--nodes", type=int, default=3, help="nodes in a random stream (default 3)")
    gp.add_argument("--shots", type=int, default=5, help="shots in a random stream (default 5)")
    gp.add_argument("--edges", type=int, default=3, help="edges per random shot (default 3)")
    gp.add_argument("--no-solve", action="store_true", help="ground only")
    args = parser.parse_args(argv)

    modes = MODES if args.mode == "both" else (args.mode,)
    runs = {}
    if args.bench == "sudoku":
        if args.instance in SUDOKU_INSTANCES:
            inst = SudokuInstance.from_string(SUDOKU_INSTANCES[args.instance])
        else:
            with open(args.instance) as fh:
                inst = SudokuInstance.from_facts(parse_facts(fh.read()))
        for m in modes:
            runs[m] = sudoku_driver(inst, m)
        print(runs[modes[0]].outcome, file=sys.stderr)
    else:
        if args.random is not None:
            shots = random_edge_stream(args.nodes, args.shots, args.edges, args.random)
        else:
            shots = []
            for path in args.facts:
                with open(path) as fh:
                    shots.append(parse_facts(fh.read()))
        for m in modes:
            runs[m] = graph_driver(shots, m, solver_cap=args.solver_cap, solving=not args.no_solve)
    _report(runs, sys.stdout, not args.no_timing)
    return 0


if __name__ == "__main__":
    sys.exit(main())
