"""Command line: ``overground {ground,shots,solve,check-embedding,serve}``.

Exit status is 0 on success, 1 for usage errors and unreadable files,
2 for parse, safety and evaluation errors, 3 when a resource cap is hit.
"""
from __future__ import annotations

import argparse
import shlex
import sys
from typing import Iterable, Sequence, TextIO

from .embedding import EmbeddingCandidate, is_embedding_program
from .ground import (
    DEFAULT_MAX_INSTANCES, GroundingError, GroundRule, Grounder,
    ResourceLimitError, facts_as_rules, parse_ground_rules,
)
from .incremental import Session, records_to_csv
from .solver import DEFAULT_CAP, AnswerSet, SolverCapabilityError, solve
from .syntax import Atom, ParseError, Program, parse_facts, parse_program

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_program(path: str) -> Program:
    try:
        return parse_program(_read(path))
    except ParseError as e:
        raise ParseError(f"{path}: {e}") from e


def load_facts(path: str) -> frozenset[Atom]:
    try:
        return parse_facts(_read(path))
    except ParseError as e:
        raise ParseError(f"{path}: {e}") from e


def load_ground_rules(path: str) -> list[GroundRule]:
    try:
        return parse_ground_rules(_read(path))
    except ParseError as e:
        raise ParseError(f"{path}: {e}") from e


def write_answer_sets(answers: list[AnswerSet], out: TextIO) -> None:
    if not answers:
        out.write("UNSATISFIABLE\n")
    for a in answers:
        out.write(f"{a}\n")


def _ground(program: Program, fact_sets: Iterable[frozenset], max_rules: int) -> Grounder:
    g = Grounder(program, max_rules=max_rules)
    accumulated: set = set()
    for facts in fact_sets:
        accumulated |= facts
    g.add_facts(accumulated)
    return g


def _report_diagnostics(counter, err: TextIO) -> None:
    for name, count in sorted(counter.items()):
        err.write(f"% {name}: {count}\n")


# --------------------------------------------------------------------------
# verbs

def cmd_ground(args, out: TextIO, err: TextIO) -> int:
    program = load_program(args.program)
    g = _ground(program, [load_facts(p) for p in args.facts], args.max_instances)
    text = g.ground.to_text()
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    out.write(f"% rules: {len(g.ground)}\n")
    _report_diagnostics(g.diagnostics, err)
    return EXIT_OK


def cmd_shots(args, out: TextIO, err: TextIO) -> int:
    program = load_program(args.program)
    shots = [load_facts(p) for p in args.facts]
    session = Session(program, shots[0], max_rules=args.max_instances, solver_cap=args.solver_cap)
    for k, facts in enumerate(shots):
        if k:
            session.shot(facts)
        if args.answer_sets:
            for a in session.solve(facts) or ["UNSATISFIABLE"]:
                out.write(f"shot {k + 1}: {a}\n")
    csv_text = session.stats_csv(not args.no_timing)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        out.write(csv_text)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(session.overground.to_text())
    _report_diagnostics(session.diagnostics, err)
    return EXIT_OK


def cmd_solve(args, out: TextIO, err: TextIO) -> int:
    program = load_program(args.program)
    fact_sets = [load_facts(p) for p in args.facts]
    g = _ground(program, fact_sets, args.max_instances)
    facts = frozenset().union(*fact_sets)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(g.ground.to_text())
    write_answer_sets(solve([*g.ground, *facts_as_rules(facts)], args.n, args.solver_cap), out)
    return EXIT_OK


def cmd_check_embedding(args, out: TextIO, err: TextIO) -> int:
    program = load_program(args.program)
    facts = load_facts(args.facts)
    candidate = EmbeddingCandidate(load_ground_rules(args.ground), program, facts)
    verdict = is_embedding_program(candidate, max_instances=args.max_instances)
    out.write("EMBEDDING\n" if verdict else f"NOT-EMBEDDING {verdict.witness}\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# serve

class Server:
    """Line protocol around one :class:`Session`.

    Every request gets at least one response line; the last one starts
    with ``OK`` or ``ERROR``.
    """

    def __init__(self, out: TextIO, *, max_rules: int = DEFAULT_MAX_INSTANCES,
                 solver_cap: int = DEFAULT_CAP, timing: bool = True):
        self.out = out
        self.max_rules, self.solver_cap, self.timing = max_rules, solver_cap, timing
        self.program: Program | None = None
        self.session: Session | None = None

    def reply(self, line: str) -> None:
        self.out.write(line + "\n")
        self.out.flush()

    def run(self, lines: Iterable[str]) -> None:
        it = iter(lines)
        for raw in it:
            line = raw.strip()
            if not line:
                continue
            try:
                if self.handle(line, it):
                    return
            except (ParseError, GroundingError, SolverCapabilityError, OSError, ValueError) as e:
                self.reply(f"ERROR {_one_line(e)}")
            except Exception as e:  # the loop must survive anything
                self.reply(f"ERROR internal: {type(e).__name__}: {_one_line(e)}")

    def _need_program(self) -> Program:
        if self.program is None:
            raise ValueError("no program loaded")
        return self.program

    def _need_session(self) -> Session:
        self._need_program()
        if self.session is None:
            raise ValueError("no shot submitted")
        return self.session

    def handle(self, line: str, rest) -> bool:
        verb, _, arg = line.partition(" ")
        verb, arg = verb.upper(), arg.strip()
        if verb == "LOAD":
            self.program = load_program(_path(arg))
            self.session = None
            self.reply("OK")
        elif verb in ("SHOT", "SHOT-INLINE"):
            block = []
            if verb == "SHOT-INLINE":
                # consume the block first so a failed shot never leaks its lines as commands
                for raw in rest:
                    if raw.strip() == "END":
                        break
                    block.append(raw)
                else:
                    raise ValueError("SHOT-INLINE block not terminated by END")
            program = self._need_program()
            facts = load_facts(_path(arg)) if verb == "SHOT" else parse_facts("\n".join(block))
            if self.session is None:
                self.session = Session(program, facts, max_rules=self.max_rules,
                                       solver_cap=self.solver_cap)
            else:
                self.session.shot(facts)
            rec = self.session.shot_log[-1]
            self.reply(f"OK delta={rec.delta_rules} total={rec.total_rules}")
        elif verb == "SOLVE":
            try:
                n = int(arg) if arg else 0
            except ValueError:
                raise ValueError(f"bad model count {arg!r}") from None
            answers = self._need_session().solve(n=n)
            for a in answers:
                self.reply(str(a))
            if not answers:
                self.reply("UNSATISFIABLE")
            self.reply(f"OK models={len(answers)}")
        elif verb == "EMIT":
            ground = self._need_session().overground
            with open(_path(arg), "w", encoding="utf-8") as fh:
                fh.write(ground.to_text())
            self.reply(f"OK rules={len(ground)}")
        elif verb == "STATS":
            session = self._need_session()
            for row in records_to_csv(session.shot_log, self.timing).splitlines():
                self.reply(row)
            self.reply("OK")
        elif verb == "RESET":
            self.program = self.session = None
            self.reply("OK")
        elif verb == "QUIT":
            self.reply("OK bye")
            return True
        else:
            raise ValueError(f"unknown command {verb!r}")
        return False


def _path(arg: str) -> str:
    parts = shlex.split(arg)
    if len(parts) != 1:
        raise ValueError("expected exactly one path")
    return parts[0]


def _one_line(e: BaseException) -> str:
    return " ".join(str(e).split()) or type(e).__name__


def cmd_serve(args, out: TextIO, err: TextIO) -> int:
    Server(out, max_rules=args.max_instances, solver_cap=args.solver_cap,
           timing=not args.no_timing).run(sys.stdin)
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-instances", type=int, default=DEFAULT_MAX_INSTANCES, metavar="N",
                        help="abort once more than N ground rules are produced (default %(default)s)")
    common.add_argument("--solver-cap", type=int, default=DEFAULT_CAP, metavar="N",
                        help="largest atom count the exhaustive solver accepts (default %(default)s)")
    common.add_argument("--no-timing", action="store_true",
                        help="write 0 in timing columns so output is reproducible")
    common.add_argument("--emit", metavar="PATH", help="write the canonical ground program to PATH")

    parser = _Parser(prog="overground", description="incremental grounding of ASP programs")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("ground", parents=[common], help="ground a program over accumulated facts")
    p.add_argument("program")
    p.add_argument("facts", nargs="*")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("shots", parents=[common], help="run one shot per fact file")
    p.add_argument("program")
    p.add_argument("facts", nargs="+")
    p.add_argument("--stats", metavar="PATH", help="CSV destination (default stdout)")
    p.add_argument("--answer-sets", action="store_true", help="print answer sets after every shot")
    p.set_defaults(func=cmd_shots)

    p = sub.add_parser("solve", parents=[common], help="ground and print answer sets")
    p.add_argument("program")
    p.add_argument("facts", nargs="*")
    p.add_argument("-n", type=int, default=0, help="number of answer sets, 0 for all")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check-embedding", parents=[common],
                       help="decide whether a ground program embeds program + facts")
    p.add_argument("program")
    p.add_argument("facts")
    p.add_argument("ground")
    p.set_defaults(func=cmd_check_embedding)

    p = sub.add_parser("serve", parents=[common], help="line protocol on stdin/stdout")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None,
         err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out, err)
    except ResourceLimitError as e:
        err.write(f"error: {e}\n")
        return EXIT_LIMIT
    except SolverCapabilityError as e:
        err.write(f"error: {e}\n")
        return EXIT_LIMIT
    except (ParseError, GroundingError, ValueError) as e:
        err.write(f"error: {e}\n")
        return EXIT_INPUT
    except OSError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
