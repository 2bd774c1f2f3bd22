"""Ground programs, instantiation and the least fixpoint of Inst.

Two routes compute ``Inst(P, F)^inf``:

* :func:`inst_fixpoint_naive` iterates the plain operator :func:`inst`,
  which matches bodies by backtracking over the whole atom set.  It is
  slow and used as an oracle.
* :class:`Grounder` runs semi-naive evaluation component by component
  over the positive predicate dependency graph.  Adding facts to an
  existing grounder continues the same evaluation from the new atoms
  only, which is what an incremental session relies on.

Ground rules are never simplified: negative literals survive verbatim
and only builtins are evaluated away.
"""
from __future__ import annotations

import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import networkx as nx

from .syntax import (
    INT_MAX, INT_MIN, Atom, BinOp, Builtin, ParseError, Program, Rule, UnsafeRuleError,
    Variable, atom_key, expr_variables, parse_rules, print_rule, term_key,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_INSTANCES = 10 ** 6


class GroundingError(RuntimeError):
    pass


class ResourceLimitError(GroundingError):
    pass


class ArithmeticOverflowError(GroundingError):
    pass


# --------------------------------------------------------------------------
# ground rules and programs

@dataclass(frozen=True, slots=True)
class GroundRule:
    head: frozenset = frozenset()
    pos: frozenset = frozenset()
    neg: frozenset = frozenset()
    origin: str = field(default="", compare=False)

    @classmethod
    def fact(cls, atom: Atom) -> "GroundRule":
        return cls(frozenset((atom,)), origin="fact")

    @property
    def is_fact(self) -> bool:
        return len(self.head) == 1 and not self.pos and not self.neg

    def atoms(self) -> frozenset:
        return self.head | self.pos | self.neg

    def __str__(self) -> str:
        return print_rule(self)


def rule_key(r: GroundRule) -> tuple:
    return tuple(tuple(sorted(atom_key(a) for a in s)) for s in (r.head, r.pos, r.neg))


def facts_as_rules(facts: Iterable[Atom]) -> list[GroundRule]:
    return [GroundRule.fact(a) for a in facts]


def parse_ground_rules(text: str) -> list[GroundRule]:
    """Read ground rules (facts allowed) as printed by :func:`print_rule`."""
    out = []
    for r in parse_rules(text, allow_facts=True):
        if r.builtins or r.variables():
            raise ParseError(f"rule '{r}' is not ground")
        out.append(GroundRule(frozenset(r.head), frozenset(r.pos), frozenset(r.neg),
                              "fact" if r.is_fact else r.source_id))
    return out


class GroundProgram:
    """Insertion-ordered set of ground rules with the head-atom index."""

    def __init__(self, rules: Iterable[GroundRule] = ()):
        self._rules: dict[GroundRule, None] = {}
        self.heads: set[Atom] = set()
        self.update(rules)

    def add(self, rule: GroundRule) -> bool:
        if rule in self._rules:
            return False
        self._rules[rule] = None
        self.heads.update(rule.head)
        return True

    def update(self, rules: Iterable[GroundRule]) -> list[GroundRule]:
        return [r for r in rules if self.add(r)]

    def __iter__(self) -> Iterator[GroundRule]:
        return iter(self._rules)

    def __len__(self) -> int:
        return len(self._rules)

    def __contains__(self, rule) -> bool:
        return rule in self._rules

    def __eq__(self, other) -> bool:
        if isinstance(other, GroundProgram):
            return self._rules.keys() == other._rules.keys()
        if isinstance(other, (set, frozenset)):
            return self._rules.keys() == other
        return NotImplemented

    __hash__ = None  # mutable

    def __le__(self, other) -> bool:
        return all(r in other for r in self._rules)

    def __repr__(self) -> str:
        return f"GroundProgram({len(self)} rules)"

    def rules(self) -> frozenset[GroundRule]:
        return frozenset(self._rules)

    def copy(self) -> "GroundProgram":
        g = GroundProgram()
        g._rules = dict(self._rules)
        g.heads = set(self.heads)
        return g

    def sorted(self) -> list[GroundRule]:
        return sorted(self._rules, key=rule_key)

    def to_text(self) -> str:
        """Canonical dump, one rule per line, independent of insertion order."""
        return "".join(print_rule(r) + "\n" for r in self.sorted())


class HerbrandUniverse:
    """The constants observed so far; only ever grows."""

    def __init__(self, constants: Iterable = ()):
        self.constants: set = set(constants)

    @classmethod
    def from_inputs(cls, program: Program | None = None, *fact_sets: Iterable[Atom]) -> "HerbrandUniverse":
        u = cls(program.constants() if program is not None else ())
        for facts in fact_sets:
            u.add_atoms(facts)
        return u

    def add_atoms(self, atoms: Iterable[Atom]) -> None:
        for a in atoms:
            self.constants.update(a.args)

    def add_rules(self, rules: Iterable[GroundRule]) -> None:
        for r in rules:
            self.add_atoms(r.atoms())

    def __iter__(self):
        return iter(sorted(self.constants, key=term_key))

    def __len__(self) -> int:
        return len(self.constants)

    def __contains__(self, c) -> bool:
        return c in self.constants


# --------------------------------------------------------------------------
# builtins

class _Undefined(Exception):
    """Arithmetic with no value; the candidate substitution is dropped."""


def eval_expr(e, binding: dict):
    if isinstance(e, Variable):
        return binding[e]
    if not isinstance(e, BinOp):
        return e
    left = eval_expr(e.left, binding)
    right = eval_expr(e.right, binding)
    if not (isinstance(left, int) and isinstance(right, int)):
        raise _Undefined("non_integer_arithmetic")
    op = e.op
    if op == "+":
        v = left + right
    elif op == "-":
        v = left - right
    elif op == "*":
        v = left * right
    else:
        if right == 0:
            raise _Undefined("division_by_zero")
        # truncating division
        v = abs(left) // abs(right)
        if (left < 0) != (right < 0):
            v = -v
    if not INT_MIN <= v <= INT_MAX:
        raise ArithmeticOverflowError(f"integer overflow evaluating {e}")
    return v


def compare(op: str, left, right) -> bool:
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    lk, rk = term_key(left), term_key(right)
    if op == "<":
        return lk < rk
    if op == ">":
        return lk > rk
    if op == "<=":
        return lk <= rk
    return lk >= rk


def _test(b: Builtin, binding: dict) -> bool:
    return compare(b.op, eval_expr(b.lhs, binding), eval_expr(b.rhs, binding))


def _instantiate(a: Atom, binding: dict) -> Atom:
    return Atom(a.predicate, tuple(binding[t] if isinstance(t, Variable) else t for t in a.args))


def _ground_instance(rule: Rule, binding: dict) -> GroundRule:
    return GroundRule(
        frozenset(_instantiate(a, binding) for a in rule.head),
        frozenset(_instantiate(a, binding) for a in rule.pos),
        frozenset(_instantiate(a, binding) for a in rule.neg),
        rule.source_id,
    )


# --------------------------------------------------------------------------
# evaluation plans

class PlanStep(NamedTuple):
    kind: str          # "atom", "assign" or "test"
    index: int         # position in rule.pos or rule.builtins
    literal: object

    def __str__(self) -> str:
        return str(self.literal)


def safety_order(rule: Rule, first: int | None = None) -> list[PlanStep]:
    """Order the positive atoms and builtins of ``rule`` for evaluation.

    Builtins run as soon as their variables are bound (``=`` with an
    unbound variable on the left becomes an assignment); among the
    remaining atoms the one with the most bound arguments goes next.
    ``first`` forces a positive atom to the front, as semi-naive
    evaluation does with the delta atom.
    """
    bound: set[Variable] = set()
    steps: list[PlanStep] = []
    atoms = list(range(len(rule.pos)))
    pending = list(range(len(rule.builtins)))

    def take_atom(i: int) -> None:
        atoms.remove(i)
        steps.append(PlanStep("atom", i, rule.pos[i]))
        bound.update(rule.pos[i].variables())

    if first is not None:
        take_atom(first)
    while True:
        progress = True
        while progress:
            progress = False
            for bi in list(pending):
                b = rule.builtins[bi]
                if b.variables() <= bound:
                    steps.append(PlanStep("test", bi, b))
                elif b.is_assignment_form and b.lhs not in bound and expr_variables(b.rhs) <= bound:
                    steps.append(PlanStep("assign", bi, b))
                    bound.add(b.lhs)
                else:
                    continue
                pending.remove(bi)
                progress = True
        if not atoms:
            break

        def score(i: int) -> tuple:
            args = rule.pos[i].args
            nb = sum(1 for t in args if not isinstance(t, Variable) or t in bound)
            return (nb != len(args), -nb, i)

        take_atom(min(atoms, key=score))
    unbound = rule.variables() - bound
    if unbound:
        raise UnsafeRuleError(rule, unbound)
    return steps


class Relation:
    """Rows of one predicate with lazily built hash indexes."""

    __slots__ = ("rows", "indexes")

    def __init__(self, rows: Iterable[tuple] = ()):
        self.rows: set[tuple] = set(rows)
        self.indexes: dict[tuple, dict] = {}

    def add(self, row: tuple) -> bool:
        if row in self.rows:
            return False
        self.rows.add(row)
        for positions, idx in self.indexes.items():
            idx.setdefault(tuple(row[p] for p in positions), []).append(row)
        return True

    def lookup(self, positions: tuple, key: tuple):
        if not positions:
            return self.rows
        idx = self.indexes.get(positions)
        if idx is None:
            idx = {}
            for row in self.rows:
                idx.setdefault(tuple(row[p] for p in positions), []).append(row)
            self.indexes[positions] = idx
        return idx.get(key, ())


class _Excluding:
    """View of a relation hiding the rows of the current delta."""

    __slots__ = ("rel", "hidden")

    def __init__(self, rel: Relation, hidden: set):
        self.rel, self.hidden = rel, hidden

    def lookup(self, positions, key):
        hidden = self.hidden
        return [row for row in self.rel.lookup(positions, key) if row not in hidden]


_EMPTY = Relation()

_ATOM, _ASSIGN, _TEST = 0, 1, 2


def _compile(rule: Rule, steps: list[PlanStep]) -> list[tuple]:
    compiled = []
    bound: set[Variable] = set()
    for s in steps:
        if s.kind == "atom":
            a = s.literal
            key_pos, key_src, binds, eqs = [], [], [], []
            first_seen: dict[Variable, int] = {}
            for p, t in enumerate(a.args):
                if not isinstance(t, Variable):
                    key_pos.append(p)
                    key_src.append((False, t))
                elif t in bound:
                    key_pos.append(p)
                    key_src.append((True, t))
                elif t in first_seen:
                    eqs.append((first_seen[t], p))
                else:
                    first_seen[t] = p
                    binds.append((p, t))
            bound.update(first_seen)
            compiled.append((_ATOM, a.signature, tuple(key_pos), tuple(key_src),
                             tuple(binds), tuple(eqs), s.index))
        elif s.kind == "assign":
            compiled.append((_ASSIGN, s.literal.lhs, s.literal.rhs))
            bound.add(s.literal.lhs)
        else:
            compiled.append((_TEST, s.literal))
    return compiled


# --------------------------------------------------------------------------
# the operator Inst and its naive fixpoint (oracle route)

def _solve_builtins(builtins: tuple[Builtin, ...], binding: dict, rule: Rule) -> dict | None:
    binding = dict(binding)
    todo = list(builtins)
    while todo:
        for b in todo:
            if b.variables() <= binding.keys():
                if not _test(b, binding):
                    return None
                break
            if b.is_assignment_form and expr_variables(b.rhs) <= binding.keys():
                binding[b.lhs] = eval_expr(b.rhs, binding)
                break
        else:
            raise UnsafeRuleError(rule, set().union(*(b.variables() for b in todo)) - binding.keys())
        todo.remove(b)
    return binding


def _match_naive(pos: tuple[Atom, ...], by_sig: dict, binding: dict) -> Iterator[dict]:
    if not pos:
        yield binding
        return
    a, rest = pos[0], pos[1:]
    for cand in by_sig.get(a.signature, ()):
        b = dict(binding)
        for t, c in zip(a.args, cand.args):
            if isinstance(t, Variable):
                if b.setdefault(t, c) != c:
                    break
            elif t != c:
                break
        else:
            yield from _match_naive(rest, by_sig, b)


def inst(program: Program, atoms: Iterable[Atom]) -> GroundProgram:
    """``{r in grnd(P) : B+(r) <= S}`` for the atom set ``S``.

    Negative literals are never inspected.
    """
    by_sig: dict = defaultdict(list)
    for a in set(atoms):
        by_sig[a.signature].append(a)
    out = GroundProgram()
    for rule in program:
        for binding in _match_naive(rule.pos, by_sig, {}):
            try:
                full = _solve_builtins(rule.builtins, binding, rule)
            except _Undefined:
                continue
            if full is not None:
                out.add(_ground_instance(rule, full))
    return out


def inst_fixpoint_naive(program: Program, facts: Iterable[Atom],
                        max_rules: int = DEFAULT_MAX_INSTANCES) -> GroundProgram:
    """Iterate ``Inst(P, Heads(R) | F)`` from ``R = {}`` until stable.

    Facts are not part of the result.
    """
    facts = frozenset(facts)
    current = GroundProgram()
    while True:
        nxt = inst(program, facts | current.heads)
        if len(nxt) > max_rules:
            raise ResourceLimitError(f"more than {max_rules} ground rules")
        if nxt == current:
            return current
        current = nxt


def grnd_naive(program: Program, universe: Iterable,
               max_instances: int = DEFAULT_MAX_INSTANCES) -> GroundProgram:
    """All ground instances of ``program`` over ``universe``.

    Exponential; only meant for checking other routes on tiny inputs.
    """
    domain = set(universe)
    if program.has_arithmetic:
        if program.int_bounds is None:
            raise GroundingError("program uses arithmetic; declare integer bounds to enumerate it")
        lo, hi = program.int_bounds
        domain.update(range(lo, hi + 1))
    domain = sorted(domain, key=term_key)
    plan = []
    total = 0
    for rule in program:
        variables = sorted(rule.variables(), key=lambda v: v.name)
        total += len(domain) ** len(variables)
        plan.append((rule, variables))
    if total > max_instances:
        raise ResourceLimitError(f"{total} candidate instances exceed the cap of {max_instances}")
    out = GroundProgram()
    for rule, variables in plan:
        for values in itertools.product(domain, repeat=len(variables)):
            binding = dict(zip(variables, values))
            try:
                if all(_test(b, binding) for b in rule.builtins):
                    out.add(_ground_instance(rule, binding))
            except _Undefined:
                pass
    return out


# --------------------------------------------------------------------------
# semi-naive grounder (production route)

@dataclass
class _Component:
    predicates: set
    rules: list[int]
    body_signatures: set


def predicate_components(program: Program) -> list[_Component]:
    """Rule groups in topological order of the positive dependency graph.

    All head predicates of a disjunctive rule share a component.  The
    last component holds the constraints.
    """
    g = nx.DiGraph()
    for rule in program:
        for a in (*rule.pos, *rule.head):
            g.add_node(a.signature)
        for h in rule.head:
            for b in rule.pos:
                g.add_edge(b.signature, h.signature)
        for h1, h2 in zip(rule.head, rule.head[1:]):
            g.add_edge(h1.signature, h2.signature)
            g.add_edge(h2.signature, h1.signature)
    cond = nx.condensation(g)
    where = cond.graph["mapping"]
    comps = [_Component(set(cond.nodes[c]["members"]), [], set())
             for c in nx.lexicographical_topological_sort(cond)]
    position = {c: i for i, c in enumerate(nx.lexicographical_topological_sort(cond))}
    constraints = _Component(set(), [], set())
    for i, rule in enumerate(program):
        comp = comps[position[where[rule.head[0].signature]]] if rule.head else constraints
        comp.rules.append(i)
        comp.body_signatures.update(a.signature for a in rule.pos)
    comps.append(constraints)
    return [c for c in comps if c.rules]


class Grounder:
    """Semi-naive computation of ``Inst(P, F)^inf`` that can be resumed.

    ``add_facts`` may be called repeatedly; every call returns exactly
    the ground rules that the new atoms make applicable.
    """

    def __init__(self, program: Program, *, max_rules: int | None = None):
        self.program = program
        self.max_rules = max_rules
        self.ground = GroundProgram()
        self.relations: dict[tuple, Relation] = defaultdict(Relation)
        self.diagnostics: Counter = Counter()
        self.components = predicate_components(program)
        self._plans: dict[tuple[int, int | None], list[tuple]] = {}
        self._started = False

    def __contains__(self, atom: Atom) -> bool:
        rel = self.relations.get(atom.signature)
        return rel is not None and atom.args in rel.rows

    def atoms(self) -> Iterator[Atom]:
        for (pred, _), rel in self.relations.items():
            for row in rel.rows:
                yield Atom(pred, row)

    def plan(self, rule_index: int, first: int | None = None) -> list[tuple]:
        key = (rule_index, first)
        plan = self._plans.get(key)
        if plan is None:
            rule = self.program.rules[rule_index]
            plan = self._plans[key] = _compile(rule, safety_order(rule, first))
        return plan

    def add_facts(self, facts: Iterable[Atom]) -> list[GroundRule]:
        new: dict[tuple, set] = defaultdict(set)
        for a in facts:
            if self.relations[a.signature].add(a.args):
                new[a.signature].add(a.args)
        out: list[GroundRule] = []
        first_run = not self._started
        self._started = True
        for comp in self.components:
            self._saturate(comp, new, out, first_run)
        return out

    # ------------------------------------------------------------------

    def _saturate(self, comp: _Component, new: dict, out: list, first_run: bool) -> None:
        rules = self.program.rules
        fresh: dict[tuple, set] = defaultdict(set)
        if first_run:
            for ri in comp.rules:
                if not rules[ri].pos:
                    self._execute(ri, self.plan(ri), [], out, fresh)
            self._commit(fresh, new)
        delta = {s: new[s] for s in comp.body_signatures if new.get(s)}
        while delta:
            fresh = defaultdict(set)
            delta_rels = {s: Relation(rows) for s, rows in delta.items()}
            for ri in comp.rules:
                rule = rules[ri]
                for i, atom in enumerate(rule.pos):
                    if atom.signature not in delta:
                        continue
                    plan = self.plan(ri, i)
                    sources = []
                    for step in plan:
                        if step[0] != _ATOM:
                            sources.append(None)
                        elif step[6] == i:
                            sources.append(delta_rels[step[1]])
                        elif step[6] < i and step[1] in delta:
                            sources.append(_Excluding(self.relations[step[1]], delta[step[1]]))
                        else:
                            sources.append(self.relations.get(step[1], _EMPTY))
                    self._execute(ri, plan, sources, out, fresh)
            delta = self._commit(fresh, new)

    def _commit(self, fresh: dict, new: dict) -> dict:
        delta = {}
        for sig, rows in fresh.items():
            rel = self.relations[sig]
            added = {row for row in rows if rel.add(row)}
            if added:
                new[sig] |= added
                delta[sig] = added
        return delta

    def _execute(self, rule_index: int, plan: list[tuple], sources: list, out: list,
                 fresh: dict) -> None:
        rule = self.program.rules[rule_index]
        ground, diagnostics, relations = self.ground, self.diagnostics, self.relations
        max_rules = self.max_rules
        binding: dict = {}
        n = len(plan)

        def emit() -> None:
            gr = _ground_instance(rule, binding)
            if ground.add(gr):
                out.append(gr)
                if max_rules is not None and len(ground) > max_rules:
                    raise ResourceLimitError(f"more than {max_rules} ground rules")
                for h in gr.head:
                    rel = relations.get(h.signature)
                    if rel is None or h.args not in rel.rows:
                        fresh[h.signature].add(h.args)

        def step(k: int) -> None:
            if k == n:
                emit()
                return
            s = plan[k]
            kind = s[0]
            if kind == _ATOM:
                _, _, key_pos, key_src, binds, eqs, _ = s
                key = tuple(binding[v] if is_var else v for is_var, v in key_src)
                rows = sources[k].lookup(key_pos, key)
                for row in rows:
                    if eqs and any(row[p] != row[q] for p, q in eqs):
                        continue
                    for p, v in binds:
                        binding[v] = row[p]
                    step(k + 1)
                for _, v in binds:
                    binding.pop(v, None)
            elif kind == _ASSIGN:
                try:
                    binding[s[1]] = eval_expr(s[2], binding)
                except _Undefined as e:
                    diagnostics[str(e)] += 1
                    return
                step(k + 1)
                del binding[s[1]]
            else:
                try:
                    ok = _test(s[1], binding)
                except _Undefined as e:
                    diagnostics[str(e)] += 1
                    return
                if ok:
                    step(k + 1)

        step(0)


def inst_fixpoint_seminaive(program: Program, facts: Iterable[Atom],
                            max_rules: int | None = None) -> GroundProgram:
    g = Grounder(program, max_rules=max_rules)
    g.add_facts(facts)
    return g.ground
