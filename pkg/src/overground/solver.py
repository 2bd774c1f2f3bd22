"""Answer sets of small ground programs.

Two routes: exhaustive model enumeration with a minimality check on the
FLP reduct (exponential, capped), and the perfect model of stratified
normal programs (polynomial).  :func:`solve` picks the cheap one when it
applies.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import networkx as nx

from .ground import GroundRule
from .syntax import Atom, atom_key

DEFAULT_CAP = 24

BRUTE_FORCE = "brute-force-minimal"
STRATIFIED = "stratified-perfect-model"


class SolverCapabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class AnswerSet:
    atoms: frozenset
    certificate: str = BRUTE_FORCE

    def sort_key(self) -> tuple:
        return tuple(sorted(atom_key(a) for a in self.atoms))

    def __str__(self) -> str:
        return format_atoms(self.atoms)

    def __contains__(self, atom) -> bool:
        return atom in self.atoms

    def __iter__(self):
        return iter(sorted(self.atoms, key=atom_key))

    def __len__(self) -> int:
        return len(self.atoms)


def format_atoms(atoms: Iterable[Atom]) -> str:
    return "{" + ", ".join(str(a) for a in sorted(atoms, key=atom_key)) + "}"


def body_true(rule: GroundRule, interpretation) -> bool:
    return rule.pos <= interpretation and rule.neg.isdisjoint(interpretation)


def is_model(program: Iterable[GroundRule], interpretation) -> bool:
    return all(not body_true(r, interpretation) or not r.head.isdisjoint(interpretation)
               for r in program)


def flp_reduct(program: Iterable[GroundRule], interpretation) -> list[GroundRule]:
    """Rules whose whole body holds in ``interpretation``, kept intact."""
    return [r for r in program if body_true(r, interpretation)]


def gl_reduct(program: Iterable[GroundRule], interpretation) -> list[GroundRule]:
    """Gelfond-Lifschitz reduct: drop blocked rules, strip negation."""
    return [GroundRule(r.head, r.pos, frozenset(), r.origin)
            for r in program if r.neg.isdisjoint(interpretation)]


def least_model(rules: Iterable[GroundRule], initial: Iterable[Atom] = ()) -> set | None:
    """Least model of a positive normal program containing ``initial``.

    Negative bodies are ignored.  ``None`` if a constraint fires.
    """
    rules = list(rules)
    model: set = set(initial)
    missing = [len(r.pos - model) for r in rules]
    waiting: dict = defaultdict(list)
    queue = []
    for i, r in enumerate(rules):
        if missing[i] == 0:
            queue.append(i)
        for a in r.pos - model:
            waiting[a].append(i)
    while queue:
        r = rules[queue.pop()]
        if not r.head:
            return None
        (a,) = r.head
        if a in model:
            continue
        model.add(a)
        for j in waiting.get(a, ()):
            missing[j] -= 1
            if missing[j] == 0:
                queue.append(j)
    return model


# --------------------------------------------------------------------------
# brute force

class _Clause(NamedTuple):
    true_any: tuple    # satisfied if one of these is true
    false_any: tuple   # ... or one of these is false


def _models(n: int, clauses: list[_Clause]) -> Iterator[list]:
    """All total assignments over ``range(n)`` satisfying ``clauses``."""
    assign: list = [None] * n
    by_var: dict = defaultdict(list)
    for c in clauses:
        for v in (*c.true_any, *c.false_any):
            by_var[v].append(c)

    def propagate(trail: list, todo: list) -> bool:
        while todo:
            for c in todo.pop():
                if any(assign[v] is True for v in c.true_any) or \
                        any(assign[v] is False for v in c.false_any):
                    continue
                free = [(v, True) for v in c.true_any if assign[v] is None]
                free += [(v, False) for v in c.false_any if assign[v] is None]
                if not free:
                    return False
                if len(free) == 1:
                    v, val = free[0]
                    assign[v] = val
                    trail.append(v)
                    todo.append(by_var[v])
        return True

    def undo(trail: list) -> None:
        for v in trail:
            assign[v] = None

    def search(i: int) -> Iterator[list]:
        while i < n and assign[i] is not None:
            i += 1
        if i == n:
            yield list(assign)
            return
        for val in (False, True):
            assign[i] = val
            trail = [i]
            if propagate(trail, [by_var[i]]):
                yield from search(i + 1)
            undo(trail)

    trail: list = []
    if propagate(trail, [[c for c in clauses]]):
        yield from search(0)
    undo(trail)


def _is_minimal(program: list[GroundRule], model: frozenset) -> bool:
    reduct = flp_reduct(program, model)
    if all(len(r.head) <= 1 for r in reduct):
        return least_model(reduct) == model
    order = sorted(model, key=atom_key)
    index = {a: i for i, a in enumerate(order)}
    clauses = [_Clause(tuple(index[a] for a in r.head if a in index),
                       tuple(index[a] for a in r.pos)) for r in reduct]
    clauses.append(_Clause((), tuple(range(len(order)))))
    return next(_models(len(order), clauses), None) is None


def is_answer_set(program: Iterable[GroundRule], interpretation: Iterable[Atom],
                  cap: int = DEFAULT_CAP) -> bool:
    program = list(program)
    a = frozenset(interpretation)
    if not is_model(program, a):
        return False
    if any(len(r.head) > 1 for r in program) and len(a) > cap:
        raise SolverCapabilityError(
            f"minimality check over {len(a)} atoms exceeds the cap of {cap}")
    return _is_minimal(program, a)


def enumerate_answer_sets(program: Iterable[GroundRule], n: int = 0, cap: int = DEFAULT_CAP,
                          atoms: Iterable[Atom] | None = None) -> list[AnswerSet]:
    """All answer sets (first ``n`` if ``n > 0``) in canonical order.

    The search space is ``atoms`` if given, otherwise the head atoms of
    ``program``; an answer set never contains anything else.
    """
    program = list(program)
    if atoms is None:
        atoms = set().union(*(r.head for r in program))
    order = sorted(set(atoms), key=atom_key)
    if len(order) > cap:
        raise SolverCapabilityError(
            f"{len(order)} candidate atoms exceed the cap of {cap}; "
            "use a stratified program or raise the cap")
    index = {a: i for i, a in enumerate(order)}
    clauses = []
    support: dict = defaultdict(list)
    nvars = len(order)
    for r in program:
        if not r.pos <= index.keys():
            continue  # body can never hold
        pos = tuple(index[a] for a in r.pos)
        neg = tuple(index[a] for a in r.neg if a in index)
        clauses.append(_Clause(tuple(index[a] for a in r.head if a in index) + neg, pos))
        # b <-> body(r); every true atom needs some true b among its rules
        b, nvars = nvars, nvars + 1
        clauses += [_Clause((p,), (b,)) for p in pos]
        clauses += [_Clause((), (b, q)) for q in neg]
        clauses.append(_Clause((b, *neg), pos))
        for a in r.head:
            if a in index:
                support[index[a]].append(b)
    clauses += [_Clause(tuple(support[i]), (i,)) for i in range(len(order))]
    found = []
    for assign in _models(nvars, clauses):
        model = frozenset(order[i] for i in range(len(order)) if assign[i])
        if _is_minimal(program, model):
            found.append(AnswerSet(model, BRUTE_FORCE))
    found.sort(key=AnswerSet.sort_key)
    return found[:n] if n > 0 else found


# --------------------------------------------------------------------------
# stratified programs

class Stratification(NamedTuple):
    strata: list[list[GroundRule]]
    constraints: list[GroundRule]


def stratify(program: Iterable[GroundRule]) -> Stratification | None:
    """Strata of a normal program without recursion through negation."""
    program = list(program)
    g = nx.DiGraph()
    negative = []
    for r in program:
        if len(r.head) > 1:
            return None
        for h in r.head:
            g.add_node(h.signature)
            for a in r.pos:
                g.add_edge(a.signature, h.signature)
            for a in r.neg:
                g.add_edge(a.signature, h.signature)
                negative.append((a.signature, h.signature))
    cond = nx.condensation(g)
    where = cond.graph["mapping"]
    if any(where[a] == where[b] for a, b in negative):
        return None
    position = {c: i for i, c in enumerate(nx.lexicographical_topological_sort(cond))}
    strata: list[list[GroundRule]] = [[] for _ in position]
    constraints = []
    for r in program:
        if r.head:
            (h,) = r.head
            strata[position[where[h.signature]]].append(r)
        else:
            constraints.append(r)
    return Stratification([s for s in strata if s], constraints)


def perfect_model(program: Iterable[GroundRule] | None, strata: Stratification) -> AnswerSet | None:
    """Iterated least models; ``None`` when a constraint is violated."""
    model: set = set()
    for stratum in strata.strata:
        # lower strata are final here, so negation is decided
        model = least_model((r for r in stratum if r.neg.isdisjoint(model)), model)
    if any(body_true(c, model) for c in strata.constraints):
        return None
    return AnswerSet(frozenset(model), STRATIFIED)


def solve(program: Iterable[GroundRule], n: int = 0, cap: int = DEFAULT_CAP) -> list[AnswerSet]:
    program = list(program)
    strata = stratify(program)
    if strata is not None:
        model = perfect_model(program, strata)
        return [] if model is None else [model]
    return enumerate_answer_sets(program, n, cap)
