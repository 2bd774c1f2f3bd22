"""Embedding programs: ground programs that are safe replacements for grnd(P) | F.

A set ``R`` of ground rules taken from ``grnd(P) | F`` embeds a rule ``r``
when either some positive body atom of ``r`` is not a head in ``R`` or
``r`` itself is in ``R``.  ``R`` is an embedding program when it embeds
every rule of ``grnd(P) | F``.  The least such set is the ``Inst``
fixpoint together with the facts.
"""
from __future__ import annotations

import random
from typing import Iterable, Iterator, NamedTuple

from .ground import (
    DEFAULT_MAX_INSTANCES, GroundRule, HerbrandUniverse, _ground_instance,
    _match_naive, _solve_builtins, _Undefined, facts_as_rules, grnd_naive,
    inst, inst_fixpoint_seminaive, rule_key,
)
from .syntax import Atom, Program, Rule


class NotAnInstanceError(ValueError):
    pass


class ProvenanceMismatchError(ValueError):
    pass


def is_instance_of(ground_rule: GroundRule, rule: Rule) -> bool:
    """True if some substitution turns ``rule`` into ``ground_rule``."""
    if len(ground_rule.head) > len(rule.head) or len(ground_rule.pos) > len(rule.pos):
        return False
    by_sig: dict = {}
    for a in ground_rule.pos:
        by_sig.setdefault(a.signature, []).append(a)
    for binding in _match_naive(rule.pos, by_sig, {}):
        try:
            full = _solve_builtins(rule.builtins, binding, rule)
        except _Undefined:
            continue
        if full is not None and _ground_instance(rule, full) == ground_rule:
            return True
    return False


class EmbeddingCandidate:
    """A set of rules from ``grnd(P) | F``, remembering ``(P, F)``."""

    def __init__(self, rules: Iterable[GroundRule], program: Program, facts: Iterable[Atom],
                 *, check: bool = True):
        self.rules = frozenset(rules)
        self.program = program
        self.facts = frozenset(facts)
        if check:
            for r in self.rules:
                if r.is_fact and next(iter(r.head)) in self.facts:
                    continue
                if not any(is_instance_of(r, pr) for pr in program):
                    raise NotAnInstanceError(f"'{r}' is neither a fact nor an instance of a program rule")
        self.heads = frozenset().union(*(r.head for r in self.rules))

    def __iter__(self) -> Iterator[GroundRule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __contains__(self, rule) -> bool:
        return rule in self.rules

    def __eq__(self, other) -> bool:
        if isinstance(other, EmbeddingCandidate):
            return self.rules == other.rules
        if isinstance(other, (set, frozenset)):
            return self.rules == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.rules)

    def __le__(self, other) -> bool:
        return self.rules <= set(other)

    def __and__(self, other: "EmbeddingCandidate") -> "EmbeddingCandidate":
        return intersect(self, other)

    def __repr__(self) -> str:
        return f"EmbeddingCandidate({len(self)} rules)"

    def sorted(self) -> list[GroundRule]:
        return sorted(self.rules, key=rule_key)


def embeds_body(candidate: EmbeddingCandidate, rule: GroundRule) -> bool:
    return rule.pos <= candidate.heads


def embeds_head(candidate: EmbeddingCandidate, rule: GroundRule) -> bool:
    return rule in candidate.rules


def embeds_rule(candidate: EmbeddingCandidate, rule: GroundRule) -> bool:
    return not embeds_body(candidate, rule) or embeds_head(candidate, rule)


class EmbeddingVerdict(NamedTuple):
    is_embedding: bool
    witness: GroundRule | None = None

    def __bool__(self) -> bool:
        return self.is_embedding


def full_grounding(program: Program, facts: Iterable[Atom],
                   max_instances: int = DEFAULT_MAX_INSTANCES) -> EmbeddingCandidate:
    """``grnd(P) | F`` over the constants of ``P`` and ``F``."""
    facts = frozenset(facts)
    universe = HerbrandUniverse.from_inputs(program, facts)
    rules = list(grnd_naive(program, universe, max_instances)) + facts_as_rules(facts)
    return EmbeddingCandidate(rules, program, facts, check=False)


def is_embedding_program(candidate: EmbeddingCandidate, program: Program | None = None,
                         facts: Iterable[Atom] | None = None,
                         max_instances: int = DEFAULT_MAX_INSTANCES) -> EmbeddingVerdict:
    """Check every rule of ``grnd(P) | F``; the witness is the first failure
    in canonical rule order."""
    program = candidate.program if program is None else program
    facts = candidate.facts if facts is None else frozenset(facts)
    everything = full_grounding(program, facts, max_instances)
    for r in everything.sorted():
        if not embeds_rule(candidate, r):
            return EmbeddingVerdict(False, r)
    return EmbeddingVerdict(True)


def is_inst_closed(candidate: EmbeddingCandidate) -> bool:
    """``R >= Inst(P, Heads(R)) | F``; equivalent to being an embedding."""
    if not all(GroundRule.fact(a) in candidate.rules for a in candidate.facts):
        return False
    return all(r in candidate.rules for r in inst(candidate.program, candidate.heads))


def minimal_embedding(program: Program, facts: Iterable[Atom],
                      max_rules: int | None = None) -> EmbeddingCandidate:
    facts = frozenset(facts)
    rules = list(inst_fixpoint_seminaive(program, facts, max_rules)) + facts_as_rules(facts)
    return EmbeddingCandidate(rules, program, facts, check=False)


def intersect(first: EmbeddingCandidate, second: EmbeddingCandidate) -> EmbeddingCandidate:
    if first.program != second.program or first.facts != second.facts:
        raise ProvenanceMismatchError("candidates belong to different (program, facts) pairs")
    return EmbeddingCandidate(first.rules & second.rules, first.program, first.facts, check=False)


def sample_embedding(program: Program, facts: Iterable[Atom], rng: random.Random,
                     additions: int = 3) -> EmbeddingCandidate:
    """Random embedding grown from the minimal one.

    Each round adds one random rule of ``grnd(P)`` and then every rule
    whose positive body became embedded, until nothing changes.
    """
    facts = frozenset(facts)
    everything = full_grounding(program, facts).sorted()
    current = set(minimal_embedding(program, facts).rules)
    for _ in range(additions):
        outside = [r for r in everything if r not in current]
        if not outside:
            break
        current.add(rng.choice(outside))
        heads = set().union(*(r.head for r in current))
        changed = True
        while changed:
            changed = False
            for r in everything:
                if r not in current and r.pos <= heads:
                    current.add(r)
                    heads |= r.head
                    changed = True
    return EmbeddingCandidate(current, program, facts, check=False)
