"""Incremental grounding of disjunctive logic programs by overgrounding."""
from .embedding import (
    EmbeddingCandidate, EmbeddingVerdict, full_grounding, intersect, is_embedding_program,
    is_inst_closed, minimal_embedding,
)
from .ground import (
    GroundingError, GroundProgram, GroundRule, Grounder, HerbrandUniverse, ResourceLimitError,
    grnd_naive, inst, inst_fixpoint_naive, inst_fixpoint_seminaive, safety_order,
)
from .incremental import Session, ShotRecord
from .solver import AnswerSet, SolverCapabilityError, enumerate_answer_sets, solve
from .syntax import (
    Atom, Builtin, ParseError, Program, Rule, UnsafeRuleError, Variable, parse_facts,
    parse_program, parse_rules, print_rule,
)

__all__ = [
    "AnswerSet", "Atom", "Builtin", "EmbeddingCandidate", "EmbeddingVerdict", "GroundProgram",
    "GroundRule", "Grounder", "GroundingError", "HerbrandUniverse", "ParseError", "Program",
    "ResourceLimitError", "Rule", "Session", "ShotRecord", "SolverCapabilityError",
    "UnsafeRuleError", "Variable", "enumerate_answer_sets", "full_grounding", "grnd_naive",
    "inst", "inst_fixpoint_naive", "inst_fixpoint_seminaive", "intersect",
    "is_embedding_program", "is_inst_closed", "minimal_embedding", "parse_facts",
    "parse_program", "parse_rules", "print_rule", "safety_order", "solve",
]
