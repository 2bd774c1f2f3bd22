import random

import pytest

import golden
from randprog import corpus, oracle_fixpoint, oracle_grnd
from overground.ground import (
    ArithmeticOverflowError, GroundingError, GroundProgram, Grounder,
    HerbrandUniverse, ResourceLimitError, grnd_naive, inst, inst_fixpoint_naive,
    inst_fixpoint_seminaive, safety_order,
)
from overground.syntax import Atom, Program, UnsafeRuleError, parse_facts, parse_program
from overground.bench import load_encoding

CORPUS = corpus(220)


def test_inst_on_first_facts():
    got = inst(golden.p0(), golden.facts(golden.F1_TEXT))
    assert got == golden.rules("""
        r(a,b) :- e(a,b), not ab(a).
        r(c,a) :- e(c,a), not ab(c).""")


def test_inst_empty_atoms():
    assert len(inst(golden.p0(), set())) == 0


def test_fixpoint_first_facts():
    expected = golden.rules(golden.G1_TEXT)
    f1 = golden.facts(golden.F1_TEXT)
    assert inst_fixpoint_naive(golden.p0(), f1) == expected
    assert inst_fixpoint_seminaive(golden.p0(), f1) == expected


def test_fixpoint_two_edges_is_minimal_embedding_rules():
    f = golden.facts(golden.F_AB_TEXT)
    expected = golden.rs(2, 4, 8, 12)
    assert inst_fixpoint_naive(golden.p0(), f) == expected
    assert inst_fixpoint_seminaive(golden.p0(), f) == expected


def test_fixpoint_excludes_facts():
    f = golden.facts(golden.F1_TEXT)
    assert not any(r.is_fact for r in inst_fixpoint_seminaive(golden.p0(), f))


def test_grnd_naive_two_constants():
    f = golden.facts(golden.F_AB_TEXT)
    got = grnd_naive(golden.p0(), HerbrandUniverse.from_inputs(golden.p0(), f))
    assert got == golden.rs(*range(1, 13))


def test_grnd_naive_one_constant():
    assert len(grnd_naive(golden.p0(), ["a"])) == 2
    assert len(grnd_naive(Program(), ["a", "b"])) == 0


def test_grnd_naive_cap():
    with pytest.raises(ResourceLimitError):
        grnd_naive(golden.p0(), "abcdefghij", max_instances=100)


def test_grnd_naive_needs_bounds_for_arithmetic():
    p = parse_program("p(Y) :- q(X), Y = X+1.")
    with pytest.raises(GroundingError):
        grnd_naive(p, [1, 2])
    bounded = parse_program("p(Y) :- q(X), Y = X+1.", int_bounds=(0, 3))
    got = grnd_naive(bounded, [])
    assert len(got) == 3  # X in 0..2


def test_empty_facts_ground_nothing():
    assert len(inst_fixpoint_seminaive(golden.p0(), set())) == 0


def test_chain_of_hundred():
    p = parse_program("a(Y) :- a(X), succ(X,Y).")
    facts = {Atom("succ", (i, i + 1)) for i in range(100)} | {Atom("a", (0,))}
    assert len(inst_fixpoint_seminaive(p, facts)) == 100


def test_bodyless_rules_always_present():
    p = parse_program("p | q.\nr :- not p.\ns(X) :- t(X).")
    got = inst_fixpoint_seminaive(p, set())
    assert {str(r) for r in got} == {"p | q.", "r :- not p."}


def test_no_simplification_of_negation():
    f = golden.facts(golden.F1_TEXT)
    for r in inst_fixpoint_seminaive(golden.p0(), f):
        if r.origin == "r0":
            (x,) = {a.args[0] for a in r.head}
            assert r.neg == {Atom("ab", (x,))}


def test_constraints_are_grounded():
    p = parse_program(":- p(X), q(X).")
    got = inst_fixpoint_seminaive(p, parse_facts("p(a). q(a). p(b)."))
    assert [str(r) for r in got] == [":- p(a), q(a)."]


# -- builtins ------------------------------------------------------------------

def test_arithmetic_and_comparisons():
    p = parse_program("""
        s(Y) :- n(X), Y = X*3-1, Y < 8.
        big(X) :- n(X), X >= 3.
        h(Z) :- n(X), n(Y), X != Y, Z = X/Y.
    """)
    got = {str(r) for r in inst_fixpoint_seminaive(p, parse_facts("n(2). n(3). n(-7)."))}
    assert "s(5) :- n(2)." in got and "s(-22) :- n(-7)." in got
    assert not any(s.startswith("s(8)") for s in got)
    assert "big(3) :- n(3)." in got
    # truncating division
    assert "h(-2) :- n(-7), n(3)." in got and "h(-3) :- n(-7), n(2)." in got


def test_division_by_zero_counted():
    p = parse_program("h(Z) :- n(X), m(Y), Z = X/Y.")
    g = Grounder(p)
    g.add_facts(parse_facts("n(4). m(0). m(2)."))
    assert {str(r) for r in g.ground} == {"h(2) :- m(2), n(4)."}
    assert g.diagnostics["division_by_zero"] == 1


def test_symbol_arithmetic_fails_substitution():
    p = parse_program("h(Z) :- n(X), Z = X+1.")
    g = Grounder(p)
    g.add_facts(parse_facts("n(a). n(1)."))
    assert {str(r) for r in g.ground} == {"h(2) :- n(1)."}
    assert g.diagnostics["non_integer_arithmetic"] == 1


def test_overflow_is_an_error():
    p = parse_program("h(Z) :- n(X), Z = X*X.")
    with pytest.raises(ArithmeticOverflowError):
        inst_fixpoint_seminaive(p, parse_facts("n(9223372036854775807)."))


def test_integers_order_before_symbols():
    p = parse_program("lt(X,Y) :- v(X), v(Y), X < Y.")
    got = {str(r) for r in inst_fixpoint_seminaive(p, parse_facts("v(1). v(a). v(b)."))}
    assert got == {"lt(1,a) :- v(1), v(a).", "lt(1,b) :- v(1), v(b).", "lt(a,b) :- v(a), v(b)."}


# -- safety order ----------------------------------------------------------------

def test_safety_order_next_tile():
    p = load_encoding("pacman")
    rule = next(r for r in p if r.head[0].predicate == "nextTile" and
                any(str(b) == "X = Px+1" for b in r.builtins))
    plan = [str(s) for s in safety_order(rule)]
    assert plan[1:] == ["pacman(Px,Y)", "X = Px+1", "tile(X,Y)"]
    assert plan[0] == "next(right)"


def test_safety_order_ground_rule_is_empty():
    (rule,) = parse_program("a :- b, not c.")
    assert [s.kind for s in safety_order(rule)] == ["atom"]
    (rule,) = parse_program("a :- not c.")
    assert safety_order(rule) == []


def test_safety_order_first_atom():
    (rule,) = parse_program("r(X,Z) | s(X,Z) :- e(X,Y), r(Y,Z).")
    assert str(safety_order(rule, first=1)[0]) == "r(Y,Z)"


def test_unsafe_detected_by_planner():
    from overground.syntax import Rule, Variable
    x = Variable("X")
    bad = Rule(head=(Atom("p", (x,)),), pos=(), neg=(Atom("q", (x,)),))
    with pytest.raises(UnsafeRuleError):
        safety_order(bad)


# -- ground program container --------------------------------------------------

def test_ground_program_dedup_and_heads():
    g = GroundProgram()
    r = golden.R[8]
    assert g.add(r) and not g.add(r)
    assert g.heads == {Atom("r", ("a", "b")), Atom("s", ("a", "b"))}
    assert len(g) == 1


def test_canonical_text_is_order_independent():
    rules = list(golden.rs(*range(1, 15)))
    a = GroundProgram(rules).to_text()
    random.Random(1).shuffle(rules)
    assert GroundProgram(rules).to_text() == a


# -- properties on the random corpus ---------------------------------------------

@pytest.mark.parametrize("case", CORPUS, ids=lambda c: f"seed{c.seed}")
def test_fixpoints_agree_with_oracle(case):
    p = case.program
    for f in case.shots:
        expected = oracle_fixpoint(case, f)
        assert inst_fixpoint_naive(p, f) == expected
        assert inst_fixpoint_seminaive(p, f) == expected


@pytest.mark.parametrize("case", CORPUS[:80], ids=lambda c: f"seed{c.seed}")
def test_grnd_naive_matches_oracle(case):
    assert grnd_naive(case.program, case.constants) == oracle_grnd(case)


@pytest.mark.parametrize("case", CORPUS[:80], ids=lambda c: f"seed{c.seed}")
def test_inst_is_monotone(case):
    rng = random.Random(case.seed)
    base = case.base
    small = {a for a in base if rng.random() < 0.3}
    large = small | {a for a in base if rng.random() < 0.3}
    assert inst(case.program, small) <= inst(case.program, large)


@pytest.mark.parametrize("case", CORPUS[:80], ids=lambda c: f"seed{c.seed}")
def test_order_independence(case):
    rng = random.Random(case.seed)
    rules = list(case.program.rules)
    facts = list(case.facts)
    rng.shuffle(rules)
    rng.shuffle(facts)
    shuffled = Program(tuple(rules))
    g = Grounder(shuffled)
    g.add_facts([])
    for a in facts:
        g.add_facts([a])
    assert g.ground.to_text() == inst_fixpoint_seminaive(case.program, case.facts).to_text()


@pytest.mark.parametrize("case", CORPUS[:80], ids=lambda c: f"seed{c.seed}")
def test_fixpoint_is_closed(case):
    f = case.facts
    r = inst_fixpoint_seminaive(case.program, f)
    assert inst(case.program, r.heads | f) <= r
