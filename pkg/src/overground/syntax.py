"""Abstract syntax, parser and printer for the input language.

The language is safe disjunctive Datalog with default negation plus
comparison builtins with integer arithmetic on their right-hand side::

    r(X,Z) | s(X,Z) :- e(X,Y), r(Y,Z).
    nextTile(X,Y) :- pacman(Px,Y), next(right), X = Px+1, tile(X,Y).

Constants are Python ``str`` (symbols, possibly quoted) or ``int``;
variables are :class:`Variable` instances.  Ground atoms are plain
:class:`Atom` tuples whose arguments are all constants.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Union

__all__ = [
    "Variable", "BinOp", "Atom", "Builtin", "Rule", "Program",
    "ParseError", "UnsafeRuleError", "FactInProgramError", "NonGroundFactError",
    "parse_program", "parse_facts", "parse_rules", "print_rule",
    "term_key", "atom_key", "unbound_variables",
    "INT_MIN", "INT_MAX",
]

INT_MIN = -(2 ** 63)
INT_MAX = 2 ** 63 - 1

RELOPS = ("=", "!=", "<", ">", "<=", ">=")
ARITH_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"Variable({self.name!r})"


Constant = Union[str, int]
Term = Union[Constant, Variable]


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self) -> str:
        return f"{_expr_str(self.left)}{self.op}{_expr_str(self.right)}"


Expr = Union[Term, BinOp]


def _expr_str(e: Expr) -> str:
    return str(e)


def term_key(t: Constant) -> tuple:
    """Total order on constants: integers first, then symbols."""
    if isinstance(t, int):
        return (0, t, "")
    return (1, 0, t)


class Atom(NamedTuple):
    predicate: str
    args: tuple = ()

    @property
    def signature(self) -> tuple[str, int]:
        return (self.predicate, len(self.args))

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(a, Variable) for a in self.args)

    def variables(self) -> set[Variable]:
        return {a for a in self.args if isinstance(a, Variable)}

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


def atom_key(a: Atom) -> tuple:
    return (a.predicate, len(a.args), tuple(term_key(t) for t in a.args))


@dataclass(frozen=True, slots=True)
class Builtin:
    op: str
    lhs: Term
    rhs: Expr

    def variables(self) -> set[Variable]:
        out = set()
        if isinstance(self.lhs, Variable):
            out.add(self.lhs)
        out |= expr_variables(self.rhs)
        return out

    @property
    def is_assignment_form(self) -> bool:
        return self.op == "=" and isinstance(self.lhs, Variable)

    @property
    def has_arithmetic(self) -> bool:
        return isinstance(self.rhs, BinOp)

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


def expr_variables(e: Expr) -> set[Variable]:
    if isinstance(e, Variable):
        return {e}
    if isinstance(e, BinOp):
        return expr_variables(e.left) | expr_variables(e.right)
    return set()


@dataclass(frozen=True)
class Rule:
    head: tuple[Atom, ...] = ()
    pos: tuple[Atom, ...] = ()
    neg: tuple[Atom, ...] = ()
    builtins: tuple[Builtin, ...] = ()
    source_id: str = field(default="", compare=False)

    @property
    def is_constraint(self) -> bool:
        return not self.head

    @property
    def is_fact(self) -> bool:
        return len(self.head) == 1 and not (self.pos or self.neg or self.builtins)

    def variables(self) -> set[Variable]:
        out: set[Variable] = set()
        for a in (*self.head, *self.pos, *self.neg):
            out |= a.variables()
        for b in self.builtins:
            out |= b.variables()
        return out

    def __str__(self) -> str:
        return print_rule(self)


@dataclass(frozen=True)
class Program:
    """A fact-free set of safe rules.

    ``int_bounds`` optionally declares the integer range used when the
    theoretical instantiation has to enumerate arithmetic values.
    """

    rules: tuple[Rule, ...] = ()
    int_bounds: tuple[int, int] | None = None

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def predicates(self) -> set[tuple[str, int]]:
        out = set()
        for r in self.rules:
            for a in (*r.head, *r.pos, *r.neg):
                out.add(a.signature)
        return out

    @property
    def has_arithmetic(self) -> bool:
        return any(b.has_arithmetic for r in self.rules for b in r.builtins)

    def constants(self) -> set[Constant]:
        out: set[Constant] = set()
        for r in self.rules:
            for a in (*r.head, *r.pos, *r.neg):
                out.update(t for t in a.args if not isinstance(t, Variable))
            for b in r.builtins:
                out.update(_expr_constants(b.lhs))
                out.update(_expr_constants(b.rhs))
        return out


def _expr_constants(e: Expr) -> set[Constant]:
    if isinstance(e, BinOp):
        return _expr_constants(e.left) | _expr_constants(e.right)
    if isinstance(e, Variable):
        return set()
    return {e}


# --------------------------------------------------------------------------
# errors

class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class UnsafeRuleError(ParseError):
    def __init__(self, rule: Rule, variables: Iterable[Variable], line: int = 0, col: int = 0):
        self.rule = rule
        self.variables = sorted(v.name for v in variables)
        super().__init__(
            f"unsafe variable(s) {', '.join(self.variables)} in rule '{print_rule(rule)}'",
            line, col)


class FactInProgramError(ParseError):
    pass


class NonGroundFactError(ParseError):
    pass


# --------------------------------------------------------------------------
# safety

def unbound_variables(rule: Rule) -> set[Variable]:
    """Variables not bound by a positive atom or a chain of assignments."""
    bound: set[Variable] = set()
    for a in rule.pos:
        bound |= a.variables()
    changed = True
    while changed:
        changed = False
        for b in rule.builtins:
            if b.is_assignment_form and b.lhs not in bound and expr_variables(b.rhs) <= bound:
                bound.add(b.lhs)
                changed = True
    return rule.variables() - bound


def _offending(rule: Rule, unbound: set[Variable]) -> set[Variable]:
    # prefer naming the root cause over an assignment target blocked by it
    targets = {b.lhs for b in rule.builtins if b.is_assignment_form}
    return (unbound - targets) or unbound


# --------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<if>:-)
  | (?P<relop>!=|<=|>=|=|<|>)
  | (?P<punct>[|,.()])
  | (?P<arith>[+\-*/])
  | (?P<int>\d+)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<var>_*[A-Z][A-Za-z0-9_']*)
  | (?P<anon>_(?![A-Za-z0-9_']))
  | (?P<ident>[a-z][A-Za-z0-9_']*)
""", re.VERBOSE)


class _Tok(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok_text = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, tok_text, line, pos - line_start + 1))
        nl = tok_text.count("\n")
        if nl:
            line += nl
            line_start = pos + tok_text.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# --------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.anon_seen = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.tok
        found = tok.text or "end of input"
        return ParseError(f"{msg}, found {found!r}", tok.line, tok.col)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "string":
            raise self.error(f"expected {text!r}")
        return self.advance()

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind not in ("string", "eof")

    # statements ------------------------------------------------------

    def statements(self) -> Iterator[tuple[list, list, _Tok]]:
        """Yield ``(head, body, first_token)`` per statement."""
        while self.tok.kind != "eof":
            start = self.tok
            head: list[Atom] = []
            body: list = []
            if not self.at(":-"):
                head.append(self.atom(allow_anon=False))
                while self.at("|"):
                    self.advance()
                    head.append(self.atom(allow_anon=False))
            if self.at(":-"):
                self.advance()
                body.append(self.literal())
                while self.at(","):
                    self.advance()
                    body.append(self.literal())
            self.expect(".")
            yield head, body, start

    def literal(self):
        t = self.tok
        if t.kind == "ident" and t.text == "not" and self.peek().kind == "ident":
            self.advance()
            return ("neg", self.atom(allow_anon=False))
        if t.kind == "ident" and self.peek().kind != "relop":
            return ("pos", self.atom(allow_anon=True))
        lhs = self.term(allow_anon=False)
        if self.tok.kind != "relop":
            raise self.error("expected comparison operator")
        op = self.advance().text
        return ("builtin", Builtin(op, lhs, self.expr()))

    def atom(self, allow_anon: bool) -> Atom:
        if self.tok.kind != "ident":
            raise self.error("expected atom")
        name = self.advance().text
        args: list = []
        if self.at("("):
            self.advance()
            args.append(self.term(allow_anon))
            while self.at(","):
                self.advance()
                args.append(self.term(allow_anon))
            self.expect(")")
        return Atom(name, tuple(args))

    def term(self, allow_anon: bool) -> Term:
        t = self.tok
        if t.kind == "ident" or t.kind == "string":
            self.advance()
            return t.text
        if t.kind == "int":
            self.advance()
            return _check_int(int(t.text), t)
        if t.kind == "arith" and t.text == "-" and self.peek().kind == "int":
            self.advance()
            return _check_int(-int(self.advance().text), t)
        if t.kind == "var":
            self.advance()
            return Variable(t.text)
        if t.kind == "anon":
            if not allow_anon:
                raise ParseError("anonymous variable only allowed in positive body atoms",
                                 t.line, t.col)
            self.advance()
            self.anon_seen += 1
            return _ANON
        raise self.error("expected term")

    # expr := product { (+|-) product } ; product := term { (*|/) term }
    def expr(self) -> Expr:
        left = self.product()
        while self.tok.kind == "arith" and self.tok.text in "+-":
            op = self.advance().text
            left = BinOp(op, left, self.product())
        return left

    def product(self) -> Expr:
        left: Expr = self.term(allow_anon=False)
        while self.tok.kind == "arith" and self.tok.text in "*/":
            op = self.advance().text
            left = BinOp(op, left, self.term(allow_anon=False))
        return left


_ANON = Variable("_")


def _check_int(v: int, tok: _Tok) -> int:
    if not INT_MIN <= v <= INT_MAX:
        raise ParseError("integer literal out of range", tok.line, tok.col)
    return v


def _rename_anonymous(pos: list[Atom], taken: set[str]) -> list[Atom]:
    counter = 0
    out = []
    for a in pos:
        args = []
        for t in a.args:
            if t is _ANON or t == _ANON:
                counter += 1
                while f"_V{counter}" in taken:
                    counter += 1
                t = Variable(f"_V{counter}")
            args.append(t)
        out.append(Atom(a.predicate, tuple(args)))
    return out


def _build_rule(head: list, body: list, index: int, start: _Tok) -> Rule:
    pos = [a for kind, a in body if kind == "pos"]
    neg = tuple(a for kind, a in body if kind == "neg")
    builtins = tuple(b for kind, b in body if kind == "builtin")
    if any(t == _ANON for a in pos for t in a.args):
        taken = {v.name for a in (*head, *pos, *neg) for v in a.variables()}
        taken |= {v.name for b in builtins for v in b.variables()}
        pos = _rename_anonymous(pos, taken)
    return Rule(tuple(head), tuple(pos), neg, builtins, source_id=f"r{index}")


def parse_rules(text: str, *, allow_facts: bool = False) -> list[Rule]:
    """Parse and safety-check every rule in ``text``."""
    p = _Parser(text)
    rules = []
    for head, body, start in p.statements():
        rule = _build_rule(head, body, len(rules), start)
        if rule.is_fact and not allow_facts:
            raise FactInProgramError(
                f"fact '{print_rule(rule)}' not allowed in a program; pass it as input facts",
                start.line, start.col)
        unbound = unbound_variables(rule)
        if unbound:
            raise UnsafeRuleError(rule, _offending(rule, unbound), start.line, start.col)
        rules.append(rule)
    return rules


def parse_program(text: str, int_bounds: tuple[int, int] | None = None) -> Program:
    return Program(tuple(parse_rules(text)), int_bounds)


def parse_facts(text: str) -> frozenset[Atom]:
    """Parse a fact file into a set of ground atoms."""
    p = _Parser(text)
    out: set[Atom] = set()
    for head, body, start in p.statements():
        if len(head) != 1 or body:
            raise ParseError("expected a ground atom terminated by '.'", start.line, start.col)
        atom = head[0]
        if not atom.is_ground:
            raise NonGroundFactError(f"fact '{atom}' is not ground", start.line, start.col)
        out.add(atom)
    return frozenset(out)


# --------------------------------------------------------------------------
# printer

def print_rule(rule) -> str:
    """Canonical text of a rule.

    Ground rules (anything with set-valued ``head``/``pos``/``neg``) print
    their atoms sorted; non-ground rules keep source order.
    """
    head, pos, neg = rule.head, rule.pos, rule.neg
    builtins = getattr(rule, "builtins", ())
    if isinstance(head, frozenset):
        head, pos, neg = (sorted(s, key=atom_key) for s in (head, pos, neg))
    body = [str(a) for a in pos] + [str(b) for b in builtins] + [f"not {a}" for a in neg]
    text = " | ".join(str(a) for a in head)
    if body:
        text = f"{text} :- {', '.join(body)}" if text else f":- {', '.join(body)}"
    return text + "."
