"""The imperative update language: parsing, printing, fuel-bounded evaluation.

Program grammar (``;`` associates left; ``fi``/``od`` close the compounds)::

    program   ::= command (';' command)*
    command   ::= 'skip'
                | 'add' assertion
                | 'del' assertion
                | 'if' guard 'then' program 'else' program 'fi'
                | 'while' guard 'do' program 'od'

    guard     ::= gconj ('|' gconj)*          -- '|' is sugar: a|b == !(!a & !b)
    gconj     ::= gunary ('&' gunary)*
    gunary    ::= '!' gunary | gatom
    gatom     ::= 'true' | 'false'
                | assertion                   -- a:C@U  or  (a,b):r@U
                | concept '<=' concept
                | '(' guard ')'

A guard-level ``!`` binds the whole atom that follows, so ``!A <= B`` negates
the subsumption; negate a concept on the left side with parentheses:
``(!A) <= B``. Disambiguation of ``(`` (role assertion vs. parenthesized
concept vs. parenthesized guard) uses bounded backtracking on the token
stream.

Evaluation is the standard big-step relation over knowledge states. One
fuel unit is spent per rule application, each loop unfolding included, so
non-terminating loops surface as a FuelExhausted outcome instead of hanging.
Guard evaluation cost is not fuel: the reasoner has its own node budget, and
a guard that exhausts it aborts the run with the partial trace attached.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ctxdl.concepts import (
    Not as ConceptNot,
    Signature,
    parse_concept_operand,
    print_concept,
    print_concept_operand,
)
from ctxdl.contexts import ContextPoset
from ctxdl.errors import BudgetExceededError, EvalAborted, ParseError
from ctxdl.kb import (
    Assertion,
    AssertGuard,
    FALSE_GUARD,
    Falsity,
    Guard,
    GuardAnd,
    GuardNot,
    KnowledgeState,
    SubsumeGuard,
    TRUE_GUARD,
    Truth,
    guard_sat,
    parse_assertion_stream,
    render_assertion,
)
from ctxdl.lexer import IDENT, TokenStream, tokenize
from ctxdl.reasoner import DEFAULT_NODE_BUDGET

DEFAULT_FUEL = 10_000


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Add:
    assertion: Assertion


@dataclass(frozen=True)
class Del:
    assertion: Assertion


@dataclass(frozen=True)
class Seq:
    first: "Program"
    second: "Program"


@dataclass(frozen=True)
class If:
    guard: Guard
    then_branch: "Program"
    else_branch: "Program"


@dataclass(frozen=True)
class While:
    guard: Guard
    body: "Program"


Program = Union[Skip, Add, Del, Seq, If, While]

SKIP = Skip()


@dataclass(frozen=True)
class TraceEntry:
    """One executed command or branch decision.

    Structural sequencing produces no entry; it spends fuel but there is
    nothing to observe about it.
    """

    rule: str  # skip | add | del | if-true | if-false | while-true | while-false
    guard: bool | None
    added: frozenset[Assertion]
    removed: frozenset[Assertion]


@dataclass(frozen=True)
class Terminated:
    """The run derived a final state; steps counts rule applications."""

    state: KnowledgeState
    steps: int


@dataclass(frozen=True)
class FuelExhausted:
    """The fuel ran out; state is the last one reached."""

    state: KnowledgeState
    steps: int


EvalOutcome = Union[Terminated, FuelExhausted]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_COMMAND_WORDS = frozenset({"skip", "add", "del", "if", "while"})


def parse_program(text: str, sig: Signature) -> Program:
    """Parse a program; every name is validated against the signature."""
    ts = TokenStream(tokenize(text))
    prog = _parse_program(ts, sig)
    ts.expect_end()
    return prog


def parse_guard(text: str, sig: Signature) -> Guard:
    ts = TokenStream(tokenize(text))
    g = _parse_guard(ts, sig)
    ts.expect_end()
    return g


def _parse_program(ts: TokenStream, sig: Signature) -> Program:
    prog = _parse_command(ts, sig)
    while ts.peek().kind == ";":
        ts.next()
        prog = Seq(prog, _parse_command(ts, sig))
    return prog


def _parse_command(ts: TokenStream, sig: Signature) -> Program:
    tok = ts.peek()
    if tok.kind == IDENT and tok.text in _COMMAND_WORDS:
        ts.next()
        if tok.text == "skip":
            return SKIP
        if tok.text == "add":
            return Add(parse_assertion_stream(ts, sig))
        if tok.text == "del":
            return Del(parse_assertion_stream(ts, sig))
        if tok.text == "if":
            guard = _parse_guard(ts, sig)
            ts.expect_word("then")
            then_branch = _parse_program(ts, sig)
            ts.expect_word("else")
            else_branch = _parse_program(ts, sig)
            ts.expect_word("fi")
            return If(guard, then_branch, else_branch)
        guard = _parse_guard(ts, sig)
        ts.expect_word("do")
        body = _parse_program(ts, sig)
        ts.expect_word("od")
        return While(guard, body)
    found = "end of input" if ts.at_end() else f"{tok.text!r}"
    raise ParseError(f"expected a command, found {found}", tok.line, tok.col)


def _parse_guard(ts: TokenStream, sig: Signature) -> Guard:
    left = _parse_gconj(ts, sig)
    while ts.peek().kind == "|":
        ts.next()
        right = _parse_gconj(ts, sig)
        left = GuardNot(GuardAnd(GuardNot(left), GuardNot(right)))
    return left


def _parse_gconj(ts: TokenStream, sig: Signature) -> Guard:
    left = _parse_gunary(ts, sig)
    while ts.peek().kind == "&":
        ts.next()
        left = GuardAnd(left, _parse_gunary(ts, sig))
    return left


def _parse_gunary(ts: TokenStream, sig: Signature) -> Guard:
    if ts.peek().kind == "!":
        ts.next()
        return GuardNot(_parse_gunary(ts, sig))
    return _parse_gatom(ts, sig)


def _parse_gatom(ts: TokenStream, sig: Signature) -> Guard:
    tok = ts.peek()
    if tok.kind == IDENT and tok.text == "true":
        ts.next()
        return TRUE_GUARD
    if tok.kind == IDENT and tok.text == "false":
        ts.next()
        return FALSE_GUARD
    if tok.kind == IDENT:
        if ts.peek(1).kind == ":":
            return AssertGuard(parse_assertion_stream(ts, sig))
        return _parse_subsume(ts, sig)
    if tok.kind == "(":
        if ts.peek(1).kind == IDENT and ts.peek(2).kind == ",":
            return AssertGuard(parse_assertion_stream(ts, sig))
        # Either a parenthesized concept opening a subsumption or a
        # parenthesized guard; try the subsumption reading first.
        mark = ts.pos
        try:
            return _parse_subsume(ts, sig)
        except ParseError:
            ts.restore(mark)
        ts.next()
        guard = _parse_guard(ts, sig)
        ts.expect(")")
        return guard
    found = "end of input" if tok.kind == "end" else f"{tok.text!r}"
    raise ParseError(f"expected a guard, found {found}", tok.line, tok.col)


def _parse_subsume(ts: TokenStream, sig: Signature) -> Guard:
    # Operands are unary-level concepts: '&' and '|' after the atom belong
    # to the guard; write '(A & B) <= C' to pass a compound concept.
    lhs = parse_concept_operand(ts, sig)
    ts.expect("<=")
    rhs = parse_concept_operand(ts, sig)
    return SubsumeGuard(lhs, rhs)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def print_program(prog: Program) -> str:
    """Render a program; parsing the result rebuilds the same tree for any
    parser-produced tree (sequencing prints flat and re-parses left-nested)."""
    if isinstance(prog, Skip):
        return "skip"
    if isinstance(prog, Add):
        return f"add {render_assertion(prog.assertion)}"
    if isinstance(prog, Del):
        return f"del {render_assertion(prog.assertion)}"
    if isinstance(prog, Seq):
        return f"{print_program(prog.first)}; {print_program(prog.second)}"
    if isinstance(prog, If):
        return (
            f"if {print_guard(prog.guard)} then {print_program(prog.then_branch)} "
            f"else {print_program(prog.else_branch)} fi"
        )
    if isinstance(prog, While):
        return f"while {print_guard(prog.guard)} do {print_program(prog.body)} od"
    raise TypeError(f"not a program: {prog!r}")


def print_guard(g: Guard) -> str:
    """Render a guard so that parsing the result rebuilds the same tree."""
    if isinstance(g, Truth):
        return "true"
    if isinstance(g, Falsity):
        return "false"
    if isinstance(g, AssertGuard):
        return render_assertion(g.assertion)
    if isinstance(g, SubsumeGuard):
        lhs = print_concept_operand(g.lhs)
        if isinstance(g.lhs, ConceptNot):
            # A leading '!' would re-parse as guard negation.
            lhs = f"({print_concept(g.lhs)})"
        return f"{lhs} <= {print_concept_operand(g.rhs)}"
    if isinstance(g, GuardNot):
        if isinstance(g.child, GuardAnd):
            return "!(" + print_guard(g.child) + ")"
        return "!" + print_guard(g.child)
    if isinstance(g, GuardAnd):
        left = print_guard(g.left)
        right = (
            "(" + print_guard(g.right) + ")"
            if isinstance(g.right, GuardAnd)
            else print_guard(g.right)
        )
        return f"{left} & {right}"
    raise TypeError(f"not a guard: {g!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class _Runner:
    def __init__(self, mode: str, poset: ContextPoset | None, budget: int):
        self.mode = mode
        self.poset = poset
        self.budget = budget
        self.trace: list[TraceEntry] = []

    def _guard(self, state: KnowledgeState, guard: Guard) -> bool:
        return guard_sat(state, guard, self.mode, self.poset, budget=self.budget)

    def _record(self, rule: str, guard: bool | None, added=frozenset(), removed=frozenset()):
        self.trace.append(TraceEntry(rule, guard, frozenset(added), frozenset(removed)))

    def exec(self, prog: Program, state: KnowledgeState, fuel: int) -> tuple[KnowledgeState, int, bool]:
        """Run *prog*; returns (state, fuel left, completed). A False flag
        means the fuel hit zero before the next rule application."""
        if fuel == 0:
            return state, 0, False
        if isinstance(prog, Skip):
            self._record("skip", None)
            return state, fuel - 1, True
        if isinstance(prog, Add):
            beta = prog.assertion
            added = frozenset() if beta in state.abox else frozenset({beta})
            self._record("add", None, added=added)
            return state.with_abox(state.abox | {beta}), fuel - 1, True
        if isinstance(prog, Del):
            beta = prog.assertion
            removed = frozenset({beta}) if beta in state.abox else frozenset()
            self._record("del", None, removed=removed)
            return state.with_abox(state.abox - {beta}), fuel - 1, True
        if isinstance(prog, Seq):
            state, fuel, done = self.exec(prog.first, state, fuel - 1)
            if not done:
                return state, 0, False
            return self.exec(prog.second, state, fuel)
        if isinstance(prog, If):
            taken = self._guard(state, prog.guard)
            self._record("if-true" if taken else "if-false", taken)
            branch = prog.then_branch if taken else prog.else_branch
            return self.exec(branch, state, fuel - 1)
        if isinstance(prog, While):
            while True:
                if fuel == 0:
                    return state, 0, False
                looping = self._guard(state, prog.guard)
                fuel -= 1
                if not looping:
                    self._record("while-false", False)
                    return state, fuel, True
                self._record("while-true", True)
                state, fuel, done = self.exec(prog.body, state, fuel)
                if not done:
                    return state, 0, False
        raise TypeError(f"not a program: {prog!r}")


def _run(
    prog: Program,
    state: KnowledgeState,
    fuel: int,
    mode: str,
    poset: ContextPoset | None,
    budget: int,
) -> tuple[EvalOutcome, tuple[TraceEntry, ...]]:
    if fuel < 1:
        raise ValueError("fuel must be at least 1")
    runner = _Runner(mode, poset, budget)
    try:
        final, left, done = runner.exec(prog, state, fuel)
    except BudgetExceededError as exc:
        raise EvalAborted(exc, tuple(runner.trace)) from exc
    steps = fuel - left
    outcome: EvalOutcome = Terminated(final, steps) if done else FuelExhausted(final, steps)
    return outcome, tuple(runner.trace)


def evaluate(
    prog: Program,
    state: KnowledgeState,
    fuel: int = DEFAULT_FUEL,
    mode: str = "literal",
    poset: ContextPoset | None = None,
    *,
    budget: int = DEFAULT_NODE_BUDGET,
) -> EvalOutcome:
    """Big-step evaluation under a fuel bound.

    FuelExhausted is a normal outcome, not an error. The inclusions of the
    state are never touched; only the fact set changes.
    """
    outcome, _ = _run(prog, state, fuel, mode, poset, budget)
    return outcome


def evaluate_trace(
    prog: Program,
    state: KnowledgeState,
    fuel: int = DEFAULT_FUEL,
    mode: str = "literal",
    poset: ContextPoset | None = None,
    *,
    budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[EvalOutcome, tuple[TraceEntry, ...]]:
    """Like evaluate, also returning the executed-rule trace in order."""
    return _run(prog, state, fuel, mode, poset, budget)
