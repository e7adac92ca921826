"""Contextual assertions, knowledge states, saturation, and guard evaluation.

Assertions are written ``a : C @ U`` (individual, concept, context) and
``(a, b) : r @ U`` (role between two individuals, context). The canonical
rendering drops the optional whitespace: ``a:C@U`` / ``(a,b):r@U``; sorting
those strings gives the canonical order used by state dumps and digests.

Guard satisfaction has two modes. ``literal`` checks raw membership of the
asserted fact in the current fact set. ``saturated`` additionally accepts a
fact at context V whenever it is asserted at some supercontext U >= V, i.e.
membership in the downward-closed saturation. Saturation is computed on
demand and never stored, so deletion stays plain set difference.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Iterable, Union

from ctxdl.concepts import (
    ConceptExpr,
    Signature,
    parse_concept_stream,
    print_concept,
    validate_concept,
)
from ctxdl.contexts import ContextPoset
from ctxdl.errors import UnknownNameError
from ctxdl.lexer import IDENT, TokenStream, tokenize
from ctxdl.reasoner import DEFAULT_NODE_BUDGET, TBox, subsumes

GUARD_MODES = ("literal", "saturated")


@dataclass(frozen=True)
class ConceptAssertion:
    individual: str
    concept: ConceptExpr
    context: str


@dataclass(frozen=True)
class RoleAssertion:
    subject: str
    target: str
    role: str
    context: str


Assertion = Union[ConceptAssertion, RoleAssertion]


@dataclass(frozen=True)
class KnowledgeState:
    """The pair a program run transforms: fixed inclusions, current assertions."""

    tbox: TBox
    abox: frozenset[Assertion]

    def with_abox(self, abox: Iterable[Assertion]) -> "KnowledgeState":
        return replace(self, abox=frozenset(abox))


def render_assertion(a: Assertion) -> str:
    if isinstance(a, ConceptAssertion):
        return f"{a.individual}:{print_concept(a.concept)}@{a.context}"
    return f"({a.subject},{a.target}):{a.role}@{a.context}"


def parse_assertion(text: str, sig: Signature) -> Assertion:
    """Parse one assertion; contexts are validated against the signature."""
    ts = TokenStream(tokenize(text))
    a = parse_assertion_stream(ts, sig)
    ts.expect_end()
    return a


def parse_assertion_stream(ts: TokenStream, sig: Signature) -> Assertion:
    if ts.peek().kind == "(":
        ts.next()
        subject = _individual(ts, sig)
        ts.expect(",")
        target = _individual(ts, sig)
        ts.expect(")")
        ts.expect(":")
        role = ts.expect(IDENT, "a role name")
        if role.text not in sig.role_names:
            raise UnknownNameError(f"unknown role name {role.text!r}", role.line, role.col)
        ts.expect("@")
        return RoleAssertion(subject, target, role.text, _context(ts, sig))
    individual = _individual(ts, sig)
    ts.expect(":")
    concept = parse_concept_stream(ts, sig)
    ts.expect("@")
    return ConceptAssertion(individual, concept, _context(ts, sig))


def _individual(ts: TokenStream, sig: Signature) -> str:
    tok = ts.expect(IDENT, "an individual name")
    if tok.text not in sig.individual_names:
        raise UnknownNameError(f"unknown individual name {tok.text!r}", tok.line, tok.col)
    return tok.text


def _context(ts: TokenStream, sig: Signature) -> str:
    tok = ts.expect(IDENT, "a context name")
    if tok.text not in sig.context_names:
        raise UnknownNameError(f"unknown context name {tok.text!r}", tok.line, tok.col)
    return tok.text


def validate_assertion(a: Assertion, sig: Signature) -> None:
    if isinstance(a, ConceptAssertion):
        if a.individual not in sig.individual_names:
            raise UnknownNameError(f"unknown individual name {a.individual!r}")
        validate_concept(a.concept, sig)
    else:
        for name in (a.subject, a.target):
            if name not in sig.individual_names:
                raise UnknownNameError(f"unknown individual name {name!r}")
        if a.role not in sig.role_names:
            raise UnknownNameError(f"unknown role name {a.role!r}")
    if a.context not in sig.context_names:
        raise UnknownNameError(f"unknown context name {a.context!r}")


def canonical_abox(abox: Iterable[Assertion]) -> list[str]:
    """Canonical sorted rendering, one string per assertion."""
    return sorted(render_assertion(a) for a in abox)


def abox_digest(abox: Iterable[Assertion]) -> str:
    """One-line digest of the fact set: canonical renderings joined by ';'."""
    return ";".join(canonical_abox(abox))


def signature_digest(sig: Signature) -> str:
    """Hex fingerprint of the signature, used by state-dump headers."""
    text = "|".join(
        kind + ":" + ",".join(sorted(names))
        for kind, names in (
            ("concepts", sig.concept_names),
            ("roles", sig.role_names),
            ("individuals", sig.individual_names),
            ("contexts", sig.context_names),
        )
    )
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def saturate(abox: Iterable[Assertion], poset: ContextPoset) -> frozenset[Assertion]:
    """Close a fact set downward: a fact at U also holds at every V <= U.

    One pass suffices because the poset order is already transitively closed;
    the result is a fixed point of further saturation.
    """
    out: set[Assertion] = set()
    for a in abox:
        out.add(a)
        for v, u in poset.leq_pairs:
            if u == a.context and v != u:
                out.add(replace(a, context=v))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Guards
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Truth:
    pass


@dataclass(frozen=True)
class Falsity:
    pass


@dataclass(frozen=True)
class AssertGuard:
    assertion: Assertion


@dataclass(frozen=True)
class SubsumeGuard:
    lhs: ConceptExpr
    rhs: ConceptExpr


@dataclass(frozen=True)
class GuardNot:
    child: "Guard"


@dataclass(frozen=True)
class GuardAnd:
    left: "Guard"
    right: "Guard"


Guard = Union[Truth, Falsity, AssertGuard, SubsumeGuard, GuardNot, GuardAnd]

TRUE_GUARD = Truth()
FALSE_GUARD = Falsity()


def _holds_saturated(abox: frozenset[Assertion], wanted: Assertion, poset: ContextPoset) -> bool:
    # Membership in saturate(abox) without materializing the closure.
    for a in abox:
        if type(a) is not type(wanted):
            continue
        if replace(a, context=wanted.context) == wanted and poset.leq(wanted.context, a.context):
            return True
    return False


def guard_sat(
    state: KnowledgeState,
    guard: Guard,
    mode: str = "literal",
    poset: ContextPoset | None = None,
    *,
    budget: int = DEFAULT_NODE_BUDGET,
) -> bool:
    """Decide whether *state* satisfies *guard*.

    Assertion atoms test membership (literal mode) or saturated membership
    (saturated mode, which requires the context poset). Subsumption atoms
    consult the reasoner and may raise BudgetExceededError.
    """
    if mode not in GUARD_MODES:
        raise ValueError(f"unknown guard mode {mode!r}")
    if mode == "saturated" and poset is None:
        raise ValueError("saturated guard mode requires a context poset")
    if isinstance(guard, Truth):
        return True
    if isinstance(guard, Falsity):
        return False
    if isinstance(guard, AssertGuard):
        if mode == "literal":
            return guard.assertion in state.abox
        return _holds_saturated(state.abox, guard.assertion, poset)
    if isinstance(guard, SubsumeGuard):
        return subsumes(state.tbox, guard.lhs, guard.rhs, budget=budget)
    if isinstance(guard, GuardNot):
        return not guard_sat(state, guard.child, mode, poset, budget=budget)
    if isinstance(guard, GuardAnd):
        return guard_sat(state, guard.left, mode, poset, budget=budget) and guard_sat(
            state, guard.right, mode, poset, budget=budget
        )
    raise TypeError(f"not a guard: {guard!r}")
