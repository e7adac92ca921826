"""Local fact sections over the context poset: restriction, gluing, stability.

Each context carries a finite universe of context-free facts (the facts
expressible there); a section over a context is a subset of its universe.
Restricting a section to a subcontext intersects it with the subcontext's
universe. For that to compose along chains (restricting U->V->W must equal
restricting U->W), the universes have to interpolate: whenever W <= V <= U,
a fact expressible at both ends of the chain must be expressible in the
middle, i.e. universe(U) & universe(W) <= universe(V). Construction rejects
universe maps violating this, and the functor law then holds for every
constructible presheaf. Interpolation is weaker than monotonicity in either
direction: a fact may still be expressible in a subcontext but not in its
parent, or vice versa.

Gluing a compatible family over a covering looks for sections of the
target that restrict to every family member. Facts of the target universe
that some member universe can see are forced (present iff the member has
them, contradictions meaning no candidate exists at all); facts no member
can see are free, each subset of them giving one candidate. The result is
therefore Glued exactly when the family is compatible, every forced fact is
consistent, and no free facts remain; the brute-force check over all 2^n
subsets of the target universe agrees with this analysis and is kept in the
test suite as the independent oracle.

Overlaps of two covering members are their meet in the poset; a pair
without a meet imposes no compatibility constraint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from ctxdl.concepts import Signature
from ctxdl.contexts import ContextPoset, Covering, validate_covering
from ctxdl.errors import (
    RefinementChainError,
    SearchSpaceError,
    UnknownNameError,
)
from ctxdl.lexer import IDENT, TokenStream, tokenize

DEFAULT_MAX_UNIVERSE = 20


@dataclass(frozen=True)
class ConceptFact:
    individual: str
    concept: str


@dataclass(frozen=True)
class RoleFact:
    subject: str
    target: str
    role: str


Fact = Union[ConceptFact, RoleFact]


def render_fact(f: Fact) -> str:
    if isinstance(f, ConceptFact):
        return f"{f.individual}:{f.concept}"
    return f"({f.subject},{f.target}):{f.role}"


def parse_fact(text: str, sig: Signature) -> Fact:
    ts = TokenStream(tokenize(text))
    f = parse_fact_stream(ts, sig)
    ts.expect_end()
    return f


def parse_fact_stream(ts: TokenStream, sig: Signature) -> Fact:
    """Parse ``a:C`` or ``(a,b):r`` where C is an atomic concept name."""
    if ts.peek().kind == "(":
        ts.next()
        subject = _name(ts, sig.individual_names, "individual")
        ts.expect(",")
        target = _name(ts, sig.individual_names, "individual")
        ts.expect(")")
        ts.expect(":")
        role = _name(ts, sig.role_names, "role")
        return RoleFact(subject, target, role)
    individual = _name(ts, sig.individual_names, "individual")
    ts.expect(":")
    concept = _name(ts, sig.concept_names, "concept")
    return ConceptFact(individual, concept)


def parse_fact_list(text: str, sig: Signature) -> frozenset[Fact]:
    """Parse a comma-separated fact list; the empty string is the empty set."""
    ts = TokenStream(tokenize(text))
    facts: set[Fact] = set()
    if ts.at_end():
        return frozenset()
    facts.add(parse_fact_stream(ts, sig))
    while ts.peek().kind == ",":
        ts.next()
        facts.add(parse_fact_stream(ts, sig))
    ts.expect_end()
    return frozenset(facts)


def _name(ts: TokenStream, declared: frozenset[str], kind: str) -> str:
    tok = ts.expect(IDENT, f"a {kind} name")
    if tok.text not in declared:
        raise UnknownNameError(f"unknown {kind} name {tok.text!r}", tok.line, tok.col)
    return tok.text


@dataclass(frozen=True)
class Section:
    context: str
    facts: frozenset[Fact]


class Presheaf:
    """Per-context fact universes over a poset; restriction is intersection.

    Raises ValueError when the universes fail the interpolation condition
    (see the module docstring): such data would break restriction
    composition and is not a presheaf under this encoding.
    """

    def __init__(self, poset: ContextPoset, universes: Mapping[str, Iterable[Fact]]):
        self.poset = poset
        for ctx in universes:
            if ctx not in poset.contexts:
                raise UnknownNameError(f"unknown context {ctx!r}")
        self._universes = {ctx: frozenset(facts) for ctx, facts in universes.items()}
        self._check_interpolation()

    def _check_interpolation(self) -> None:
        for w, v in self.poset.leq_pairs:
            if w == v:
                continue
            for v2, u in self.poset.leq_pairs:
                if v2 != v or u == v:
                    continue
                stranded = (self.universe(u) & self.universe(w)) - self.universe(v)
                if stranded:
                    fact = sorted(render_fact(f) for f in stranded)[0]
                    raise ValueError(
                        f"universes are not a presheaf: {fact} is expressible at "
                        f"{u!r} and at {w!r} but not at {v!r} in between"
                    )

    def universe(self, ctx: str) -> frozenset[Fact]:
        if ctx not in self.poset.contexts:
            raise UnknownNameError(f"unknown context {ctx!r}")
        return self._universes.get(ctx, frozenset())

    def section(self, ctx: str, facts: Iterable[Fact]) -> Section:
        """Build a validated section: its facts must be in the universe."""
        fs = frozenset(facts)
        stray = fs - self.universe(ctx)
        if stray:
            names = ", ".join(sorted(render_fact(f) for f in stray))
            raise ValueError(f"facts not in the universe of {ctx!r}: {names}")
        return Section(ctx, fs)


def restrict(ps: Presheaf, s: Section, v: str) -> Section:
    """Restrict *s* down to subcontext *v*."""
    if not ps.poset.leq(v, s.context):
        raise ValueError(f"{v!r} is not a subcontext of {s.context!r}")
    return Section(v, s.facts & ps.universe(v))


@dataclass(frozen=True)
class Conflict:
    """Two family members disagree about *facts* visible at *overlap*."""

    left: str
    right: str
    overlap: str
    facts: frozenset[Fact]


def compatible(
    ps: Presheaf, family: list[Section], cov: Covering
) -> tuple[bool, tuple[Conflict, ...]]:
    """Pairwise agreement of the family on overlaps (meets of member pairs)."""
    _check_family(ps, family, cov)
    conflicts: list[Conflict] = []
    for i, si in enumerate(family):
        for sj in family[i + 1 :]:
            m = ps.poset.meet(si.context, sj.context)
            if m is None:
                continue
            ri = restrict(ps, si, m).facts
            rj = restrict(ps, sj, m).facts
            if ri != rj:
                conflicts.append(Conflict(si.context, sj.context, m, ri ^ rj))
    return not conflicts, tuple(conflicts)


@dataclass(frozen=True)
class Glued:
    section: Section


@dataclass(frozen=True)
class Incompatible:
    conflicts: tuple[Conflict, ...]


@dataclass(frozen=True)
class NonUnique:
    candidates: tuple[Section, ...]


GluingResult = Union[Glued, Incompatible, NonUnique]


def glue(
    ps: Presheaf,
    family: list[Section],
    cov: Covering,
    *,
    max_universe: int = DEFAULT_MAX_UNIVERSE,
) -> GluingResult:
    """Glue a family over a covering, checking existence and uniqueness.

    The candidates are exactly the sections of the target whose restriction
    to each member reproduces that member's section; zero, one, and several
    candidates map to Incompatible, Glued, and NonUnique (all candidates
    listed in canonical order).
    """
    _check_family(ps, family, cov)
    ok, conflicts = compatible(ps, family, cov)
    if not ok:
        return Incompatible(conflicts)
    target_univ = ps.universe(cov.target)
    if len(target_univ) > max_universe:
        raise SearchSpaceError(
            f"universe of {cov.target!r} has {len(target_univ)} facts, above the "
            f"uniqueness-check limit of {max_universe}"
        )
    forced_in: set[Fact] = set()
    forced_out: set[Fact] = set()
    first_seen: dict[Fact, str] = {}
    obstructions: list[Conflict] = []
    for sec in family:
        visible = ps.universe(sec.context)
        for f in sec.facts:
            if f not in target_univ:
                # No target section can restrict to contain f.
                obstructions.append(
                    Conflict(sec.context, cov.target, cov.target, frozenset({f}))
                )
            elif f in forced_out:
                obstructions.append(
                    Conflict(first_seen[f], sec.context, cov.target, frozenset({f}))
                )
            else:
                forced_in.add(f)
                first_seen.setdefault(f, sec.context)
        for f in (visible & target_univ) - sec.facts:
            if f in forced_in:
                obstructions.append(
                    Conflict(first_seen[f], sec.context, cov.target, frozenset({f}))
                )
            else:
                forced_out.add(f)
                first_seen.setdefault(f, sec.context)
    if obstructions:
        return Incompatible(tuple(obstructions))
    free = target_univ - forced_in - forced_out
    if not free:
        return Glued(Section(cov.target, frozenset(forced_in)))
    candidates = tuple(
        Section(cov.target, frozenset(forced_in) | extra)
        for extra in _subsets_in_order(free)
    )
    return NonUnique(candidates)


def _subsets_in_order(facts: Iterable[Fact]) -> list[frozenset[Fact]]:
    """All subsets, ordered by the ascending bit encoding over sorted facts."""
    ordered = sorted(facts, key=render_fact)
    out = []
    for code in range(1 << len(ordered)):
        out.append(frozenset(f for i, f in enumerate(ordered) if code >> i & 1))
    return out


def _check_family(ps: Presheaf, family: list[Section], cov: Covering) -> None:
    bad = validate_covering(ps.poset, cov)
    if bad:
        raise ValueError(f"invalid covering of {cov.target!r}: " + "; ".join(bad))
    got = [s.context for s in family]
    if sorted(got) != sorted(cov.members):
        raise ValueError(
            f"family contexts {sorted(got)} do not match covering members "
            f"{sorted(cov.members)}"
        )
    for s in family:
        stray = s.facts - ps.universe(s.context)
        if stray:
            names = ", ".join(sorted(render_fact(f) for f in stray))
            raise ValueError(f"section at {s.context!r} leaves its universe: {names}")


def stable_under_refinement(
    ps: Presheaf,
    s: Section,
    refinements: list[Covering],
    *,
    max_universe: int = DEFAULT_MAX_UNIVERSE,
) -> tuple[bool, Covering | None]:
    """Check that *s* survives every refinement stage.

    Coverings are processed in order; each must cover the section's own
    context or a member context reached by an earlier stage. The stage
    restricts the reached section to the members and requires the family to
    glue back to exactly that section; the first covering that fails is
    returned. A covering of an unreached context is a chain error.
    """
    reached: dict[str, Section] = {s.context: s}
    for cov in refinements:
        parent = reached.get(cov.target)
        if parent is None:
            raise RefinementChainError(
                f"covering of {cov.target!r} does not attach to any reached context"
            )
        family = [restrict(ps, parent, m) for m in cov.members]
        result = glue(ps, family, cov, max_universe=max_universe)
        if not (isinstance(result, Glued) and result.section == parent):
            return False, cov
        for member_section in family:
            ctx = member_section.context
            if ctx in reached and reached[ctx] != member_section:
                raise RefinementChainError(
                    f"context {ctx!r} reached twice with different sections"
                )
            reached[ctx] = member_section
    return True, None


def global_sections(
    ps: Presheaf,
    top: str,
    coverings: list[Covering],
    *,
    max_universe: int = DEFAULT_MAX_UNIVERSE,
) -> list[Section]:
    """All sections over *top* stable under the given refinement coverings.

    Enumerates every subset of the top universe in canonical order and
    filters by stable_under_refinement.
    """
    univ = ps.universe(top)
    if top not in ps.poset.contexts:
        raise UnknownNameError(f"unknown context {top!r}")
    if len(univ) > max_universe:
        raise SearchSpaceError(
            f"universe of {top!r} has {len(univ)} facts, above the limit of {max_universe}"
        )
    out = []
    for facts in _subsets_in_order(univ):
        section = Section(top, facts)
        ok, _ = stable_under_refinement(ps, section, coverings, max_universe=max_universe)
        if ok:
            out.append(section)
    return out


def chain_from(poset_coverings: list[Covering], top: str) -> list[Covering]:
    """The sub-list of coverings reachable from *top*, in declaration order.

    Convenience for drivers that keep one covering list per document: keeps
    exactly the coverings usable as refinement stages starting at *top*.
    """
    reached = {top}
    chain = []
    for cov in poset_coverings:
        if cov.target in reached:
            chain.append(cov)
            reached.update(cov.members)
    return chain
