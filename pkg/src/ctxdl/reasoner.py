"""Concept satisfiability and subsumption, plus a brute-force model oracle.

The decision procedure is a tableau with the usual four expansion rules.
Axioms ``C <= D`` are internalized as the global constraint ``!C | D`` added
to every node label. Termination comes from subset blocking: a node whose
saturated label is contained in an ancestor's label is not expanded further
(sound here because the language has no inverse roles, so the blocked node
can be folded onto its blocker when reading off a model).

Determinism: labels are processed in insertion order, disjunctions explore
the left branch first, and successors are expanded in label order, so
repeated calls return identical results and spend identical budgets.

The brute-force side (``enumerate_models``, ``find_witness``) exists as an
independent check on the tableau; it shares nothing with it but the concept
semantics, evaluated directly over explicit finite interpretations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from ctxdl.concepts import (
    And,
    Atomic,
    Bot,
    ConceptExpr,
    Exists,
    Forall,
    Not,
    Or,
    Signature,
    Top,
    nnf,
)
from ctxdl.errors import BudgetExceededError, SearchSpaceError, UnknownNameError

DEFAULT_NODE_BUDGET = 100_000
DEFAULT_MAX_BITS = 24


@dataclass(frozen=True)
class TBox:
    """A finite list of concept inclusions (lhs <= rhs).

    Duplicates collapse under set semantics; first-occurrence order is kept
    so derived data (internalized constraints, model enumeration) is stable.
    """

    inclusions: tuple[tuple[ConceptExpr, ConceptExpr], ...]

    def __init__(self, inclusions: Iterable[tuple[ConceptExpr, ConceptExpr]] = ()):
        object.__setattr__(self, "inclusions", tuple(dict.fromkeys(inclusions)))


EMPTY_TBOX = TBox()


@dataclass(frozen=True, eq=True)
class FiniteModel:
    """An explicit interpretation over a domain of small positive integers."""

    domain: frozenset[int]
    concept_ext: Mapping[str, frozenset[int]]
    role_ext: Mapping[str, frozenset[tuple[int, int]]]


# ---------------------------------------------------------------------------
# Tableau
# ---------------------------------------------------------------------------


class _Tableau:
    def __init__(self, constraints: tuple[ConceptExpr, ...], budget: int):
        self.constraints = constraints
        self.budget = budget
        self.spent = 0

    def _spend(self) -> None:
        self.spent += 1
        if self.spent > self.budget:
            raise BudgetExceededError(self.budget)

    def sat(self, label: list[ConceptExpr], ancestors: tuple[frozenset, ...]) -> bool:
        self._spend()
        items: list[ConceptExpr] = []
        present: set[ConceptExpr] = set()
        for c in label:
            if not _add(c, items, present):
                return False
        return self._expand(items, present, 0, ancestors)

    def _expand(
        self,
        items: list[ConceptExpr],
        present: set[ConceptExpr],
        i: int,
        ancestors: tuple[frozenset, ...],
    ) -> bool:
        while i < len(items):
            c = items[i]
            i += 1
            if isinstance(c, And):
                self._spend()
                if not (_add(c.left, items, present) and _add(c.right, items, present)):
                    return False
            elif isinstance(c, Or):
                if c.left in present or c.right in present:
                    continue
                for branch in (c.left, c.right):
                    self._spend()
                    forked_items = items[:]
                    forked_present = set(present)
                    if _add(branch, forked_items, forked_present) and self._expand(
                        forked_items, forked_present, i, ancestors
                    ):
                        return True
                return False
        # Propositionally saturated: block or expand existential successors.
        snapshot = frozenset(present)
        if any(snapshot <= ancestor for ancestor in ancestors):
            return True
        deeper = ancestors + (snapshot,)
        for c in items:
            if isinstance(c, Exists):
                child = [c.child]
                child.extend(d.child for d in items if isinstance(d, Forall) and d.role == c.role)
                child.extend(self.constraints)
                if not self.sat(child, deeper):
                    return False
        return True


def _add(c: ConceptExpr, items: list[ConceptExpr], present: set[ConceptExpr]) -> bool:
    """Insert a concept into a node label; False signals a clash."""
    if isinstance(c, Top):
        return True
    if isinstance(c, Bot):
        return False
    if c in present:
        return True
    if isinstance(c, Atomic) and Not(c) in present:
        return False
    if isinstance(c, Not) and c.child in present:
        return False
    present.add(c)
    items.append(c)
    return True


def internalized_constraints(tbox: TBox) -> tuple[ConceptExpr, ...]:
    """The per-node constraints equivalent to the inclusions: nnf(!lhs | rhs)."""
    return tuple(dict.fromkeys(nnf(Or(Not(lhs), rhs)) for lhs, rhs in tbox.inclusions))


def is_satisfiable(tbox: TBox, concept: ConceptExpr, *, budget: int = DEFAULT_NODE_BUDGET) -> bool:
    """Decide whether *concept* can have a nonempty extension in a model of *tbox*.

    Raises BudgetExceededError when the node budget runs out; the exception
    is the third outcome, never folded into True or False.
    """
    constraints = internalized_constraints(tbox)
    tableau = _Tableau(constraints, budget)
    return tableau.sat([nnf(concept), *constraints], ())


def subsumes(tbox: TBox, c: ConceptExpr, d: ConceptExpr, *, budget: int = DEFAULT_NODE_BUDGET) -> bool:
    """True iff every model of *tbox* interprets *c* within *d*."""
    return not is_satisfiable(tbox, And(c, Not(d)), budget=budget)


# ---------------------------------------------------------------------------
# Finite models: evaluation, enumeration, witness search
# ---------------------------------------------------------------------------


def extension(model: FiniteModel, c: ConceptExpr) -> frozenset[int]:
    """The extension of *c* in *model* under the standard semantics."""
    if isinstance(c, Top):
        return model.domain
    if isinstance(c, Bot):
        return frozenset()
    if isinstance(c, Atomic):
        if c.name not in model.concept_ext:
            raise UnknownNameError(f"model does not interpret concept {c.name!r}")
        return model.concept_ext[c.name]
    if isinstance(c, Not):
        return model.domain - extension(model, c.child)
    if isinstance(c, And):
        return extension(model, c.left) & extension(model, c.right)
    if isinstance(c, Or):
        return extension(model, c.left) | extension(model, c.right)
    if isinstance(c, (Exists, Forall)):
        if c.role not in model.role_ext:
            raise UnknownNameError(f"model does not interpret role {c.role!r}")
        pairs = model.role_ext[c.role]
        child = extension(model, c.child)
        if isinstance(c, Exists):
            return frozenset(x for x in model.domain if any(y in child for (a, y) in pairs if a == x))
        return frozenset(x for x in model.domain if all(y in child for (a, y) in pairs if a == x))
    raise TypeError(f"not a concept expression: {c!r}")


def satisfies_tbox(model: FiniteModel, tbox: TBox) -> bool:
    """True iff every inclusion of *tbox* holds in *model*."""
    return all(extension(model, lhs) <= extension(model, rhs) for lhs, rhs in tbox.inclusions)


def check_interpretation(
    model: FiniteModel, tbox: TBox, concept: ConceptExpr
) -> tuple[bool, frozenset[int]]:
    """Evaluate *concept* in *model* and check every inclusion of *tbox*."""
    return satisfies_tbox(model, tbox), extension(model, concept)


def _bit_layout(sig: Signature, k: int) -> tuple[list[str], list[str], dict[str, int], int]:
    """Fixed bit positions for extensions over the domain {1..k}.

    Concept names (sorted) come first, k bits each; role names (sorted)
    follow, k*k bits each. Concept bit for element i: offset + (i-1).
    Role bit for pair (i, j): offset + (i-1)*k + (j-1).
    """
    concepts = sorted(sig.concept_names)
    roles = sorted(sig.role_names)
    offsets: dict[str, int] = {}
    pos = 0
    for name in concepts:
        offsets[name] = pos
        pos += k
    for name in roles:
        offsets[name] = pos
        pos += k * k
    return concepts, roles, offsets, pos


def _decode_model(code: int, sig: Signature, k: int) -> FiniteModel:
    concepts, roles, offsets, _ = _bit_layout(sig, k)
    domain = frozenset(range(1, k + 1))
    concept_ext = {
        name: frozenset(i for i in range(1, k + 1) if code >> (offsets[name] + i - 1) & 1)
        for name in concepts
    }
    role_ext = {
        name: frozenset(
            (i, j)
            for i in range(1, k + 1)
            for j in range(1, k + 1)
            if code >> (offsets[name] + (i - 1) * k + (j - 1)) & 1
        )
        for name in roles
    }
    return FiniteModel(domain, concept_ext, role_ext)


def _guard_bits(sig: Signature, max_size: int, max_bits: int) -> None:
    bits = len(sig.concept_names) * max_size + len(sig.role_names) * max_size * max_size
    if bits > max_bits:
        raise SearchSpaceError(
            f"enumeration space needs {bits} extension bits for domain size "
            f"{max_size}, above the limit of {max_bits}"
        )


def enumerate_models(
    sig: Signature, tbox: TBox, max_size: int, *, max_bits: int = DEFAULT_MAX_BITS
) -> Iterator[FiniteModel]:
    """Yield every model of *tbox* over domains {1..k}, k = 1..max_size.

    Order is deterministic: domain size ascending, then the integer encoding
    of the extension bits ascending (see _bit_layout). Intended for
    desk-scale signatures; the bit guard refuses larger spaces.
    """
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    _guard_bits(sig, max_size, max_bits)
    for k in range(1, max_size + 1):
        _, _, _, bits = _bit_layout(sig, k)
        for code in range(1 << bits):
            model = _decode_model(code, sig, k)
            if satisfies_tbox(model, tbox):
                yield model


def _vector_extension(
    c: ConceptExpr,
    codes: np.ndarray,
    offsets: dict[str, int],
    k: int,
) -> np.ndarray:
    """Per-model k-bit extension masks of *c*, vectorized over *codes*."""
    dt = codes.dtype.type
    full = dt((1 << k) - 1)
    if isinstance(c, Top):
        return np.full(codes.shape, full, dtype=codes.dtype)
    if isinstance(c, Bot):
        return np.zeros(codes.shape, dtype=codes.dtype)
    if isinstance(c, Atomic):
        if c.name not in offsets:
            raise UnknownNameError(f"signature does not declare concept {c.name!r}")
        return (codes >> dt(offsets[c.name])) & full
    if isinstance(c, Not):
        return _vector_extension(c.child, codes, offsets, k) ^ full
    if isinstance(c, And):
        return _vector_extension(c.left, codes, offsets, k) & _vector_extension(
            c.right, codes, offsets, k
        )
    if isinstance(c, Or):
        return _vector_extension(c.left, codes, offsets, k) | _vector_extension(
            c.right, codes, offsets, k
        )
    if isinstance(c, (Exists, Forall)):
        if c.role not in offsets:
            raise UnknownNameError(f"signature does not declare role {c.role!r}")
        child = _vector_extension(c.child, codes, offsets, k)
        rbits = codes >> dt(offsets[c.role])
        result = np.zeros(codes.shape, dtype=codes.dtype)
        for i in range(k):
            row = (rbits >> dt(k * i)) & full
            if isinstance(c, Exists):
                hit = (row & child) != 0
            else:
                hit = (row & (child ^ full)) == 0
            result |= hit.astype(codes.dtype) << dt(i)
        return result
    raise TypeError(f"not a concept expression: {c!r}")


def find_witness(
    sig: Signature,
    tbox: TBox,
    concept: ConceptExpr,
    max_size: int,
    *,
    max_bits: int = DEFAULT_MAX_BITS,
    chunk_bits: int = 22,
) -> FiniteModel | None:
    """First model of *tbox* (in enumerate_models order) where *concept* is nonempty.

    Vectorized equivalent of filtering enumerate_models by a nonempty
    extension; returns None when no such model exists up to *max_size*.
    """
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    _guard_bits(sig, max_size, max_bits)
    for k in range(1, max_size + 1):
        _, _, offsets, bits = _bit_layout(sig, k)
        dtype = np.uint32 if bits < 32 else np.uint64
        total = 1 << bits
        step = 1 << min(chunk_bits, bits)
        for start in range(0, total, step):
            codes = np.arange(start, min(start + step, total), dtype=dtype)
            sat = np.ones(codes.shape, dtype=bool)
            for lhs, rhs in tbox.inclusions:
                lmask = _vector_extension(lhs, codes, offsets, k)
                rmask = _vector_extension(rhs, codes, offsets, k)
                sat &= (lmask & ~rmask) == 0
                if not sat.any():
                    break
            if not sat.any():
                continue
            witness = sat & (_vector_extension(concept, codes, offsets, k) != 0)
            hits = np.nonzero(witness)[0]
            if hits.size:
                return _decode_model(int(codes[hits[0]]), sig, k)
    return None
