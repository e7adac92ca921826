"""Finite partial orders of contexts and their declared covering families.

The order is declared as pairs ``(v, u)`` meaning "v is a subcontext of u"
and closed reflexively and transitively at construction. Cycles between
distinct names violate antisymmetry and are rejected at load time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ctxdl.errors import UnknownNameError


@dataclass(frozen=True)
class Covering:
    """A declared covering family: *members* jointly cover *target*.

    Members are deduplicated preserving declaration order.
    """

    target: str
    members: tuple[str, ...]

    def __init__(self, target: str, members: Iterable[str]):
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "members", tuple(dict.fromkeys(members)))


class ContextPoset:
    """Immutable finite poset over declared context names."""

    def __init__(self, contexts: Iterable[str], leq_pairs: Iterable[tuple[str, str]] = ()):
        self._contexts = frozenset(contexts)
        declared = list(leq_pairs)
        for v, u in declared:
            for name in (v, u):
                if name not in self._contexts:
                    raise UnknownNameError(f"unknown context {name!r}")
        self._leq = self._close(declared)
        self._check_antisymmetry()

    def _close(self, declared: list[tuple[str, str]]) -> frozenset[tuple[str, str]]:
        below: dict[str, set[str]] = {u: {u} for u in self._contexts}
        for v, u in declared:
            below[u].add(v)
        # Transitive closure by iteration to a fixed point (desk-scale posets).
        changed = True
        while changed:
            changed = False
            for u in self._contexts:
                extra = set()
                for v in below[u]:
                    extra |= below[v]
                if not extra <= below[u]:
                    below[u] |= extra
                    changed = True
        return frozenset((v, u) for u in self._contexts for v in below[u])

    def _check_antisymmetry(self) -> None:
        for v, u in self._leq:
            if v != u and (u, v) in self._leq:
                raise ValueError(f"order cycle between contexts {v!r} and {u!r}")

    @property
    def contexts(self) -> frozenset[str]:
        return self._contexts

    @property
    def leq_pairs(self) -> frozenset[tuple[str, str]]:
        """The reflexive-transitive closure of the declared pairs."""
        return self._leq

    def _check_declared(self, *names: str) -> None:
        for name in names:
            if name not in self._contexts:
                raise UnknownNameError(f"unknown context {name!r}")

    def leq(self, v: str, u: str) -> bool:
        """True iff *v* is a subcontext of *u* (reflexive, transitive)."""
        self._check_declared(v, u)
        return (v, u) in self._leq

    def lower_bounds(self, u: str, v: str) -> frozenset[str]:
        self._check_declared(u, v)
        return frozenset(w for w in self._contexts if (w, u) in self._leq and (w, v) in self._leq)

    def meet(self, u: str, v: str) -> str | None:
        """The greatest lower bound of *u* and *v*, or None if it does not exist.

        A finite poset has a greatest lower bound exactly when the set of
        common lower bounds has a unique maximal element.
        """
        bounds = self.lower_bounds(u, v)
        maximal = [
            w
            for w in bounds
            if not any(x != w and (w, x) in self._leq for x in bounds)
        ]
        if len(maximal) == 1:
            return maximal[0]
        return None


def validate_covering(poset: ContextPoset, cov: Covering) -> list[str]:
    """Check a covering against the poset; returns a list of violations (empty = ok)."""
    violations: list[str] = []
    if not cov.members:
        violations.append("empty covering")
        return violations
    if cov.target not in poset.contexts:
        violations.append(f"unknown target context {cov.target!r}")
        return violations
    for member in cov.members:
        if member not in poset.contexts:
            violations.append(f"unknown member context {member!r}")
        elif not poset.leq(member, cov.target):
            violations.append(f"member {member!r} is not a subcontext of {cov.target!r}")
    return violations
