"""Agents: interpretation procedures over latent fact sets, and stability.

An agent turns a latent structure (a bag of context-free facts) into a
manifested fact set by: injecting the latent facts as assertions at its
input context, optionally running an oracle session (payload templates may
mention ``{seed}`` and ``{parity}``), optionally running a program, and
finally projecting the resulting fact set through a list of fact patterns.
The empty manifested set is a first-class outcome: it encodes that the
latent structure carries no information for this agent.

Stability is exact: k independent runs (fresh state each run) under a seed
policy are Stable iff every run manifests the identical fact set.

Agent definition files are JSON::

    {
      "name": "sensor",
      "kb": "sensor.kb",
      "program": "sensor.p",
      "oracle": {"script": "stream.jsonl", "queries": ["{parity}"]},
      "input_context": "Obs",
      "projection": ["scene:Obstacle"],
      "fuel": 1000,
      "guards": "literal",
      "seed_policy": {"kind": "sequence", "start": 1}
    }

Relative paths are resolved against the file's directory. ``program`` and
``oracle`` are each optional; an agent with neither is the identity on its
injected facts (modulo projection).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from ctxdl.concepts import Atomic, Signature
from ctxdl.contexts import ContextPoset
from ctxdl.errors import InteractionError, LoadError, OracleError, ParseError
from ctxdl.kb import Assertion, ConceptAssertion, KnowledgeState, RoleAssertion
from ctxdl.oracle import OracleQuery, OracleSpec, load_script, run_session
from ctxdl.programs import (
    DEFAULT_FUEL,
    FuelExhausted,
    Program,
    evaluate,
    parse_program,
)
from ctxdl.sheaf import ConceptFact, Fact, RoleFact, Section, render_fact

_CONCEPT_PATTERN = re.compile(
    r"^(?P<ind>\*|[A-Za-z]\w*):(?P<con>\*|[A-Za-z]\w*)(?:@(?P<ctx>\*|[A-Za-z]\w*))?$"
)
_ROLE_PATTERN = re.compile(
    r"^\((?P<sub>\*|[A-Za-z]\w*),(?P<tgt>\*|[A-Za-z]\w*)\):(?P<role>\*|[A-Za-z]\w*)"
    r"(?:@(?P<ctx>\*|[A-Za-z]\w*))?$"
)


@dataclass(frozen=True)
class FactPattern:
    """A fact selector; '*' in any slot matches every name.

    Concept patterns ``a:C[@U]`` match atomic concept assertions; role
    patterns ``(a,b):r[@U]`` match role assertions. Without ``@U`` the
    context is unconstrained.
    """

    kind: str  # "concept" | "role"
    fields: tuple[str, ...]  # (ind, con) or (sub, tgt, role)
    context: str | None

    @staticmethod
    def parse(text: str) -> "FactPattern":
        text = text.replace(" ", "")
        m = _ROLE_PATTERN.match(text)
        if m:
            return FactPattern(
                "role", (m.group("sub"), m.group("tgt"), m.group("role")), m.group("ctx")
            )
        m = _CONCEPT_PATTERN.match(text)
        if m:
            return FactPattern("concept", (m.group("ind"), m.group("con")), m.group("ctx"))
        raise ValueError(f"bad fact pattern {text!r}")

    def matches(self, assertion: Assertion) -> bool:
        if self.context not in (None, "*") and assertion.context != self.context:
            return False
        if self.kind == "concept":
            if not isinstance(assertion, ConceptAssertion):
                return False
            if not isinstance(assertion.concept, Atomic):
                return False
            values = (assertion.individual, assertion.concept.name)
        else:
            if not isinstance(assertion, RoleAssertion):
                return False
            values = (assertion.subject, assertion.target, assertion.role)
        return all(want in ("*", got) for want, got in zip(self.fields, values))


@dataclass(frozen=True)
class LatentStructure:
    """An uninterpreted bundle of facts an agent may interpret."""

    name: str
    payload: frozenset[Fact]

    @staticmethod
    def of(name: str, payload: Union[frozenset[Fact], Section]) -> "LatentStructure":
        facts = payload.facts if isinstance(payload, Section) else frozenset(payload)
        return LatentStructure(name, facts)


@dataclass(frozen=True)
class Manifested:
    """The fact set an interaction produced; empty means nothing manifested."""

    facts: frozenset[Fact]

    def render(self) -> list[str]:
        return sorted(render_fact(f) for f in self.facts)


@dataclass(frozen=True)
class SeedPolicy:
    """constant: every run uses *value*; sequence: run i uses start + i."""

    kind: str
    value: int = 0

    def seeds(self, k: int) -> list[int]:
        if self.kind == "constant":
            return [self.value] * k
        if self.kind == "sequence":
            return [self.value + i for i in range(k)]
        raise ValueError(f"unknown seed policy {self.kind!r}")


@dataclass(frozen=True)
class Agent:
    name: str
    signature: Signature
    poset: ContextPoset
    base_state: KnowledgeState
    input_context: str
    program: Program | None
    oracle: OracleSpec | None
    queries: tuple[str, ...]
    projection: tuple[FactPattern, ...]
    fuel: int = DEFAULT_FUEL
    guard_mode: str = "literal"
    seed_policy: SeedPolicy = SeedPolicy("constant", 0)


def _inject(fact: Fact, context: str) -> Assertion:
    if isinstance(fact, ConceptFact):
        return ConceptAssertion(fact.individual, Atomic(fact.concept), context)
    return RoleAssertion(fact.subject, fact.target, fact.role, context)


def _project(abox: frozenset[Assertion], projection: tuple[FactPattern, ...]) -> frozenset[Fact]:
    out: set[Fact] = set()
    for a in abox:
        if any(p.matches(a) for p in projection):
            if isinstance(a, ConceptAssertion):
                out.add(ConceptFact(a.individual, a.concept.name))
            else:
                out.add(RoleFact(a.subject, a.target, a.role))
    return frozenset(out)


def interact(agent: Agent, latent: LatentStructure, seed: int = 0) -> Manifested:
    """One interpretation run; a function of (agent, latent, seed)."""
    injected = {_inject(f, agent.input_context) for f in latent.payload}
    state = agent.base_state.with_abox(agent.base_state.abox | injected)
    if agent.oracle is not None:
        queries = [
            OracleQuery(agent.oracle.name, template.format(seed=seed, parity=seed % 2))
            for template in agent.queries
        ]
        try:
            state, _ = run_session(state, agent.oracle, queries)
        except OracleError as exc:
            raise InteractionError(f"oracle failure: {exc}") from exc
    if agent.program is not None:
        outcome = evaluate(agent.program, state, agent.fuel, agent.guard_mode, agent.poset)
        if isinstance(outcome, FuelExhausted):
            raise InteractionError(
                f"agent program exhausted its fuel of {agent.fuel} after {outcome.steps} steps"
            )
        state = outcome.state
    return Manifested(_project(state.abox, agent.projection))


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of repeated interaction.

    stable is True iff all runs manifested the same fact set, in which case
    *outcome* holds it; otherwise *outcomes* lists the distinct manifested
    sets with their counts, in canonical order.
    """

    stable: bool
    outcome: Manifested | None
    outcomes: tuple[tuple[Manifested, int], ...]
    runs: int
    seeds: tuple[int, ...]


def stability_check(
    agent: Agent,
    latent: LatentStructure,
    k: int,
    seeds: list[int] | None = None,
) -> StabilityReport:
    """Run interact k times and compare the manifested sets exactly.

    Seeds default to the agent's seed policy. k must be at least 2: a single
    run cannot witness regeneration.
    """
    if k < 2:
        raise ValueError("stability needs at least 2 runs")
    if seeds is None:
        seeds = agent.seed_policy.seeds(k)
    if len(seeds) != k:
        raise ValueError(f"expected {k} seeds, got {len(seeds)}")
    results = [interact(agent, latent, seed) for seed in seeds]
    counts: dict[Manifested, int] = {}
    for m in results:
        counts[m] = counts.get(m, 0) + 1
    ordered = tuple(
        sorted(counts.items(), key=lambda item: (len(item[0].facts), item[0].render()))
    )
    if len(counts) == 1:
        return StabilityReport(True, results[0], ordered, k, tuple(seeds))
    return StabilityReport(False, None, ordered, k, tuple(seeds))


def load_agent(path: Union[str, Path]) -> Agent:
    """Load an agent definition file and its referenced documents."""
    from ctxdl.kbfile import load_kb  # local import: kbfile imports nothing from here

    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LoadError(str(path), exc.lineno, f"invalid JSON: {exc.msg}") from exc
    except OSError as exc:
        raise LoadError(str(path), None, str(exc)) from exc
    if not isinstance(raw, dict):
        raise LoadError(str(path), 1, "agent file must hold a JSON object")

    def fail(msg: str) -> LoadError:
        return LoadError(str(path), 1, msg)

    for key in ("name", "kb", "input_context", "projection"):
        if key not in raw:
            raise fail(f"missing required field {key!r}")
    base = path.parent
    doc = load_kb(base / str(raw["kb"]))
    sig = doc.signature
    input_context = str(raw["input_context"])
    if input_context not in sig.context_names:
        raise fail(f"input_context {input_context!r} is not a declared context")
    program = None
    if "program" in raw:
        prog_path = base / str(raw["program"])
        try:
            text = prog_path.read_text(encoding="utf-8")
            program = parse_program(text, sig)
        except OSError as exc:
            raise LoadError(str(prog_path), None, str(exc)) from exc
        except ParseError as exc:
            raise LoadError(str(prog_path), exc.line, exc.message) from exc
    oracle = None
    queries: tuple[str, ...] = ()
    if "oracle" in raw:
        spec = raw["oracle"]
        if not isinstance(spec, dict) or "script" not in spec:
            raise fail("oracle section needs a 'script' path")
        oracle = load_script(base / str(spec["script"]), sig)
        qs = spec.get("queries", [])
        if not isinstance(qs, list):
            raise fail("oracle queries must be a list of payload templates")
        queries = tuple(str(q) for q in qs)
    try:
        projection = tuple(FactPattern.parse(str(p)) for p in raw["projection"])
    except ValueError as exc:
        raise fail(str(exc)) from exc
    policy_raw = raw.get("seed_policy", {"kind": "constant", "value": 0})
    kind = str(policy_raw.get("kind", "constant"))
    if kind not in ("constant", "sequence"):
        raise fail(f"unknown seed policy kind {kind!r}")
    value = int(policy_raw.get("value", policy_raw.get("start", 0)))
    mode = str(raw.get("guards", "literal"))
    if mode not in ("literal", "saturated"):
        raise fail(f"unknown guard mode {mode!r}")
    return Agent(
        name=str(raw["name"]),
        signature=sig,
        poset=doc.poset,
        base_state=doc.state(),
        input_context=input_context,
        program=program,
        oracle=oracle,
        queries=queries,
        projection=projection,
        fuel=int(raw.get("fuel", DEFAULT_FUEL)),
        guard_mode=mode,
        seed_policy=SeedPolicy(kind, value),
    )
