"""Externally justified state transitions: scripted oracles, record, replay.

An oracle maps (state digest, query payload) to a response of assertion
additions and deletions. The digest is the canonical sorted one-line
rendering of the fact set (see kb.abox_digest), so scripts can key on exact
states; entries may instead match on the payload alone, with ``*`` globbing.

Script files are line-delimited JSON. An optional first header record sets
flags; every other record is one table entry::

    {"allow_deletions": true}
    {"oracle": "sensor", "match": {"payload": "probe"}, "add": ["a:C@U"]}
    {"oracle": "sensor", "match": {"payload": "p2", "state": "<digest>"},
     "add": [], "del": ["a:C@U"]}

Deletions are an extension beyond pure introduction of facts and stay
rejected unless the header sets ``allow_deletions``. Session logs reuse the
entry shape plus a ``seq`` number and are append-only; replaying a log gives
an oracle that verifies each incoming query against the recorded one and
reproduces the recorded responses byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fnmatch import fnmatchcase
from pathlib import Path
from typing import IO, Iterable, Union

from ctxdl.concepts import Signature
from ctxdl.errors import (
    LoadError,
    ReplayMismatchError,
    ScriptLookupError,
    UnknownOracleError,
)
from ctxdl.kb import (
    Assertion,
    KnowledgeState,
    abox_digest,
    parse_assertion,
    render_assertion,
)


@dataclass(frozen=True)
class OracleQuery:
    oracle: str
    payload: str


@dataclass(frozen=True)
class OracleResponse:
    additions: frozenset[Assertion]
    deletions: frozenset[Assertion] = frozenset()

    def __post_init__(self):
        if self.additions & self.deletions:
            raise ValueError("oracle response adds and deletes the same assertion")


class OracleSpec:
    """Behavior interface: a function from (state digest, payload) to response."""

    name: str

    def respond(self, digest: str, payload: str) -> OracleResponse:
        raise NotImplementedError


@dataclass(frozen=True)
class ScriptEntry:
    payload: str  # pattern; shell-style '*'/'?' wildcards allowed
    state: str | None  # exact digest, or None for payload-only matching
    response: OracleResponse


class ScriptedOracle(OracleSpec):
    """Deterministic table-driven oracle.

    Lookup prefers an exact (state, payload) entry, then the first
    payload-pattern entry in file order, so the behavior is a function of
    the key even when patterns overlap.
    """

    def __init__(self, name: str, entries: Iterable[ScriptEntry], allow_deletions: bool = False):
        self.name = name
        self.allow_deletions = allow_deletions
        self._exact: dict[tuple[str, str], OracleResponse] = {}
        self._patterns: list[ScriptEntry] = []
        seen_patterns: set[str] = set()
        for entry in entries:
            if entry.response.deletions and not allow_deletions:
                raise ValueError(
                    "script contains deletions but does not set allow_deletions"
                )
            if entry.state is not None:
                key = (entry.state, entry.payload)
                if key in self._exact:
                    raise ValueError(f"duplicate script entry for state/payload {key!r}")
                self._exact[key] = entry.response
            else:
                if entry.payload in seen_patterns:
                    raise ValueError(f"duplicate script entry for payload {entry.payload!r}")
                seen_patterns.add(entry.payload)
                self._patterns.append(entry)

    def respond(self, digest: str, payload: str) -> OracleResponse:
        hit = self._exact.get((digest, payload))
        if hit is not None:
            return hit
        for entry in self._patterns:
            if fnmatchcase(payload, entry.payload):
                return entry.response
        raise ScriptLookupError(
            f"oracle {self.name!r} has no entry for payload {payload!r} in the current state"
        )


class RecordingOracle(OracleSpec):
    """Wraps another oracle and appends every transition to a JSONL sink."""

    def __init__(self, inner: OracleSpec, sink: IO[str]):
        self.inner = inner
        self.name = inner.name
        self._sink = sink
        self._seq = 0

    def respond(self, digest: str, payload: str) -> OracleResponse:
        response = self.inner.respond(digest, payload)
        record = {
            "seq": self._seq,
            "oracle": self.name,
            "match": {"payload": payload, "state": digest},
            "add": sorted(render_assertion(a) for a in response.additions),
            "del": sorted(render_assertion(a) for a in response.deletions),
        }
        self._sink.write(json.dumps(record, sort_keys=True) + "\n")
        self._seq += 1
        return response


@dataclass
class _LogRecord:
    payload: str
    state: str
    response: OracleResponse


class ReplayOracle(OracleSpec):
    """Replays a recorded session, verifying each query against the log."""

    def __init__(self, name: str, records: list[_LogRecord]):
        self.name = name
        self._records = records
        self._pos = 0

    def respond(self, digest: str, payload: str) -> OracleResponse:
        if self._pos >= len(self._records):
            raise ReplayMismatchError(self._pos, "log exhausted: no recorded transition left")
        rec = self._records[self._pos]
        if payload != rec.payload:
            raise ReplayMismatchError(
                self._pos, f"query payload {payload!r} differs from recorded {rec.payload!r}"
            )
        if digest != rec.state:
            raise ReplayMismatchError(
                self._pos, "knowledge state differs from the recorded one"
            )
        self._pos += 1
        return rec.response


def record_session(spec: OracleSpec, sink: IO[str]) -> RecordingOracle:
    """Wrap *spec* so every transition is appended to *sink* as one JSONL record."""
    return RecordingOracle(spec, sink)


def replay_session(source: Union[str, Path, IO[str]], sig: Signature) -> ReplayOracle:
    """Build a replaying oracle from a session log (path or open stream)."""
    path, lines = _read_lines(source)
    records: list[_LogRecord] = []
    name: str | None = None
    expected_seq = 0
    for lineno, raw in lines:
        obj = _parse_json_line(path, lineno, raw)
        if "seq" not in obj:
            raise LoadError(path, lineno, "log record is missing its sequence number")
        if obj["seq"] != expected_seq:
            raise LoadError(
                path, lineno, f"log truncated or reordered: expected seq {expected_seq}, found {obj['seq']}"
            )
        expected_seq += 1
        entry_name = obj.get("oracle")
        if not isinstance(entry_name, str):
            raise LoadError(path, lineno, "log record is missing the oracle name")
        if name is None:
            name = entry_name
        elif entry_name != name:
            raise LoadError(path, lineno, f"log names two oracles: {name!r} and {entry_name!r}")
        match = obj.get("match", {})
        payload = match.get("payload")
        state = match.get("state")
        if not isinstance(payload, str) or not isinstance(state, str):
            raise LoadError(path, lineno, "log record needs match.payload and match.state")
        response = _parse_response(obj, sig, path, lineno)
        records.append(_LogRecord(payload, state, response))
    if name is None:
        name = "replay"
    return ReplayOracle(name, records)


def load_script(source: Union[str, Path, IO[str]], sig: Signature) -> ScriptedOracle:
    """Load a scripted oracle from JSONL text (path or open stream)."""
    path, lines = _read_lines(source)
    entries: list[ScriptEntry] = []
    allow_deletions = False
    name: str | None = None
    seen: dict[tuple, int] = {}
    first = True
    for lineno, raw in lines:
        obj = _parse_json_line(path, lineno, raw)
        if first and "oracle" not in obj:
            allow_deletions = bool(obj.get("allow_deletions", False))
            unknown = set(obj) - {"allow_deletions", "name"}
            if unknown:
                raise LoadError(path, lineno, f"unknown header fields {sorted(unknown)}")
            if "name" in obj:
                name = str(obj["name"])
            first = False
            continue
        first = False
        entry_name = obj.get("oracle")
        if not isinstance(entry_name, str):
            raise LoadError(path, lineno, "script entry is missing the oracle name")
        if name is None:
            name = entry_name
        elif entry_name != name:
            raise LoadError(path, lineno, f"script names two oracles: {name!r} and {entry_name!r}")
        match = obj.get("match")
        if not isinstance(match, dict) or "payload" not in match:
            raise LoadError(path, lineno, "script entry needs a match.payload field")
        state = match.get("state")
        if state is not None and not isinstance(state, str):
            raise LoadError(path, lineno, "match.state must be a string digest")
        response = _parse_response(obj, sig, path, lineno)
        if response.deletions and not allow_deletions:
            raise LoadError(
                path, lineno, "entry deletes assertions but the header does not set allow_deletions"
            )
        key = (state, str(match["payload"]))
        if key in seen:
            raise LoadError(
                path, lineno, f"duplicate entry for {key!r} (first at line {seen[key]})"
            )
        seen[key] = lineno
        entries.append(ScriptEntry(str(match["payload"]), state, response))
    if name is None:
        raise LoadError(path, 1, "script declares no oracle name")
    return ScriptedOracle(name, entries, allow_deletions)


def oracle_step(
    state: KnowledgeState, spec: OracleSpec, query: OracleQuery
) -> tuple[KnowledgeState, OracleResponse]:
    """Apply one externally justified transition to the fact set.

    The inclusions are never touched. Raises UnknownOracleError when the
    query names a different oracle than *spec* serves.
    """
    if query.oracle != spec.name:
        raise UnknownOracleError(
            f"unknown oracle {query.oracle!r}: this session serves {spec.name!r}"
        )
    response = spec.respond(abox_digest(state.abox), query.payload)
    new_state = state.with_abox((state.abox | response.additions) - response.deletions)
    return new_state, response


def run_session(
    state: KnowledgeState, spec: OracleSpec, queries: Iterable[OracleQuery]
) -> tuple[KnowledgeState, list[OracleResponse]]:
    """Apply a sequence of queries in order, returning the final state."""
    responses = []
    for query in queries:
        state, response = oracle_step(state, spec, query)
        responses.append(response)
    return state, responses


# ---------------------------------------------------------------------------
# Shared JSONL plumbing
# ---------------------------------------------------------------------------


def _read_lines(source: Union[str, Path, IO[str]]) -> tuple[str, list[tuple[int, str]]]:
    if isinstance(source, (str, Path)):
        path = str(source)
        text = Path(source).read_text(encoding="utf-8")
    else:
        path = getattr(source, "name", "<stream>")
        text = source.read()
    lines = [
        (lineno, line)
        for lineno, line in enumerate(text.splitlines(), start=1)
        if line.strip()
    ]
    return path, lines


def _parse_json_line(path: str, lineno: int, raw: str) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LoadError(path, lineno, f"invalid JSON record: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise LoadError(path, lineno, "each record must be a JSON object")
    return obj


def _parse_response(obj: dict, sig: Signature, path: str, lineno: int) -> OracleResponse:
    def parse_list(key: str) -> frozenset[Assertion]:
        raw = obj.get(key, [])
        if not isinstance(raw, list):
            raise LoadError(path, lineno, f"{key!r} must be a list of assertion strings")
        out = set()
        for text in raw:
            try:
                out.add(parse_assertion(str(text), sig))
            except Exception as exc:
                raise LoadError(path, lineno, f"bad assertion {text!r}: {exc}") from exc
        return frozenset(out)

    additions = parse_list("add")
    deletions = parse_list("del")
    try:
        return OracleResponse(additions, deletions)
    except ValueError as exc:
        raise LoadError(path, lineno, str(exc)) from exc
