"""Single-file knowledge-base documents: load, validate, dump state.

File format: section keywords on their own, statements terminated by ``.``,
``#`` comments anywhere. Sections may appear in any order and repeat; the
loader resolves cross-references after reading the whole file, and loading
is all-or-nothing::

    signature
      concept A, B.          role r.            individual a, b.
    contexts
      context U, V.          V <= U.            # V is a subcontext of U
    covers
      cover U by V.
    tbox
      A <= B.
    abox
      a : A @ U.             (a, b) : r @ U.
    facts
      facts U : { a:A, (a,b):r }.

State dumps are separate files: a header line ``ctxdl-state <sig-digest>``
followed by one assertion per line in canonical sorted order. The digest
pins the signature the dump was written under.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from ctxdl.concepts import ConceptExpr, Signature, parse_concept_stream
from ctxdl.contexts import ContextPoset, Covering, validate_covering
from ctxdl.errors import LoadError, ParseError
from ctxdl.kb import (
    Assertion,
    KnowledgeState,
    canonical_abox,
    parse_assertion,
    parse_assertion_stream,
    signature_digest,
)
from ctxdl.lexer import END, IDENT, Token, TokenStream, tokenize
from ctxdl.reasoner import TBox
from ctxdl.sheaf import Fact, Presheaf, parse_fact_stream

SECTIONS = ("signature", "contexts", "covers", "tbox", "abox", "facts")

STATE_HEADER = "ctxdl-state"


@dataclass(frozen=True)
class KBDocument:
    """A fully cross-checked knowledge-base document."""

    signature: Signature
    poset: ContextPoset
    coverings: tuple[Covering, ...]
    tbox: TBox
    abox: frozenset[Assertion]
    universes: dict[str, frozenset[Fact]]

    def state(self) -> KnowledgeState:
        return KnowledgeState(self.tbox, self.abox)

    def presheaf(self) -> Presheaf:
        return Presheaf(self.poset, self.universes)


def load_kb(path: Union[str, Path]) -> KBDocument:
    """Load and validate a document; any failure raises LoadError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise LoadError(str(path), 1, "file is not valid UTF-8 text") from exc
    except OSError as exc:
        raise LoadError(str(path), None, str(exc)) from exc
    return loads(text, str(path))


def loads(text: str, path: str = "<kb>") -> KBDocument:
    """Parse document text; *path* only labels error messages."""
    try:
        statements = _split_statements(text)
        return _build(statements, path)
    except LoadError:
        raise
    except ParseError as exc:
        raise LoadError(path, exc.line, exc.message) from exc


# Each statement is the token slice up to its terminating '.', tagged with
# the active section.
@dataclass(frozen=True)
class _Statement:
    section: str
    tokens: list[Token]
    line: int


def _split_statements(text: str) -> list[_Statement]:
    toks = tokenize(text)
    out: list[_Statement] = []
    section: str | None = None
    i = 0
    while toks[i].kind != END:
        tok = toks[i]
        if tok.kind == IDENT and tok.text in SECTIONS:
            # 'facts U : ...' is a statement (it names its own section);
            # any other occurrence of a section keyword opens that section.
            facts_statement = (
                tok.text == "facts"
                and toks[i + 1].kind == IDENT
                and toks[i + 2].kind == ":"
            )
            if not facts_statement:
                section = tok.text
                i += 1
                continue
            stmt_section = "facts"
        else:
            if section is None:
                raise ParseError(
                    f"statement before any section keyword ({', '.join(SECTIONS)})",
                    tok.line,
                    tok.col,
                )
            stmt_section = section
        j = i
        while toks[j].kind != END:
            if toks[j].kind == ".":
                # The only in-statement '.' follows a quantified role name
                # (exists r.C / forall r.C); everything else terminates.
                quantifier_dot = (
                    j >= 2
                    and toks[j - 1].kind == IDENT
                    and toks[j - 2].kind == IDENT
                    and toks[j - 2].text in ("exists", "forall")
                )
                if not quantifier_dot:
                    break
            j += 1
        if toks[j].kind != ".":
            raise ParseError("statement is missing its terminating '.'", tok.line, tok.col)
        out.append(
            _Statement(stmt_section, toks[i:j] + [Token(END, "", toks[j].line, toks[j].col)], tok.line)
        )
        i = j + 1
    return out


def _build(statements: list[_Statement], path: str) -> KBDocument:
    concepts: dict[str, None] = {}
    roles: dict[str, None] = {}
    individuals: dict[str, None] = {}
    contexts: dict[str, None] = {}
    leq_stmts: list[tuple[_Statement, Token, Token]] = []
    cover_stmts: list[tuple[_Statement, str, list[str]]] = []
    tbox_stmts: list[tuple[_Statement, list[Token]]] = []
    abox_stmts: list[tuple[_Statement, list[Token]]] = []
    facts_stmts: list[tuple[_Statement, str, list[Token]]] = []

    def err(line: int, msg: str) -> LoadError:
        return LoadError(path, line, msg)

    # Phase 1: collect declarations; defer anything needing the signature.
    for stmt in statements:
        ts = TokenStream(stmt.tokens)
        try:
            if stmt.section == "signature":
                head = ts.expect(IDENT, "'concept', 'role', or 'individual'")
                bucket = {"concept": concepts, "role": roles, "individual": individuals}.get(
                    head.text
                )
                if bucket is None:
                    raise ParseError(
                        f"expected 'concept', 'role', or 'individual', found {head.text!r}",
                        head.line,
                        head.col,
                    )
                for name in _name_list(ts):
                    bucket[name] = None
            elif stmt.section == "contexts":
                if ts.at_word("context"):
                    ts.next()
                    for name in _name_list(ts):
                        contexts[name] = None
                else:
                    v = ts.expect(IDENT, "a context name")
                    ts.expect("<=")
                    u = ts.expect(IDENT, "a context name")
                    ts.expect_end()
                    # Name resolution is deferred: declarations may follow.
                    leq_stmts.append((stmt, v, u))
            elif stmt.section == "covers":
                ts.expect_word("cover")
                target = ts.expect(IDENT, "a context name")
                ts.expect_word("by")
                members = _name_list(ts)
                cover_stmts.append((stmt, target.text, members))
            elif stmt.section == "tbox":
                tbox_stmts.append((stmt, stmt.tokens))
            elif stmt.section == "abox":
                abox_stmts.append((stmt, stmt.tokens))
            elif stmt.section == "facts":
                ts.expect_word("facts")
                ctx = ts.expect(IDENT, "a context name")
                ts.expect(":")
                facts_stmts.append((stmt, ctx.text, stmt.tokens[ts.pos :]))
        except ParseError as exc:
            raise err(exc.line if exc.line is not None else stmt.line, exc.message) from exc

    # Phase 2: build and validate against the signature.
    try:
        sig = Signature(concepts, roles, individuals, contexts)
    except ValueError as exc:
        raise err(statements[0].line if statements else 1, str(exc)) from exc
    leq_pairs = []
    for stmt, v, u in leq_stmts:
        for tok in (v, u):
            if tok.text not in contexts:
                raise err(tok.line, f"unknown context {tok.text!r}")
        leq_pairs.append((v.text, u.text))
    try:
        poset = ContextPoset(contexts, leq_pairs)
    except ValueError as exc:
        line = leq_stmts[-1][0].line if leq_stmts else (statements[0].line if statements else 1)
        raise err(line, str(exc)) from exc

    coverings = []
    for stmt, target, members in cover_stmts:
        cov = Covering(target, members)
        bad = validate_covering(poset, cov)
        if bad:
            raise err(stmt.line, f"invalid covering of {target!r}: " + "; ".join(bad))
        coverings.append(cov)

    inclusions: list[tuple[ConceptExpr, ConceptExpr]] = []
    for stmt, tokens in tbox_stmts:
        ts = TokenStream(tokens)
        try:
            lhs = parse_concept_stream(ts, sig)
            ts.expect("<=")
            rhs = parse_concept_stream(ts, sig)
            ts.expect_end()
        except ParseError as exc:
            raise err(exc.line or stmt.line, exc.message) from exc
        inclusions.append((lhs, rhs))

    abox: set[Assertion] = set()
    for stmt, tokens in abox_stmts:
        ts = TokenStream(tokens)
        try:
            a = parse_assertion_stream(ts, sig)
            ts.expect_end()
        except ParseError as exc:
            raise err(exc.line or stmt.line, exc.message) from exc
        abox.add(a)

    universes: dict[str, set[Fact]] = {}
    for stmt, ctx, tokens in facts_stmts:
        ts = TokenStream(tokens)
        try:
            if ctx not in sig.context_names:
                raise ParseError(f"unknown context {ctx!r}", stmt.line, 1)
            facts = _fact_set(ts, sig)
        except ParseError as exc:
            raise err(exc.line or stmt.line, exc.message) from exc
        universes.setdefault(ctx, set()).update(facts)

    frozen_universes = {ctx: frozenset(facts) for ctx, facts in universes.items()}
    try:
        Presheaf(poset, frozen_universes)
    except ValueError as exc:
        line = facts_stmts[-1][0].line if facts_stmts else 1
        raise err(line, str(exc)) from exc

    return KBDocument(
        signature=sig,
        poset=poset,
        coverings=tuple(coverings),
        tbox=TBox(inclusions),
        abox=frozenset(abox),
        universes=frozen_universes,
    )


def _name_list(ts: TokenStream) -> list[str]:
    names = [ts.expect(IDENT, "a name").text]
    while ts.peek().kind == ",":
        ts.next()
        names.append(ts.expect(IDENT, "a name").text)
    ts.expect_end()
    return names


def _fact_set(ts: TokenStream, sig: Signature) -> list[Fact]:
    ts.expect("{")
    facts: list[Fact] = []
    if ts.peek().kind != "}":
        facts.append(parse_fact_stream(ts, sig))
        while ts.peek().kind == ",":
            ts.next()
            facts.append(parse_fact_stream(ts, sig))
    ts.expect("}")
    ts.expect_end()
    return facts


# ---------------------------------------------------------------------------
# State dumps
# ---------------------------------------------------------------------------


def dump_state(sig: Signature, abox: Iterable[Assertion]) -> str:
    """Render a state dump: header with the signature digest, sorted assertions."""
    lines = [f"{STATE_HEADER} {signature_digest(sig)}"]
    lines.extend(canonical_abox(abox))
    return "\n".join(lines) + "\n"


def write_state(path: Union[str, Path], sig: Signature, abox: Iterable[Assertion]) -> None:
    Path(path).write_text(dump_state(sig, abox), encoding="utf-8")


def load_state(path: Union[str, Path], sig: Signature) -> frozenset[Assertion]:
    """Read a state dump written under the same signature."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise LoadError(str(path), 1, "file is not valid UTF-8 text") from exc
    except OSError as exc:
        raise LoadError(str(path), None, str(exc)) from exc
    lines = text.splitlines()
    if not lines or not lines[0].startswith(STATE_HEADER + " "):
        raise LoadError(str(path), 1, f"missing '{STATE_HEADER} <digest>' header")
    digest = lines[0][len(STATE_HEADER) + 1 :].strip()
    if digest != signature_digest(sig):
        raise LoadError(str(path), 1, "state dump was written under a different signature")
    abox: set[Assertion] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            abox.add(parse_assertion(line, sig))
        except ParseError as exc:
            raise LoadError(str(path), lineno, exc.message) from exc
    return frozenset(abox)
