"""Tokenizer shared by the concept, guard, program, and KB-file parsers.

Identifiers follow ``[A-Za-z][A-Za-z0-9_]*``. Symbols are single characters
except the two-character ``<=``. ``#`` starts a comment running to end of
line. Every token carries a 1-based (line, col) position.
"""

from __future__ import annotations

from dataclasses import dataclass

from ctxdl.errors import ParseError

_SYMBOLS = frozenset("(){}.,:;@&|!*")

END = "end"
IDENT = "ident"


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, END, or the symbol text itself ("(", "<=", ...)
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    """Split *text* into tokens, ending with a synthetic END token."""
    toks: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isalpha():
            start = i
            startcol = col
            i += 1
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            col += len(word)
            toks.append(Token(IDENT, word, line, startcol))
            continue
        if ch == "<":
            if i + 1 < n and text[i + 1] == "=":
                toks.append(Token("<=", "<=", line, col))
                i += 2
                col += 2
                continue
            raise ParseError("expected '=' after '<'", line, col)
        if ch in _SYMBOLS:
            toks.append(Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token(END, "", line, col))
    return toks


class TokenStream:
    """Cursor over a token list with save/restore for bounded backtracking."""

    def __init__(self, tokens: list[Token]):
        self._toks = tokens
        self._i = 0

    def peek(self, ahead: int = 0) -> Token:
        j = min(self._i + ahead, len(self._toks) - 1)
        return self._toks[j]

    def next(self) -> Token:
        tok = self._toks[self._i]
        if tok.kind != END:
            self._i += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            wanted = what or f"'{kind}'"
            found = "end of input" if tok.kind == END else f"{tok.text!r}"
            raise ParseError(f"expected {wanted}, found {found}", tok.line, tok.col)
        return self.next()

    def expect_word(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != IDENT or tok.text != word:
            found = "end of input" if tok.kind == END else f"{tok.text!r}"
            raise ParseError(f"expected '{word}', found {found}", tok.line, tok.col)
        return self.next()

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == IDENT and tok.text == word

    def at_end(self) -> bool:
        return self.peek().kind == END

    def expect_end(self) -> None:
        tok = self.peek()
        if tok.kind != END:
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)

    @property
    def pos(self) -> int:
        return self._i

    def restore(self, pos: int) -> None:
        self._i = pos
