"""S-expression reader for the supported Scheme subset."""

from __future__ import annotations

import re
from typing import Any, Iterator

from .datum import NIL, Char, Pair, Symbol, Vector, make_list

EOF = object()
_INT_RE = re.compile(r"[+-]?[0-9]+")

_DELIMS = set("()\";' \t\n\r")
_NAMED_CHARS = {"space": 32, "newline": 10, "tab": 9}
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}
_SHORTHAND = {"'": "quote", "`": "quasiquote", ",": "unquote", ",@": "unquote-splicing"}


class ReadError(SyntaxError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col


class Reader:
    """Reads datums one at a time from text, tracking line/column."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _where(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def error(self, msg: str, pos: int | None = None) -> ReadError:
        return ReadError(msg, *self._where(pos))

    def _skip(self) -> None:
        text, n = self.text, len(self.text)
        while self.pos < n:
            c = text[self.pos]
            if c in " \t\n\r\f":
                self.pos += 1
            elif c == ";":
                end = text.find("\n", self.pos)
                self.pos = n if end < 0 else end + 1
            elif text.startswith("#|", self.pos):
                end = text.find("|#", self.pos + 2)
                if end < 0:
                    raise self.error("unterminated block comment")
                self.pos = end + 2
            else:
                return

    def read(self) -> Any:
        """Next datum, or :data:`EOF` when the text is exhausted."""
        self._skip()
        if self.pos >= len(self.text):
            return EOF
        return self._datum()

    def __iter__(self) -> Iterator[Any]:
        while True:
            d = self.read()
            if d is EOF:
                return
            yield d

    def _datum(self) -> Any:
        self._skip()
        text = self.text
        if self.pos >= len(text):
            raise self.error("unexpected end of input")
        start = self.pos
        c = text[start]
        if c == "(" or c == "[":
            self.pos += 1
            return self._list(")" if c == "(" else "]", start)
        if c == ")" or c == "]":
            raise self.error("unexpected ')'")
        if c in "'`,":
            tag = c
            self.pos += 1
            if c == "," and text.startswith("@", self.pos):
                tag = ",@"
                self.pos += 1
            return make_list([Symbol(_SHORTHAND[tag]), self._datum()])
        if c == '"':
            return self._string()
        if c == "#":
            return self._hash()
        return self._atom()

    def _list(self, close: str, start: int) -> Any:
        items: list[Any] = []
        tail: Any = NIL
        while True:
            self._skip()
            if self.pos >= len(self.text):
                raise self.error("unterminated list", start)
            c = self.text[self.pos]
            if c == close:
                self.pos += 1
                return make_list(items, tail)
            if c in ")]":
                raise self.error("mismatched closing bracket")
            if c == "." and self._token_at(self.pos) == ".":
                if not items:
                    raise self.error("illegal use of '.'")
                self.pos += 1
                tail = self._datum()
                self._skip()
                if self.pos >= len(self.text):
                    raise self.error("unterminated list", start)
                if self.text[self.pos] != close:
                    raise self.error("expected ')' after dotted tail")
                self.pos += 1
                return make_list(items, tail)
            items.append(self._datum())

    def _token_at(self, pos: int) -> str:
        end = pos
        while end < len(self.text) and self.text[end] not in _DELIMS:
            end += 1
        return self.text[pos:end]

    def _string(self) -> str:
        start = self.pos
        self.pos += 1
        out = []
        text = self.text
        while True:
            if self.pos >= len(text):
                raise self.error("unterminated string", start)
            c = text[self.pos]
            self.pos += 1
            if c == '"':
                return "".join(out)
            if c == "\\":
                if self.pos >= len(text):
                    raise self.error("unterminated string", start)
                e = text[self.pos]
                self.pos += 1
                if e not in _ESCAPES:
                    raise self.error(f"unknown string escape \\{e}", self.pos - 2)
                out.append(_ESCAPES[e])
            else:
                out.append(c)

    def _hash(self) -> Any:
        text = self.text
        start = self.pos
        nxt = text[start + 1] if start + 1 < len(text) else ""
        if nxt == "(":
            self.pos += 2
            return Vector(list(self._list(")", start)))
        if nxt == "\\":
            if start + 2 >= len(text):
                raise self.error("bad character literal")
            tok = self._token_at(start + 3)
            name = text[start + 2] + tok
            if len(name) > 1:
                if name.lower() not in _NAMED_CHARS:
                    raise self.error(f"unknown character name #\\{name}")
                self.pos = start + 2 + len(name)
                return Char(_NAMED_CHARS[name.lower()])
            self.pos = start + 3
            return Char(ord(name))
        tok = self._token_at(start)
        self.pos = start + len(tok)
        if tok in ("#t", "#true"):
            return True
        if tok in ("#f", "#false"):
            return False
        if tok.startswith("##") and len(tok) > 2:
            return Symbol(tok)
        raise self.error(f"illegal token {tok!r}", start)

    def _atom(self) -> Any:
        start = self.pos
        tok = self._token_at(start)
        if not tok:
            raise self.error(f"illegal character {self.text[start]!r}")
        self.pos += len(tok)
        if _INT_RE.fullmatch(tok):
            return int(tok)
        return Symbol(tok)


def read_datum(text: str) -> Any:
    """First datum of ``text`` (or :data:`EOF`)."""
    return Reader(text).read()


def read_all(text: str) -> list[Any]:
    return list(Reader(text))
