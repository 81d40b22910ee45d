"""The ``.cq`` text format.

    Q(A,B) :- R1(A), R2(A,B), R3(B) | R2.B = "x".

Identifiers are ``[A-Za-z_][A-Za-z0-9_]*``; constants are double-quoted with
backslash escapes. The trailing period is optional. ``#`` starts a comment
that runs to the end of the line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import ParseError, QueryError
from .query import Query, Relation, Selection

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<implies>:-)
  | (?P<punct>[(),|.=])
""", re.VERBOSE)


@dataclass(frozen=True)
class ParseDiagnostic:
    offset: int  # in bytes of the UTF-8 encoding
    message: str
    severity: str = "error"


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError([ParseDiagnostic(_byte_offset(text, pos),
                                              f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        if kind != "ws":
            val = m.group()
            toks.append(_Tok(kind if kind != "punct" else val, val, pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str, what: str | None = None) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            found = tok.text or "end of input"
            self.fail(tok.offset, f"expected {what or kind}, found {found!r}")
        self.i += 1
        return tok

    def fail(self, offset: int, message: str):
        offset = min(offset, max(len(self.text) - 1, 0))
        raise ParseError([ParseDiagnostic(_byte_offset(self.text, offset), message)])

    def attr_list(self) -> list[tuple[str, int]]:
        self.take("(", "'('")
        out = []
        if self.peek().kind == "ident":
            t = self.take("ident")
            out.append((t.text, t.offset))
            while self.peek().kind == ",":
                self.take(",")
                t = self.take("ident", "attribute name")
                out.append((t.text, t.offset))
        self.take(")", "')'")
        return out

    def parse(self) -> Query:
        name = self.take("ident", "query name")
        head = self.attr_list()
        self.take("implies", "':-'")
        atoms = [self.atom()]
        while self.peek().kind == ",":
            self.take(",")
            atoms.append(self.atom())
        preds = []
        if self.peek().kind == "|":
            self.take("|")
            preds.append(self.pred())
            while self.peek().kind == ",":
                self.take(",")
                preds.append(self.pred())
        if self.peek().kind == ".":
            self.take(".")
        end = self.peek()
        if end.kind != "eof":
            self.fail(end.offset, f"unexpected {end.text!r} after query")
        return self.build(name, head, atoms, preds)

    def atom(self):
        name = self.take("ident", "relation name")
        return name, self.attr_list()

    def pred(self):
        rel = self.take("ident", "relation name")
        self.take(".", "'.'")
        attr = self.take("ident", "attribute name")
        self.take("=", "'='")
        val = self.take("string", "quoted value")
        try:
            return rel, attr, json.loads(val.text)
        except json.JSONDecodeError:
            self.fail(val.offset, f"bad escape in {val.text}")

    def build(self, name, head, atoms, preds) -> Query:
        seen: dict[str, int] = {}
        body = []
        for i, (rname, attrs) in enumerate(atoms):
            if rname.text in seen:
                self.fail(rname.offset, f"duplicate relation name {rname.text} (self-joins unsupported)")
            seen[rname.text] = i
            names = [a for a, _ in attrs]
            for j, (a, off) in enumerate(attrs):
                if a in names[:j]:
                    self.fail(off, f"attribute {a} repeated in {rname.text}")
            body.append(Relation(i, rname.text, tuple(names)))
        body_attrs = {a for r in body for a in r.attrs}
        for a, off in head:
            if a not in body_attrs:
                self.fail(off, f"unknown head attribute {a}")
        heads = [a for a, _ in head]
        for j, (a, off) in enumerate(head):
            if a in heads[:j]:
                self.fail(off, f"head attribute {a} repeated")
        sets: dict[frozenset, str] = {}
        for (rname, _), r in zip(atoms, body):
            if r.attrset in sets:
                self.fail(rname.offset, f"relations {sets[r.attrset]} and {r.name} have the same attribute set")
            sets[r.attrset] = r.name
        sels = []
        for rel, attr, value in preds:
            if rel.text not in seen:
                self.fail(rel.offset, f"selection on unknown relation {rel.text}")
            r = body[seen[rel.text]]
            if attr.text not in r.attrset:
                self.fail(attr.offset, f"selection on unknown attribute {rel.text}.{attr.text}")
            sels.append(Selection(r.id, attr.text, value))
        try:
            return Query(tuple(heads), tuple(body), tuple(sorted(set(sels))), name.text)
        except QueryError as e:  # pragma: no cover - checks above cover every case
            self.fail(0, str(e))


def parse_query(text: str) -> Query:
    """Parse one query; raises :class:`ParseError` carrying diagnostics."""
    return _Parser(text).parse()


def render_query(q: Query) -> str:
    def atom(r: Relation) -> str:
        return f"{r.name}({','.join(r.attrs)})"

    out = f"{q.name}({','.join(q.head)}) :- " + ", ".join(atom(r) for r in q.body)
    if q.selections:
        preds = [f"{q.rel(s.relation).name}.{s.attr} = {json.dumps(s.value, ensure_ascii=False)}"
                 for s in q.selections]
        out += " | " + ", ".join(preds)
    return out
