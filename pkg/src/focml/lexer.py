"""Tokenizer.

Notable tokens: proof bullets `<1>2` (lexed before the `<0x` operator, whose
prefix they share), the double semicolon that ends toplevel declarations, and
nested `(* ... *)` comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import Pos
from .errors import CompileError, SYNTAX

KEYWORDS = {
    "species", "collection", "inherit", "implement", "representation",
    "signature", "let", "rec", "property", "theorem", "proof", "of", "end",
    "type", "is", "in", "all", "ex", "assume", "hypothesis", "prove", "qed",
    "by", "definition", "step", "admitted", "if", "then", "else", "match",
    "with", "true", "false", "Self",
}

# Longest first; every op is its own token kind.
OPERATORS = [
    ";;", "->", "/\\", "\\/", "<0x", "=0x", "~~", "&&",
    "(", ")", ",", ";", ":", "=", "!", "|", "*", "+", "-", "~",
]

_BULLET = re.compile(r"<(\d+)>([A-Za-z0-9]+)")
_IDENT = re.compile(r"[a-z_][A-Za-z0-9_]*")
_CAPID = re.compile(r"[A-Z][A-Za-z0-9_]*")
_INT = re.compile(r"\d+")
_WS = re.compile(r"[ \t\r\n]+")


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'capid' | 'int' | 'string' | 'bullet' | 'eof' | keyword | operator
    value: str
    pos: Pos
    bullet: tuple[int, str] | None = None

    def __repr__(self) -> str:
        return f"Token({self.kind!r}, {self.value!r}, {self.pos})"


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def pos() -> Pos:
        return Pos(line, col)

    def advance(s: str) -> None:
        nonlocal line, col
        for ch in s:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1

    while i < n:
        m = _WS.match(text, i)
        if m:
            advance(m.group())
            i = m.end()
            continue
        if text.startswith("(*", i):
            depth, j = 1, i + 2
            while j < n and depth:
                if text.startswith("(*", j):
                    depth, j = depth + 1, j + 2
                elif text.startswith("*)", j):
                    depth, j = depth - 1, j + 2
                else:
                    j += 1
            if depth:
                raise CompileError(SYNTAX, "unterminated comment", pos())
            advance(text[i:j])
            i = j
            continue
        p = pos()
        if text[i] == '"':
            j = i + 1
            out = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    out.append(text[j + 1])
                    j += 2
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise CompileError(SYNTAX, "unterminated string literal", p)
            j += 1
            tokens.append(Token("string", "".join(out), p))
            advance(text[i:j])
            i = j
            continue
        m = _BULLET.match(text, i)
        if m:
            tokens.append(Token("bullet", m.group(), p, (int(m.group(1)), m.group(2))))
            advance(m.group())
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group()
            tokens.append(Token(word if word in KEYWORDS else "ident", word, p))
            advance(word)
            i = m.end()
            continue
        m = _CAPID.match(text, i)
        if m:
            word = m.group()
            kind = "Self" if word == "Self" else "capid"
            tokens.append(Token(kind, word, p))
            advance(word)
            i = m.end()
            continue
        m = _INT.match(text, i)
        if m:
            tokens.append(Token("int", m.group(), p))
            advance(m.group())
            i = m.end()
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token(op, op, p))
                advance(op)
                i += len(op)
                break
        else:
            raise CompileError(SYNTAX, f"unexpected character {text[i]!r}", p)
    tokens.append(Token("eof", "", pos()))
    return tokens
