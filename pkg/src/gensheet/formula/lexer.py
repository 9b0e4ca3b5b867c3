"""Lexer for cell formulas.

Produces a flat token stream; spans are byte offsets into the UTF-8
encoding of the source, non-overlapping, and cover everything except
whitespace between tokens.
"""

from __future__ import annotations

import re

from .tokens import LexError, Token, TokenKind

_PUNCT = {
    "=": TokenKind.EQUALS,
    ":": TokenKind.COLON,
    ",": TokenKind.COMMA,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    "&": TokenKind.AMP,
    "+": TokenKind.PLUS,
    "-": TokenKind.MINUS,
    "*": TokenKind.STAR,
    "/": TokenKind.SLASH,
}

_NUMBER_RE = re.compile(r"[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?")
# Optional sheet prefix, optional $ anchors, 1-3 column letters, 1+ digits.
# The lookahead keeps identifiers like A2X from being split into a ref.
_CELL_REF_RE = re.compile(
    r"(?:[A-Za-z_][A-Za-z0-9_]*!)?\$?[A-Za-z]{1,3}\$?[0-9]+(?![A-Za-z0-9_$])"
)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

# Serialized form of a reference that was shifted off the grid. Lexed as a
# CELL_REF token so rewritten formulas survive the serialize -> parse trip.
REF_ERROR_LEXEME = "#REF!"


def tokenize(source: str) -> list[Token]:
    """Split a formula (leading ``=`` included) into tokens.

    Raises LexError with the byte position for any character outside the
    grammar, including unterminated strings.
    """
    # Cumulative byte offset of each character, so spans stay byte-accurate
    # for non-ASCII string literals.
    byte_at = [0]
    for ch in source:
        byte_at.append(byte_at[-1] + len(ch.encode("utf-8")))

    tokens: list[Token] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch == '"':
            j = i + 1
            parts: list[str] = []
            while True:
                if j >= n:
                    raise LexError(byte_at[n], "end of input")
                if source[j] == '"':
                    if j + 1 < n and source[j + 1] == '"':
                        parts.append('"')
                        j += 2
                        continue
                    j += 1
                    break
                parts.append(source[j])
                j += 1
            tokens.append(Token(TokenKind.STRING, source[i:j], byte_at[i], byte_at[j]))
            i = j
            continue
        if ch.isdigit():
            m = _NUMBER_RE.match(source, i)
            assert m is not None
            tokens.append(
                Token(TokenKind.NUMBER, m.group(), byte_at[i], byte_at[m.end()])
            )
            i = m.end()
            continue
        if ch == "#":
            if source.startswith(REF_ERROR_LEXEME, i):
                j = i + len(REF_ERROR_LEXEME)
                tokens.append(
                    Token(TokenKind.CELL_REF, REF_ERROR_LEXEME, byte_at[i], byte_at[j])
                )
                i = j
                continue
            raise LexError(byte_at[i], ch)
        if ch.isalpha() or ch in "_$":
            m = _CELL_REF_RE.match(source, i)
            if m is not None:
                tokens.append(
                    Token(TokenKind.CELL_REF, m.group(), byte_at[i], byte_at[m.end()])
                )
                i = m.end()
                continue
            m = _IDENT_RE.match(source, i)
            if m is not None:
                tokens.append(
                    Token(TokenKind.IDENT, m.group(), byte_at[i], byte_at[m.end()])
                )
                i = m.end()
                continue
            raise LexError(byte_at[i], ch)
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, byte_at[i], byte_at[i + 1]))
            i += 1
            continue
        raise LexError(byte_at[i], ch)
    return tokens
