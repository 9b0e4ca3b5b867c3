"""Recursive-descent parser for the formula token stream.

Grammar (left-associative, loosest binding first):

    formula = EQUALS concat
    concat  = addsub (AMP addsub)*
    addsub  = muldiv ((PLUS | MINUS) muldiv)*
    muldiv  = atom ((STAR | SLASH) atom)*
    atom    = NUMBER | STRING | ref (COLON ref)? | IDENT LPAREN args RPAREN
            | LPAREN concat RPAREN
"""

from __future__ import annotations

import re
from typing import Sequence

from .lexer import REF_ERROR_LEXEME, tokenize
from .nodes import (
    MAX_COL,
    MAX_ROW,
    Binary,
    Call,
    CellRef,
    FormulaAst,
    NumLit,
    Range,
    Ref,
    RefError,
    TextLit,
    letters_to_col,
)
from .tokens import Token, TokenKind


class ParseError(ValueError):
    def __init__(self, position: int, expected: str, found: str):
        self.position = position
        self.expected = expected
        self.found = found
        super().__init__(f"expected {expected} at byte offset {position}, found {found}")


_CALL_NAME_RE = re.compile(r"[A-Z][A-Z0-9_]*")
_REF_PARTS_RE = re.compile(
    r"(?:([A-Za-z_][A-Za-z0-9_]*)!)?(\$?)([A-Za-z]{1,3})(\$?)([0-9]+)"
)


def parse_source(source: str) -> FormulaAst:
    return parse(tokenize(source))


def parse(tokens: Sequence[Token]) -> FormulaAst:
    parser = _Parser(tokens)
    parser.expect(TokenKind.EQUALS, "'='")
    ast = parser.concat()
    if not parser.at_end():
        tok = parser.peek()
        assert tok is not None
        raise ParseError(tok.start, "end of formula", repr(tok.lexeme))
    return ast


class _Parser:
    def __init__(self, tokens: Sequence[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def _eof_position(self) -> int:
        return self.tokens[-1].end if self.tokens else 0

    def expect(self, kind: TokenKind, what: str) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(self._eof_position(), what, "end of input")
        if tok.kind is not kind:
            raise ParseError(tok.start, what, repr(tok.lexeme))
        self.pos += 1
        return tok

    def accept(self, kind: TokenKind) -> Token | None:
        tok = self.peek()
        if tok is not None and tok.kind is kind:
            self.pos += 1
            return tok
        return None

    def concat(self) -> FormulaAst:
        node = self.addsub()
        while self.accept(TokenKind.AMP):
            node = Binary("&", node, self.addsub())
        return node

    def addsub(self) -> FormulaAst:
        node = self.muldiv()
        while True:
            if self.accept(TokenKind.PLUS):
                node = Binary("+", node, self.muldiv())
            elif self.accept(TokenKind.MINUS):
                node = Binary("-", node, self.muldiv())
            else:
                return node

    def muldiv(self) -> FormulaAst:
        node = self.atom()
        while True:
            if self.accept(TokenKind.STAR):
                node = Binary("*", node, self.atom())
            elif self.accept(TokenKind.SLASH):
                node = Binary("/", node, self.atom())
            else:
                return node

    def atom(self) -> FormulaAst:
        tok = self.peek()
        if tok is None:
            raise ParseError(self._eof_position(), "an expression", "end of input")
        if tok.kind is TokenKind.NUMBER:
            self.pos += 1
            return NumLit(float(tok.lexeme))
        if tok.kind is TokenKind.STRING:
            self.pos += 1
            return TextLit(tok.lexeme[1:-1].replace('""', '"'))
        if tok.kind is TokenKind.CELL_REF:
            self.pos += 1
            if tok.lexeme == REF_ERROR_LEXEME:
                return RefError()
            start = self._cell_ref(tok)
            if self.accept(TokenKind.COLON):
                end_tok = self.expect(TokenKind.CELL_REF, "a cell reference")
                if end_tok.lexeme == REF_ERROR_LEXEME:
                    raise ParseError(end_tok.start, "a cell reference", "#REF!")
                end = self._cell_ref(end_tok)
                return self._range(start, end, end_tok)
            return Ref(start)
        if tok.kind is TokenKind.IDENT:
            self.pos += 1
            name = tok.lexeme.upper()
            if not _CALL_NAME_RE.fullmatch(name):
                raise ParseError(tok.start, "a function name", repr(tok.lexeme))
            self.expect(TokenKind.LPAREN, "'('")
            args: list[FormulaAst] = []
            if self.accept(TokenKind.RPAREN) is None:
                args.append(self.concat())
                while self.accept(TokenKind.COMMA):
                    args.append(self.concat())
                self.expect(TokenKind.RPAREN, "')'")
            return Call(name, tuple(args))
        if tok.kind is TokenKind.LPAREN:
            self.pos += 1
            node = self.concat()
            self.expect(TokenKind.RPAREN, "')'")
            return node
        raise ParseError(tok.start, "an expression", repr(tok.lexeme))

    def _cell_ref(self, tok: Token) -> CellRef:
        m = _REF_PARTS_RE.fullmatch(tok.lexeme)
        assert m is not None, tok.lexeme
        sheet, col_abs, letters, row_abs, digits = m.groups()
        col = letters_to_col(letters)
        row = int(digits) - 1
        if col > MAX_COL or not (0 <= row <= MAX_ROW):
            raise ParseError(
                tok.start, "a cell reference within grid bounds", repr(tok.lexeme)
            )
        return CellRef(
            col=col,
            row=row,
            col_absolute=bool(col_abs),
            row_absolute=bool(row_abs),
            sheet=sheet,
        )

    def _range(self, start: CellRef, end: CellRef, end_tok: Token) -> Range:
        if end.sheet is not None and end.sheet != start.sheet:
            raise ParseError(
                end_tok.start, "a range endpoint on the same sheet", repr(end_tok.lexeme)
            )
        # Normalize so start <= end per component; anchors travel with their
        # component. The end always drops the sheet qualifier.
        (c0, ca), (c1, cb) = sorted(
            [(start.col, start.col_absolute), (end.col, end.col_absolute)]
        )
        (r0, ra), (r1, rb) = sorted(
            [(start.row, start.row_absolute), (end.row, end.row_absolute)]
        )
        return Range(
            CellRef(c0, r0, ca, ra, start.sheet),
            CellRef(c1, r1, cb, rb, None),
        )
