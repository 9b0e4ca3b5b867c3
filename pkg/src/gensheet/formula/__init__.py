from .lexer import tokenize
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
    col_to_letters,
    format_number,
    letters_to_col,
    rewrite_refs,
    serialize,
    strip_sheet,
)
from .parser import ParseError, parse, parse_source
from .tokens import LexError, Token, TokenKind

__all__ = [
    "MAX_COL",
    "MAX_ROW",
    "Binary",
    "Call",
    "CellRef",
    "FormulaAst",
    "LexError",
    "NumLit",
    "ParseError",
    "Range",
    "Ref",
    "RefError",
    "TextLit",
    "Token",
    "TokenKind",
    "col_to_letters",
    "format_number",
    "letters_to_col",
    "parse",
    "parse_source",
    "rewrite_refs",
    "serialize",
    "strip_sheet",
    "tokenize",
]
