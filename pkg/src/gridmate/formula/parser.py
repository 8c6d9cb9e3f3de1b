"""Formula parser.

Grammar (functions are case-insensitive; whitespace free between tokens):

    formula    := "=" expr EOF
    expr       := concat (("=" | "<>" | "<" | "<=" | ">" | ">=") concat)*
    concat     := additive ("&" additive)*
    additive   := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := ("-" | "+")* primary
    primary    := NUMBER | STRING | TRUE | FALSE | reference | call | "(" expr ")"
    call       := NAME "(" [expr ("," expr)*] ")"
    reference  := [SHEET "!"] (COLUMN ":" COLUMN | ADDRESS [":" ADDRESS])

Strings are double-quoted with "" as the escape for an embedded quote.
Arity is enforced at parse time for the known function set; unknown
function names parse fine and evaluate to #NAME?.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from gridmate.address import CellAddress, letters_to_column
from gridmate.formula.ast import (
    Binary,
    CellRef,
    ColumnRef,
    FormulaAst,
    FunctionCall,
    Literal,
    RangeRef,
)

KNOWN_FUNCTIONS = {
    "SUM", "AVERAGE", "COUNT", "MIN", "MAX",
    "IF", "SUMIF", "SUMIFS", "COUNTIF", "COUNTIFS",
}


class ParseError(ValueError):
    """Malformed formula text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ArityError(ParseError):
    """A known function was called with an illegal argument count."""


@dataclass(frozen=True)
class _Token:
    kind: str  # number string name address column op punct end
    text: str
    position: int


_TOKEN_RES = [
    ("number", re.compile(r"\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")),
    ("column", re.compile(r"(?:'(?:[^']|'')+'!|[A-Za-z_][A-Za-z0-9_]*!)?[A-Za-z]{1,3}:[A-Za-z]{1,3}(?![A-Za-z0-9(])")),
    ("address", re.compile(r"(?:'(?:[^']|'')+'!|[A-Za-z_][A-Za-z0-9_]*!)?[A-Za-z]{1,3}[1-9][0-9]*(?![A-Za-z0-9(])")),
    ("name", re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")),
    ("op", re.compile(r"<=|>=|<>|[=<>+\-*/&]")),
    ("punct", re.compile(r"[(),:]")),
]


def _tokenize(text: str, offset: int) -> list[_Token]:
    tokens: list[_Token] = []
    i = offset
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == '"':
            j = i + 1
            chunks: list[str] = []
            while True:
                if j >= n:
                    raise ParseError("unterminated string", i)
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        chunks.append('"')
                        j += 2
                        continue
                    break
                chunks.append(text[j])
                j += 1
            tokens.append(_Token("string", "".join(chunks), i))
            i = j + 1
            continue
        for kind, regex in _TOKEN_RES:
            match = regex.match(text, i)
            if match:
                tokens.append(_Token(kind, match.group(0), i))
                i = match.end()
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


def _split_sheet(text: str) -> tuple[str | None, str]:
    if "!" not in text:
        return None, text
    sheet_part, _, body = text.rpartition("!")
    if sheet_part.startswith("'"):
        return sheet_part[1:-1].replace("''", "'"), body
    return sheet_part, body


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, kind: str, text: str | None = None) -> _Token:
        token = self.peek()
        if token.kind != kind or (text is not None and token.text != text):
            wanted = text or kind
            raise ParseError(f"expected {wanted!r}, found {token.text or 'end of input'!r}", token.position)
        return self.advance()

    def parse_expr(self) -> FormulaAst:
        node = self.parse_concat()
        while self.peek().kind == "op" and self.peek().text in ("=", "<>", "<", "<=", ">", ">="):
            op = self.advance().text
            node = Binary(op, node, self.parse_concat())
        return node

    def parse_concat(self) -> FormulaAst:
        node = self.parse_additive()
        while self.peek().kind == "op" and self.peek().text == "&":
            self.advance()
            node = Binary("&", node, self.parse_additive())
        return node

    def parse_additive(self) -> FormulaAst:
        node = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance().text
            node = Binary(op, node, self.parse_term())
        return node

    def parse_term(self) -> FormulaAst:
        node = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/"):
            op = self.advance().text
            node = Binary(op, node, self.parse_unary())
        return node

    def parse_unary(self) -> FormulaAst:
        token = self.peek()
        if token.kind == "op" and token.text in ("-", "+"):
            self.advance()
            operand = self.parse_unary()
            if token.text == "+":
                return operand
            if isinstance(operand, Literal) and isinstance(operand.value, float):
                return Literal(-operand.value)
            return Binary("-", Literal(0.0), operand)
        return self.parse_primary()

    def parse_primary(self) -> FormulaAst:
        token = self.peek()
        if token.kind == "number":
            self.advance()
            return Literal(float(token.text))
        if token.kind == "string":
            self.advance()
            return Literal(token.text)
        if token.kind == "column":
            self.advance()
            sheet, body = _split_sheet(token.text)
            start_text, _, end_text = body.partition(":")
            start = letters_to_column(start_text)
            end = letters_to_column(end_text)
            if start > end:
                start, end = end, start
            return ColumnRef(start, end, sheet)
        if token.kind == "address":
            self.advance()
            sheet, body = _split_sheet(token.text)
            start = _parse_body_address(body, sheet, token.position)
            if self.peek().kind == "punct" and self.peek().text == ":":
                self.advance()
                end_token = self.expect("address")
                end_sheet, end_body = _split_sheet(end_token.text)
                if end_sheet is not None:
                    raise ParseError("sheet name not allowed on range end", end_token.position)
                end = _parse_body_address(end_body, sheet, end_token.position)
                return _normalized_range(start, end)
            return CellRef(start)
        if token.kind == "name":
            if token.text.upper() == "TRUE":
                self.advance()
                return Literal(True)
            if token.text.upper() == "FALSE":
                self.advance()
                return Literal(False)
            return self.parse_call()
        if token.kind == "punct" and token.text == "(":
            self.advance()
            node = self.parse_expr()
            self.expect("punct", ")")
            return node
        raise ParseError(f"unexpected {token.text or 'end of input'!r}", token.position)

    def parse_call(self) -> FormulaAst:
        name_token = self.expect("name")
        name = name_token.text.upper()
        self.expect("punct", "(")
        args: list[FormulaAst] = []
        if not (self.peek().kind == "punct" and self.peek().text == ")"):
            args.append(self.parse_expr())
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.advance()
                args.append(self.parse_expr())
        self.expect("punct", ")")
        _check_arity(name, len(args), name_token.position)
        return FunctionCall(name, tuple(args))


def _parse_body_address(body: str, sheet: str | None, position: int) -> CellAddress:
    match = re.match(r"^([A-Za-z]{1,3})([1-9][0-9]*)$", body)
    if not match:
        raise ParseError(f"bad cell address {body!r}", position)
    return CellAddress(letters_to_column(match.group(1)), int(match.group(2)), sheet)


def _normalized_range(start: CellAddress, end: CellAddress) -> RangeRef:
    lo = CellAddress(min(start.column, end.column), min(start.row, end.row), start.sheet)
    hi = CellAddress(max(start.column, end.column), max(start.row, end.row), start.sheet)
    return RangeRef(lo, hi)


def _check_arity(name: str, count: int, position: int) -> None:
    if name not in KNOWN_FUNCTIONS:
        return
    if name in ("SUM", "AVERAGE", "COUNT", "MIN", "MAX") and count < 1:
        raise ArityError(f"{name} needs at least 1 argument, got {count}", position)
    if name == "IF" and count not in (2, 3):
        raise ArityError(f"IF takes 2 or 3 arguments, got {count}", position)
    if name in ("SUMIF", "COUNTIF") and count not in (2, 3):
        raise ArityError(f"{name} takes 2 or 3 arguments, got {count}", position)
    if name in ("SUMIFS", "COUNTIFS"):
        minimum = 3 if name == "SUMIFS" else 2
        parity = 1 if name == "SUMIFS" else 0
        if count < minimum or count % 2 != parity:
            shape = "an odd count >= 3" if name == "SUMIFS" else "an even count >= 2"
            raise ArityError(f"{name} takes {shape} of arguments, got {count}", position)


def parse_formula(text: str) -> FormulaAst:
    """Parse formula text (must begin with "=") into an AST."""
    if not text.startswith("="):
        raise ParseError("formula must begin with '='", 0)
    parser = _Parser(_tokenize(text, 1))
    ast = parser.parse_expr()
    end = parser.peek()
    if end.kind != "end":
        raise ParseError(f"unexpected trailing input {end.text!r}", end.position)
    return ast
