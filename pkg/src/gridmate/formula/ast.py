"""Formula AST nodes and the canonical pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from gridmate.address import CellAddress, column_letters
from gridmate.values import Value, format_number

import datetime


@dataclass(frozen=True)
class Literal:
    value: Value


@dataclass(frozen=True)
class CellRef:
    address: CellAddress


@dataclass(frozen=True)
class RangeRef:
    """Rectangular range, normalized so start <= end componentwise."""

    start: CellAddress
    end: CellAddress


@dataclass(frozen=True)
class ColumnRef:
    """Whole-column reference such as C:C or A:C."""

    start_column: int
    end_column: int
    sheet: str | None = None


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / = <> < <= > >= &
    left: "FormulaAst"
    right: "FormulaAst"


@dataclass(frozen=True)
class FunctionCall:
    name: str  # normalized upper-case
    args: tuple["FormulaAst", ...]


FormulaAst = Union[Literal, CellRef, RangeRef, ColumnRef, Binary, FunctionCall]

# Binding strength for the pretty-printer; mirrors the parser's precedence.
_PRECEDENCE = {
    "=": 1, "<>": 1, "<": 1, "<=": 1, ">": 1, ">=": 1,
    "&": 2,
    "+": 3, "-": 3,
    "*": 4, "/": 4,
}


def _literal_text(value: Value) -> str:
    if isinstance(value, str):
        return '"' + value.replace('"', '""') + '"'
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, float):
        return format_number(value)
    if isinstance(value, datetime.date):
        return '"' + value.isoformat() + '"'
    return ""


def _node_text(node: FormulaAst, parent_precedence: int) -> str:
    if isinstance(node, Literal):
        return _literal_text(node.value)
    if isinstance(node, CellRef):
        return node.address.render()
    if isinstance(node, RangeRef):
        return f"{node.start.render()}:{node.end.with_sheet(None).render()}"
    if isinstance(node, ColumnRef):
        prefix = f"{node.sheet}!" if node.sheet else ""
        return f"{prefix}{column_letters(node.start_column)}:{column_letters(node.end_column)}"
    if isinstance(node, Binary):
        precedence = _PRECEDENCE[node.op]
        left = _node_text(node.left, precedence)
        # Right operand is parenthesized at equal precedence to preserve
        # left-associative grouping through a reparse.
        right = _node_text(node.right, precedence + 1)
        text = f"{left}{node.op}{right}"
        if precedence < parent_precedence:
            return f"({text})"
        return text
    if isinstance(node, FunctionCall):
        args = ", ".join(_node_text(arg, 0) for arg in node.args)
        return f"{node.name}({args})"
    raise TypeError(f"unknown AST node: {node!r}")


def to_text(ast: FormulaAst) -> str:
    """Render an AST back to formula text (with the leading "=")."""
    return "=" + _node_text(ast, 0)
