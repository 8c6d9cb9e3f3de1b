"""The criteria mini-language used by SUMIF(S)/COUNTIF(S), filters, and highlights.

A criteria string is an optional comparison operator prefix followed by an
operand: ">=2023-04-01", "<>0", "Operational". Bare strings mean equality.
The operand is coerced to a number or ISO date when it parses as one, else
kept as text. Every string parses to some criteria (totality).

Matching rules:
  - number operands match numeric cells, date operands match date cells;
    text operands compare case-insensitively against the cell's text
  - Empty cells match only text criteria whose operand is "" under Eq
  - error cells never match
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass
from enum import Enum

from gridmate.values import CellError, Value, parse_iso_date


class CriteriaOp(Enum):
    EQ = "="
    NE = "<>"
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="


@dataclass(frozen=True)
class Criteria:
    op: CriteriaOp
    operand: Value

    def render(self) -> str:
        from gridmate.values import format_value

        prefix = "" if self.op is CriteriaOp.EQ else self.op.value
        return prefix + format_value(self.operand)


# Longest prefixes first so ">=" wins over ">".
_OP_PREFIXES = [
    (">=", CriteriaOp.GE),
    ("<=", CriteriaOp.LE),
    ("<>", CriteriaOp.NE),
    (">", CriteriaOp.GT),
    ("<", CriteriaOp.LT),
    ("=", CriteriaOp.EQ),
]


def parse_criteria(text: str) -> Criteria:
    op = CriteriaOp.EQ
    rest = text
    for prefix, candidate in _OP_PREFIXES:
        if text.startswith(prefix):
            op = candidate
            rest = text[len(prefix):]
            break
    return Criteria(op, _coerce_operand(rest))


def _coerce_operand(text: str) -> Value:
    stripped = text.strip()
    date = parse_iso_date(stripped)
    if date is not None:
        return date
    try:
        return float(stripped)
    except ValueError:
        return text


def _compare(op: CriteriaOp, delta: float) -> bool:
    if op is CriteriaOp.EQ:
        return delta == 0
    if op is CriteriaOp.NE:
        return delta != 0
    if op is CriteriaOp.LT:
        return delta < 0
    if op is CriteriaOp.LE:
        return delta <= 0
    if op is CriteriaOp.GT:
        return delta > 0
    return delta >= 0


def criteria_matches(criteria: Criteria, value: Value) -> bool:
    """Test one cell value against the criteria."""
    if isinstance(value, CellError):
        return False
    operand = criteria.operand
    if isinstance(operand, float):
        if isinstance(value, bool) or not isinstance(value, float):
            return False
        return _compare(criteria.op, _sign(value - operand))
    if isinstance(operand, datetime.date):
        if not isinstance(value, datetime.date):
            return False
        return _compare(criteria.op, _sign_ord(value, operand))
    # Text operand: compare display-ish text, case-insensitively.
    text = operand if isinstance(operand, str) else str(operand)
    if value is None:
        cell_text = ""
    elif isinstance(value, bool):
        cell_text = "TRUE" if value else "FALSE"
    elif isinstance(value, str):
        cell_text = value
    else:
        return False
    left, right = cell_text.casefold(), text.casefold()
    return _compare(criteria.op, _sign_ord(left, right))


def _sign(x: float) -> float:
    return 0.0 if x == 0 else (1.0 if x > 0 else -1.0)


def _sign_ord(a, b) -> float:
    if a == b:
        return 0.0
    return 1.0 if a > b else -1.0
