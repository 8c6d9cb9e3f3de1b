"""Cell value lattice: numbers, text, booleans, dates, empties, and errors.

A cell value is one of the plain Python types below; no wrapper objects are
used except for errors. ``bool`` must be tested before numbers everywhere
(it subclasses ``int``).

    Number  -> float (64-bit float semantics)
    Text    -> str
    Boolean -> bool
    Date    -> datetime.date (ISO-8601 calendar dates)
    Empty   -> None
    Error   -> CellError
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass
from enum import Enum
from typing import Union


class ErrorKind(Enum):
    DIV0 = "#DIV/0!"
    REF = "#REF!"
    VALUE = "#VALUE!"
    NAME = "#NAME?"
    CYCLE = "#CYCLE!"


@dataclass(frozen=True)
class CellError:
    kind: ErrorKind

    def __str__(self) -> str:
        return self.kind.value


Value = Union[float, str, bool, datetime.date, None, CellError]

DIV0 = CellError(ErrorKind.DIV0)
REF_ERROR = CellError(ErrorKind.REF)
VALUE_ERROR = CellError(ErrorKind.VALUE)
NAME_ERROR = CellError(ErrorKind.NAME)
CYCLE_ERROR = CellError(ErrorKind.CYCLE)

_ISO_DATE = "%Y-%m-%d"


def is_number(value: Value) -> bool:
    return isinstance(value, float) and not isinstance(value, bool)


def is_error(value: Value) -> bool:
    return isinstance(value, CellError)


def parse_iso_date(text: str) -> datetime.date | None:
    """Parse a strict YYYY-MM-DD date, or return None."""
    try:
        return datetime.datetime.strptime(text.strip(), _ISO_DATE).date()
    except ValueError:
        return None


def format_number(x: float) -> str:
    """Display form of a number, rounded to 15 significant digits.

    Spreadsheet convention: binary-float noise beyond 15 significant digits
    is invisible, so 10*100+(11-10)*100*1.1 displays as "1110" rather than
    "1110.0000000000002". Integral values drop the trailing ".0".
    """
    rounded = float(f"{x:.15g}")
    if rounded == int(rounded) and abs(rounded) < 1e15:
        return str(int(rounded))
    return repr(rounded)


def format_value(value: Value) -> str:
    """Render any cell value as its display string."""
    if value is None:
        return ""
    if isinstance(value, CellError):
        return value.kind.value
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, float):
        return format_number(value)
    if isinstance(value, datetime.date):
        return value.isoformat()
    return value


_GROUPED_NUMBER = re.compile(r"^-?\$?-?\d{1,3}(?:,\d{3})+(?:\.\d+)?$")
_PLAIN_NUMBER = re.compile(r"^-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def coerce_literal(text: str) -> Value:
    """Interpret raw cell text as the most specific literal value.

    Recognizes numbers (with optional leading $ and grouped thousands
    separators), ISO dates, TRUE/FALSE, and leaves everything else as text.
    Empty or whitespace-only text is Empty.
    """
    stripped = text.strip()
    if not stripped:
        return None
    if stripped.upper() == "TRUE":
        return True
    if stripped.upper() == "FALSE":
        return False
    date = parse_iso_date(stripped)
    if date is not None:
        return date
    numeric = stripped
    if _GROUPED_NUMBER.match(numeric):
        numeric = numeric.replace(",", "")
    if numeric.startswith("$"):
        numeric = numeric[1:]
    elif numeric.startswith("-$"):
        numeric = "-" + numeric[2:]
    if _PLAIN_NUMBER.match(numeric):
        return float(numeric)
    return stripped
