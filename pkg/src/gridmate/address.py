"""A1-style cell addresses: parsing, rendering, and column-letter math."""

from __future__ import annotations

import re
from dataclasses import dataclass


class AddressError(ValueError):
    """Raised for text that is not a well-formed A1-style address."""


@dataclass(frozen=True)
class CellAddress:
    """A 1-based (column, row) grid position, optionally sheet-qualified."""

    column: int
    row: int
    sheet: str | None = None

    def __post_init__(self) -> None:
        if self.column < 1 or self.row < 1:
            raise AddressError(f"column and row must be >= 1, got ({self.column}, {self.row})")

    def render(self) -> str:
        text = f"{column_letters(self.column)}{self.row}"
        if self.sheet is not None:
            return f"{_render_sheet(self.sheet)}!{text}"
        return text

    def with_sheet(self, sheet: str | None) -> "CellAddress":
        return CellAddress(self.column, self.row, sheet)

    def __str__(self) -> str:
        return self.render()


def column_letters(column: int) -> str:
    """1 -> A, 26 -> Z, 27 -> AA, ..."""
    if column < 1:
        raise AddressError(f"column must be >= 1, got {column}")
    letters = ""
    while column:
        column, rem = divmod(column - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


def letters_to_column(letters: str) -> int:
    if not letters or not letters.isalpha():
        raise AddressError(f"bad column letters: {letters!r}")
    column = 0
    for ch in letters.upper():
        column = column * 26 + (ord(ch) - ord("A") + 1)
    return column


_BARE_ADDRESS = re.compile(r"^([A-Za-z]{1,3})([1-9][0-9]*)$")
_PLAIN_SHEET = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _render_sheet(sheet: str) -> str:
    if _PLAIN_SHEET.match(sheet):
        return sheet
    return "'" + sheet.replace("'", "''") + "'"


def parse_address(text: str) -> CellAddress:
    """Parse "B12", "Sheet1!B12", or "'My Sheet'!B12"."""
    sheet = None
    body = text.strip()
    if "!" in body:
        sheet_part, _, body = body.rpartition("!")
        if sheet_part.startswith("'") and sheet_part.endswith("'") and len(sheet_part) >= 2:
            sheet = sheet_part[1:-1].replace("''", "'")
        else:
            sheet = sheet_part
        if not sheet:
            raise AddressError(f"empty sheet name in address: {text!r}")
    match = _BARE_ADDRESS.match(body)
    if not match:
        raise AddressError(f"not an A1-style address: {text!r}")
    return CellAddress(letters_to_column(match.group(1)), int(match.group(2)), sheet)
