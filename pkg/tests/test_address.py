from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridmate.address import (
    AddressError,
    CellAddress,
    column_letters,
    letters_to_column,
    parse_address,
)


def test_column_letter_basics():
    assert column_letters(1) == "A"
    assert column_letters(26) == "Z"
    assert column_letters(27) == "AA"
    assert column_letters(702) == "ZZ"
    assert letters_to_column("A") == 1
    assert letters_to_column("zz") == 702


def test_parse_and_render():
    addr = parse_address("B12")
    assert (addr.column, addr.row, addr.sheet) == (2, 12, None)
    assert addr.render() == "B12"
    qualified = parse_address("Sheet1!C3")
    assert qualified.sheet == "Sheet1"
    assert qualified.render() == "Sheet1!C3"
    quoted = parse_address("'April Expenses'!A1")
    assert quoted.sheet == "April Expenses"
    assert quoted.render() == "'April Expenses'!A1"


@pytest.mark.parametrize("bad", ["", "12", "A0", "A-1", "1A", "!A1", "A1B"])
def test_bad_addresses_raise(bad):
    with pytest.raises(AddressError):
        parse_address(bad)


def test_invalid_coordinates_raise():
    with pytest.raises(AddressError):
        CellAddress(0, 1)
    with pytest.raises(AddressError):
        CellAddress(1, 0)


@given(st.integers(1, 702), st.integers(1, 10**6))
def test_render_parse_round_trip(column, row):
    text = CellAddress(column, row).render()
    assert parse_address(text) == CellAddress(column, row)


@given(st.integers(1, 702), st.integers(1, 10**6),
       st.sampled_from(["Sheet1", "My Sheet", "Bob's Data", "x_2"]))
def test_sheet_qualified_round_trip(column, row, sheet):
    addr = CellAddress(column, row, sheet)
    assert parse_address(addr.render()) == addr
