from __future__ import annotations

import datetime

from gridmate.values import (
    DIV0,
    CellError,
    ErrorKind,
    coerce_literal,
    format_value,
    parse_iso_date,
)


def test_format_value_display_forms():
    assert format_value(None) == ""
    assert format_value(True) == "TRUE"
    assert format_value(False) == "FALSE"
    assert format_value(1110.0) == "1110"
    assert format_value(0.5) == "0.5"
    assert format_value(datetime.date(2023, 4, 1)) == "2023-04-01"
    assert format_value("Excellent") == "Excellent"
    assert format_value(DIV0) == "#DIV/0!"


def test_float_noise_is_rounded_away():
    noisy = 0.1 + 0.2  # 0.30000000000000004
    assert noisy != 0.3
    assert format_value(noisy) == "0.3"
    assert format_value(10 * 100 + (11 - 10) * 100 * 1.1) == "1110"


def test_coerce_literal():
    assert coerce_literal("") is None
    assert coerce_literal("   ") is None
    assert coerce_literal("42") == 42.0
    assert coerce_literal("-3.5") == -3.5
    assert coerce_literal("$1,250.00") == 1250.0
    assert coerce_literal("TRUE") is True
    assert coerce_literal("false") is False
    assert coerce_literal("2023-04-30") == datetime.date(2023, 4, 30)
    assert coerce_literal("Cloud hosting") == "Cloud hosting"
    assert coerce_literal("3,4") == "3,4"  # not a grouped number
    assert coerce_literal("inf") == "inf"  # no float-special backdoors


def test_parse_iso_date_strictness():
    assert parse_iso_date("2023-04-01") == datetime.date(2023, 4, 1)
    assert parse_iso_date("2023-13-01") is None
    assert parse_iso_date("04/01/2023") is None


def test_error_kinds_render():
    for kind in ErrorKind:
        assert format_value(CellError(kind)) == kind.value
