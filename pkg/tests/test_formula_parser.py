from __future__ import annotations

import pytest
from hypothesis import given, settings

from gridmate.formula.ast import (
    Binary,
    CellRef,
    ColumnRef,
    FunctionCall,
    Literal,
    RangeRef,
    to_text,
)
from gridmate.formula.parser import ArityError, ParseError, parse_formula

from strategies import formulas_for, table_worlds


def test_sumifs_motivating_formula():
    ast = parse_formula(
        '=SUMIFS(C:C, A:A, ">=2023-04-01", A:A, "<=2023-04-30", B:B, "Operational")'
    )
    assert isinstance(ast, FunctionCall) and ast.name == "SUMIFS"
    assert len(ast.args) == 7
    assert ast.args[0] == ColumnRef(3, 3)
    assert ast.args[1] == ColumnRef(1, 1)
    assert ast.args[2] == Literal(">=2023-04-01")
    assert ast.args[5] == ColumnRef(2, 2)
    assert ast.args[6] == Literal("Operational")


def test_if_with_comparison_condition():
    ast = parse_formula('=IF(SUM(B2:H2)=100, "Excellent", SUM(B2:H2))')
    assert isinstance(ast, FunctionCall) and ast.name == "IF"
    condition = ast.args[0]
    assert isinstance(condition, Binary) and condition.op == "="
    assert isinstance(condition.left, FunctionCall) and condition.left.name == "SUM"
    span = condition.left.args[0]
    assert isinstance(span, RangeRef)
    assert span.start.render() == "B2"
    assert span.end.render() == "H2"
    assert condition.right == Literal(100.0)
    assert ast.args[1] == Literal("Excellent")


def test_unclosed_call_reports_position():
    with pytest.raises(ParseError) as excinfo:
        parse_formula("=SUM(")
    assert excinfo.value.position == 5


def test_missing_equals_rejected():
    with pytest.raises(ParseError):
        parse_formula("SUM(A1:A2)")


@pytest.mark.parametrize("bad", [
    "=IF(1)",
    "=IF(1,2,3,4)",
    "=SUMIFS(C:C, A:A)",
    "=SUMIFS(C:C)",
    "=COUNTIFS(A:A)",
    "=SUM()",
    "=SUMIF(A:A)",
])
def test_arity_errors(bad):
    with pytest.raises(ArityError):
        parse_formula(bad)


def test_unknown_function_parses():
    ast = parse_formula("=VLOOKUP(A1, B:C, 2)")
    assert isinstance(ast, FunctionCall) and ast.name == "VLOOKUP"


def test_case_insensitive_function_names():
    assert parse_formula("=sum(A1:A2)") == parse_formula("=SUM(A1:A2)")


def test_string_escapes():
    ast = parse_formula('="say ""hi"""')
    assert ast == Literal('say "hi"')
    assert to_text(ast) == '="say ""hi"""'


def test_ranges_normalize():
    assert parse_formula("=SUM(B4:B2)") == parse_formula("=SUM(B2:B4)")
    assert parse_formula("=SUM(C:A)") == parse_formula("=SUM(A:C)")


def test_precedence_and_parens():
    ast = parse_formula("=1+2*3")
    assert isinstance(ast, Binary) and ast.op == "+"
    assert isinstance(ast.right, Binary) and ast.right.op == "*"
    grouped = parse_formula("=(1+2)*3")
    assert isinstance(grouped, Binary) and grouped.op == "*"


def test_unary_minus():
    assert parse_formula("=-3") == Literal(-3.0)
    negated = parse_formula("=-A1")
    assert isinstance(negated, Binary) and negated.op == "-"
    assert negated.left == Literal(0.0)


def test_concat_operator():
    ast = parse_formula('="a"&"b"&"c"')
    assert isinstance(ast, Binary) and ast.op == "&"


def test_source_whitespace_is_insignificant():
    compact = parse_formula("=SUM(A1:A3)+1")
    spaced = parse_formula("= SUM( A1 : A3 ) + 1")
    assert compact == spaced


@settings(max_examples=150)
@given(table_worlds().flatmap(lambda w: formulas_for(w)))
def test_pretty_print_round_trip(formula_text):
    first = parse_formula(formula_text)
    printed = to_text(first)
    assert parse_formula(printed) == first
