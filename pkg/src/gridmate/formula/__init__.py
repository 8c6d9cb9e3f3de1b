"""Formula language: parser, criteria mini-language, evaluator, recalculation."""

from gridmate.formula.ast import (
    Binary,
    CellRef,
    ColumnRef,
    FormulaAst,
    FunctionCall,
    Literal,
    RangeRef,
    to_text,
)
from gridmate.formula.criteria import Criteria, CriteriaOp, criteria_matches, parse_criteria
from gridmate.formula.evaluate import evaluate, resolve_column_ref
from gridmate.formula.parser import ArityError, ParseError, parse_formula
from gridmate.formula.recalc import RecalcReport, recalculate

__all__ = [
    "ArityError",
    "Binary",
    "CellRef",
    "ColumnRef",
    "Criteria",
    "CriteriaOp",
    "FormulaAst",
    "FunctionCall",
    "Literal",
    "ParseError",
    "RangeRef",
    "RecalcReport",
    "criteria_matches",
    "evaluate",
    "parse_criteria",
    "parse_formula",
    "recalculate",
    "resolve_column_ref",
    "to_text",
]
