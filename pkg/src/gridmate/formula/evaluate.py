"""Formula evaluation against a workbook.

Evaluation never raises: every failure surfaces as an error value
(#DIV/0!, #REF!, #VALUE!, #NAME?). Semantics follow spreadsheet
convention:

  - Empty coerces to 0 in arithmetic; text that parses as a number is
    coerced, other text is #VALUE!; booleans count as 1/0
  - range aggregation considers numeric cells, skips text/booleans/dates/
    empties, and propagates error cells
  - comparisons order values of the same type naturally (dates by
    calendar, text case-insensitively); across types a fixed type rank
    applies (number < date < text < boolean) and "=" across types is FALSE
  - whole-column references resolve to the data cells of Data-kind tables
    on the context sheet, excluding header and aggregation rows; multi-
    column criteria scans align by grid row, reading gaps as Empty
  - dividing by zero yields #DIV/0!, unknown sheets #REF!, unknown
    functions #NAME?
"""

from __future__ import annotations

import datetime

from gridmate.address import CellAddress
from gridmate.formula.ast import (
    Binary,
    CellRef,
    ColumnRef,
    FormulaAst,
    FunctionCall,
    Literal,
    RangeRef,
)
from gridmate.formula.criteria import Criteria, criteria_matches, parse_criteria
from gridmate.values import (
    DIV0,
    NAME_ERROR,
    REF_ERROR,
    VALUE_ERROR,
    CellError,
    Value,
    format_value,
    is_error,
)
from gridmate.workbook import Sheet, TableKind, UnknownEntityError, Workbook, grid_value


def evaluate(ast: FormulaAst, workbook: Workbook, context_sheet: str) -> Value:
    """Evaluate an AST; pure given the workbook's current cell values."""
    try:
        sheet = workbook.sheet(context_sheet)
    except UnknownEntityError:
        return REF_ERROR
    return _eval(ast, workbook, sheet)


def resolve_column_ref(ref: ColumnRef, workbook: Workbook, context_sheet: str) -> list[CellAddress]:
    """Addresses a whole-column reference covers, in row-major order.

    Data cells of Data-kind tables on the sheet whose grid column falls in
    the referenced span, minus header and aggregation rows. Insight tables
    are summaries, not source data, so their cells are not re-aggregated
    (this also keeps a summary formula from reading its own column).
    """
    try:
        sheet = workbook.sheet(ref.sheet or context_sheet)
    except UnknownEntityError:
        return []
    addresses: list[CellAddress] = []
    for table in sheet.tables:
        if table.kind is not TableKind.DATA:
            continue
        skip_rows = table.aggregation_row_indexes(sheet)
        col_lo, _, col_hi, _ = table.rect()
        for col in range(max(col_lo, ref.start_column), min(col_hi, ref.end_column) + 1):
            for row_index in range(len(table.rows)):
                if row_index in skip_rows:
                    continue
                addresses.append(table.address_of(row_index, col - col_lo))
    addresses.sort(key=lambda a: (a.row, a.column))
    return addresses


def _sheet_for(ref_sheet: str | None, workbook: Workbook, sheet: Sheet) -> Sheet | None:
    if ref_sheet is None:
        return sheet
    try:
        return workbook.sheet(ref_sheet)
    except UnknownEntityError:
        return None


def _cell_value(addr: CellAddress, workbook: Workbook, sheet: Sheet) -> Value:
    target = _sheet_for(addr.sheet, workbook, sheet)
    if target is None:
        return REF_ERROR
    return grid_value(target, addr.column, addr.row)


def _range_values(ref: RangeRef, workbook: Workbook, sheet: Sheet) -> list[Value] | CellError:
    target = _sheet_for(ref.start.sheet, workbook, sheet)
    if target is None:
        return REF_ERROR
    values = []
    for row in range(ref.start.row, ref.end.row + 1):
        for col in range(ref.start.column, ref.end.column + 1):
            values.append(grid_value(target, col, row))
    return values


def _column_cells(ref: ColumnRef, workbook: Workbook, sheet: Sheet) -> list[tuple[int, Value]]:
    """(grid row, value) pairs a column reference covers, in row order."""
    target = _sheet_for(ref.sheet, workbook, sheet)
    if target is None:
        return []
    return [
        (addr.row, grid_value(target, addr.column, addr.row))
        for addr in resolve_column_ref(ref, workbook, target.name)
    ]


def _column_values(ref: ColumnRef, workbook: Workbook, sheet: Sheet) -> list[Value]:
    return [value for _, value in _column_cells(ref, workbook, sheet)]


def _to_number(value: Value) -> float | CellError:
    if value is None:
        return 0.0
    if isinstance(value, CellError):
        return value
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return VALUE_ERROR
    return VALUE_ERROR  # dates have no implicit numeric form here


_TYPE_RANK = {"number": 0, "date": 1, "text": 2, "bool": 3}


def _rank(value: Value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, float):
        return "number"
    if isinstance(value, datetime.date):
        return "date"
    return "text"


def _compare(op: str, left: Value, right: Value) -> Value:
    if is_error(left):
        return left
    if is_error(right):
        return right
    # Empty compares as the other side's neutral element.
    if left is None and right is None:
        left, right = 0.0, 0.0
    elif left is None:
        left = _neutral(right)
    elif right is None:
        right = _neutral(left)
    lr, rr = _rank(left), _rank(right)
    if lr != rr:
        delta = _TYPE_RANK[lr] - _TYPE_RANK[rr]
    else:
        lk = left.casefold() if isinstance(left, str) else left
        rk = right.casefold() if isinstance(right, str) else right
        delta = 0 if lk == rk else (1 if lk > rk else -1)
    same_type = lr == rr
    if op == "=":
        return same_type and delta == 0
    if op == "<>":
        return not (same_type and delta == 0)
    if op == "<":
        return delta < 0
    if op == "<=":
        return delta <= 0
    if op == ">":
        return delta > 0
    return delta >= 0


def _neutral(like: Value) -> Value:
    if isinstance(like, bool):
        return False
    if isinstance(like, str):
        return ""
    return 0.0  # numbers, and dates (empty never equals a date)


def _arithmetic(op: str, left: Value, right: Value) -> Value:
    ln = _to_number(left)
    if isinstance(ln, CellError):
        return ln
    rn = _to_number(right)
    if isinstance(rn, CellError):
        return rn
    if op == "+":
        return ln + rn
    if op == "-":
        return ln - rn
    if op == "*":
        return ln * rn
    if rn == 0:
        return DIV0
    return ln / rn


def _flatten_aggregate_args(
    args: tuple[FormulaAst, ...], workbook: Workbook, sheet: Sheet
) -> list[Value] | CellError:
    """Collect values for SUM-family arguments.

    Range and column arguments contribute raw cell values; scalar
    arguments are coerced to numbers (so SUM("x") is #VALUE! while text
    inside a referenced range is skipped, as spreadsheets do).
    """
    out: list[Value] = []
    for arg in args:
        if isinstance(arg, RangeRef):
            values = _range_values(arg, workbook, sheet)
            if isinstance(values, CellError):
                return values
            out.extend(values)
        elif isinstance(arg, ColumnRef):
            out.extend(_column_values(arg, workbook, sheet))
        else:
            value = _eval(arg, workbook, sheet)
            if is_error(value):
                return value
            number = _to_number(value)
            if isinstance(number, CellError):
                return number
            out.append(number)
    return out


def _numeric_items(values: list[Value]) -> list[float] | CellError:
    numbers = []
    for value in values:
        if is_error(value):
            return value
        if isinstance(value, bool) or not isinstance(value, float):
            continue
        numbers.append(value)
    return numbers


def _eval_aggregate(name: str, args: tuple[FormulaAst, ...], workbook: Workbook, sheet: Sheet) -> Value:
    values = _flatten_aggregate_args(args, workbook, sheet)
    if isinstance(values, CellError):
        return values
    numbers = _numeric_items(values)
    if isinstance(numbers, CellError):
        return numbers
    if name == "SUM":
        total = 0.0
        for x in numbers:
            total += x
        return total
    if name == "COUNT":
        return float(len(numbers))
    if name == "AVERAGE":
        if not numbers:
            return DIV0
        total = 0.0
        for x in numbers:
            total += x
        return total / len(numbers)
    if name == "MIN":
        return min(numbers) if numbers else 0.0
    if name == "MAX":
        return max(numbers) if numbers else 0.0
    raise AssertionError(name)


def _criteria_from_value(value: Value) -> Criteria | CellError:
    if is_error(value):
        return value
    if isinstance(value, str):
        return parse_criteria(value)
    from gridmate.formula.criteria import CriteriaOp

    return Criteria(CriteriaOp.EQ, value)


def _aligned_columns(
    refs: list[FormulaAst], workbook: Workbook, sheet: Sheet
) -> list[list[Value]] | CellError:
    """Evaluate SUMIFS/COUNTIFS range arguments into row-aligned vectors.

    Column references align by absolute grid row over the union of rows any
    referenced column covers; gaps read as Empty. Plain ranges must all
    share one shape.
    """
    if all(isinstance(ref, ColumnRef) for ref in refs):
        per_ref_rows: list[dict[int, Value]] = []
        all_rows: set[int] = set()
        for ref in refs:
            cells = dict(_column_cells(ref, workbook, sheet))  # type: ignore[arg-type]
            per_ref_rows.append(cells)
            all_rows.update(cells)
        rows = sorted(all_rows)
        return [[cells.get(row) for row in rows] for cells in per_ref_rows]

    vectors: list[list[Value]] = []
    for ref in refs:
        if isinstance(ref, RangeRef):
            values = _range_values(ref, workbook, sheet)
            if isinstance(values, CellError):
                return values
            vectors.append(values)
        elif isinstance(ref, ColumnRef):
            vectors.append(_column_values(ref, workbook, sheet))
        else:
            return VALUE_ERROR
    if len({len(v) for v in vectors}) > 1:
        return VALUE_ERROR
    return vectors


def _eval_conditional_aggregate(
    name: str, args: tuple[FormulaAst, ...], workbook: Workbook, sheet: Sheet
) -> Value:
    if name == "SUMIF":
        crit_ref, crit_arg = args[0], args[1]
        sum_ref = args[2] if len(args) == 3 else args[0]
        range_args = [sum_ref, crit_ref]
        pairs = [(1, crit_arg)]
    elif name == "COUNTIF":
        if len(args) != 2:
            return VALUE_ERROR
        range_args = [args[0]]
        pairs = [(0, args[1])]
    elif name == "SUMIFS":
        range_args = [args[0]] + [args[i] for i in range(1, len(args), 2)]
        pairs = [(1 + i, args[2 + 2 * i]) for i in range((len(args) - 1) // 2)]
    else:  # COUNTIFS
        range_args = [args[i] for i in range(0, len(args), 2)]
        pairs = [(i, args[2 * i + 1]) for i in range(len(args) // 2)]

    vectors = _aligned_columns(range_args, workbook, sheet)
    if isinstance(vectors, CellError):
        return vectors

    criteria: list[tuple[int, Criteria]] = []
    for vector_index, crit_node in pairs:
        crit_value = _eval(crit_node, workbook, sheet)
        crit = _criteria_from_value(crit_value)
        if isinstance(crit, CellError):
            return crit
        criteria.append((vector_index, crit))

    length = len(vectors[0]) if vectors else 0
    counting = name in ("COUNTIF", "COUNTIFS")
    total = 0.0
    count = 0
    for position in range(length):
        if all(criteria_matches(crit, vectors[idx][position]) for idx, crit in criteria):
            if counting:
                count += 1
            else:
                value = vectors[0][position]
                if is_error(value):
                    return value
                if isinstance(value, float) and not isinstance(value, bool):
                    total += value
    if counting:
        return float(count)
    return total


def _to_condition(value: Value) -> bool | CellError:
    if isinstance(value, CellError):
        return value
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return value != 0
    if value is None:
        return False
    return VALUE_ERROR


def _eval_function(node: FunctionCall, workbook: Workbook, sheet: Sheet) -> Value:
    name = node.name
    if name in ("SUM", "AVERAGE", "COUNT", "MIN", "MAX"):
        return _eval_aggregate(name, node.args, workbook, sheet)
    if name in ("SUMIF", "COUNTIF", "SUMIFS", "COUNTIFS"):
        return _eval_conditional_aggregate(name, node.args, workbook, sheet)
    if name == "IF":
        condition = _to_condition(_eval(node.args[0], workbook, sheet))
        if isinstance(condition, CellError):
            return condition
        if condition:
            return _eval(node.args[1], workbook, sheet)
        if len(node.args) == 3:
            return _eval(node.args[2], workbook, sheet)
        return False
    return NAME_ERROR


def _eval(node: FormulaAst, workbook: Workbook, sheet: Sheet) -> Value:
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, CellRef):
        return _cell_value(node.address, workbook, sheet)
    if isinstance(node, (RangeRef, ColumnRef)):
        return VALUE_ERROR  # bare ranges only make sense inside functions
    if isinstance(node, Binary):
        if node.op == "&":
            left = _eval(node.left, workbook, sheet)
            if is_error(left):
                return left
            right = _eval(node.right, workbook, sheet)
            if is_error(right):
                return right
            return format_value(left) + format_value(right)
        if node.op in ("=", "<>", "<", "<=", ">", ">="):
            return _compare(node.op, _eval(node.left, workbook, sheet), _eval(node.right, workbook, sheet))
        return _arithmetic(node.op, _eval(node.left, workbook, sheet), _eval(node.right, workbook, sheet))
    if isinstance(node, FunctionCall):
        return _eval_function(node, workbook, sheet)
    return VALUE_ERROR
