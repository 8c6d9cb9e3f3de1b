"""Reference interpreter for the oracle-equivalence tests.

Deliberately naive and structure-free: it reads a plain (col, row) -> value
dict, resolves whole columns by scanning the world's data-row span, and
re-implements the documented evaluation semantics with none of the engine's
machinery (no workbook objects, no dependency graphs, no shared helpers).
Only the AST node types and the error-value vocabulary are shared.
"""

from __future__ import annotations

import datetime

from gridmate.formula.ast import Binary, CellRef, ColumnRef, FunctionCall, Literal, RangeRef
from gridmate.values import CellError, ErrorKind

from strategies import TableWorld

_DIV0 = CellError(ErrorKind.DIV0)
_VALUE = CellError(ErrorKind.VALUE)
_NAME = CellError(ErrorKind.NAME)


def naive_eval(ast, world: TableWorld):
    grid = world.grid()
    data_rows = world.data_rows()
    return _ev(ast, grid, data_rows, world.n_cols)


def _ev(node, grid, data_rows, n_cols):
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, CellRef):
        return grid.get((node.address.column, node.address.row))
    if isinstance(node, (RangeRef, ColumnRef)):
        return _VALUE
    if isinstance(node, Binary):
        return _binary(node, grid, data_rows, n_cols)
    if isinstance(node, FunctionCall):
        return _function(node, grid, data_rows, n_cols)
    return _VALUE


def _cells_of(node, grid, data_rows, n_cols):
    """Raw values a range-like argument covers, scanning row by row."""
    if isinstance(node, RangeRef):
        values = []
        for row in range(node.start.row, node.end.row + 1):
            for col in range(node.start.column, node.end.column + 1):
                values.append(grid.get((col, row)))
        return values
    if isinstance(node, ColumnRef):
        values = []
        for row in data_rows:
            for col in range(node.start_column, node.end_column + 1):
                if 1 <= col <= n_cols:
                    values.append(grid.get((col, row)))
        return values
    return None


def _num(value):
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
            return _VALUE
    return _VALUE


def _binary(node, grid, data_rows, n_cols):
    left = _ev(node.left, grid, data_rows, n_cols)
    right = _ev(node.right, grid, data_rows, n_cols)
    if node.op == "&":
        for side in (left, right):
            if isinstance(side, CellError):
                return side
        return _disp(left) + _disp(right)
    if node.op in ("=", "<>", "<", "<=", ">", ">="):
        return _cmp(node.op, left, right)
    for side in (left, right):
        if isinstance(side, CellError):
            return side
    ln, rn = _num(left), _num(right)
    if isinstance(ln, CellError):
        return ln
    if isinstance(rn, CellError):
        return rn
    if node.op == "+":
        return ln + rn
    if node.op == "-":
        return ln - rn
    if node.op == "*":
        return ln * rn
    if rn == 0:
        return _DIV0
    return ln / rn


def _disp(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, float):
        rounded = float(f"{value:.15g}")
        if rounded == int(rounded) and abs(rounded) < 1e15:
            return str(int(rounded))
        return repr(rounded)
    if isinstance(value, datetime.date):
        return value.isoformat()
    return value


_RANKS = {"number": 0, "date": 1, "text": 2, "bool": 3}


def _kind(value):
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, float):
        return "number"
    if isinstance(value, datetime.date):
        return "date"
    return "text"


def _cmp(op, left, right):
    if isinstance(left, CellError):
        return left
    if isinstance(right, CellError):
        return right
    if left is None and right is None:
        left = right = 0.0
    elif left is None:
        left = "" if isinstance(right, str) else (False if isinstance(right, bool) else 0.0)
    elif right is None:
        right = "" if isinstance(left, str) else (False if isinstance(left, bool) else 0.0)
    lk, rk = _kind(left), _kind(right)
    if lk != rk:
        delta = _RANKS[lk] - _RANKS[rk]
        same = False
    else:
        a = left.casefold() if isinstance(left, str) else left
        b = right.casefold() if isinstance(right, str) else right
        delta = 0 if a == b else (1 if a > b else -1)
        same = True
    return {
        "=": same and delta == 0,
        "<>": not (same and delta == 0),
        "<": delta < 0,
        "<=": delta <= 0,
        ">": delta > 0,
        ">=": delta >= 0,
    }[op]


def _matches(criteria_text_or_value, cell):
    """Criteria semantics re-implemented: operator prefix, typed operand."""
    if isinstance(cell, CellError):
        return False
    if isinstance(criteria_text_or_value, str):
        text = criteria_text_or_value
        op = "="
        for prefix in (">=", "<=", "<>", ">", "<", "="):
            if text.startswith(prefix):
                op = prefix
                text = text[len(prefix):]
                break
        operand = _coerce(text)
    else:
        op, operand = "=", criteria_text_or_value
    if isinstance(operand, float):
        if not isinstance(cell, float) or isinstance(cell, bool):
            return False
        return _cmp(op, cell, operand)
    if isinstance(operand, datetime.date):
        if not isinstance(cell, datetime.date):
            return False
        return _cmp(op, cell, operand)
    text_operand = operand if isinstance(operand, str) else str(operand)
    if cell is None:
        cell_text = ""
    elif isinstance(cell, bool):
        cell_text = "TRUE" if cell else "FALSE"
    elif isinstance(cell, str):
        cell_text = cell
    else:
        return False
    return _cmp(op, cell_text.casefold(), text_operand.casefold())


def _coerce(text):
    stripped = text.strip()
    try:
        return datetime.datetime.strptime(stripped, "%Y-%m-%d").date()
    except ValueError:
        pass
    try:
        return float(stripped)
    except ValueError:
        return text


def _function(node, grid, data_rows, n_cols):
    name = node.name
    if name in ("SUM", "AVERAGE", "COUNT", "MIN", "MAX"):
        values = []
        for arg in node.args:
            covered = _cells_of(arg, grid, data_rows, n_cols)
            if covered is None:
                scalar = _ev(arg, grid, data_rows, n_cols)
                if isinstance(scalar, CellError):
                    return scalar
                scalar = _num(scalar)
                if isinstance(scalar, CellError):
                    return scalar
                values.append(scalar)
            else:
                values.extend(covered)
        numbers = []
        for value in values:
            if isinstance(value, CellError):
                return value
            if isinstance(value, float) and not isinstance(value, bool):
                numbers.append(value)
        if name == "SUM":
            total = 0.0
            for x in numbers:
                total += x
            return total
        if name == "COUNT":
            return float(len(numbers))
        if name == "AVERAGE":
            if not numbers:
                return _DIV0
            total = 0.0
            for x in numbers:
                total += x
            return total / len(numbers)
        if name == "MIN":
            return min(numbers) if numbers else 0.0
        return max(numbers) if numbers else 0.0

    if name in ("SUMIF", "COUNTIF", "SUMIFS", "COUNTIFS"):
        return _conditional(node, grid, data_rows, n_cols)
    if name == "IF":
        condition = _ev(node.args[0], grid, data_rows, n_cols)
        if isinstance(condition, CellError):
            return condition
        if isinstance(condition, bool):
            truthy = condition
        elif isinstance(condition, float):
            truthy = condition != 0
        elif condition is None:
            truthy = False
        else:
            return _VALUE
        if truthy:
            return _ev(node.args[1], grid, data_rows, n_cols)
        if len(node.args) == 3:
            return _ev(node.args[2], grid, data_rows, n_cols)
        return False
    return _NAME


def _vectors(refs, grid, data_rows, n_cols):
    """Row-aligned vectors for the conditional aggregates."""
    if all(isinstance(r, ColumnRef) for r in refs):
        maps = []
        rows = set()
        for ref in refs:
            cells = {}
            for row in data_rows:
                col = ref.start_column
                if 1 <= col <= n_cols:
                    cells[row] = grid.get((col, row))
            maps.append(cells)
            rows.update(cells)
        ordered = sorted(rows)
        return [[m.get(row) for row in ordered] for m in maps]
    vectors = []
    for ref in refs:
        covered = _cells_of(ref, grid, data_rows, n_cols)
        if covered is None:
            return _VALUE
        vectors.append(covered)
    if len({len(v) for v in vectors}) > 1:
        return _VALUE
    return vectors


def _conditional(node, grid, data_rows, n_cols):
    args = node.args
    name = node.name
    if name == "SUMIF":
        sum_ref = args[2] if len(args) == 3 else args[0]
        refs = [sum_ref, args[0]]
        crit_nodes = [(1, args[1])]
    elif name == "COUNTIF":
        if len(args) != 2:
            return _VALUE
        refs = [args[0]]
        crit_nodes = [(0, args[1])]
    elif name == "SUMIFS":
        refs = [args[0]] + [args[i] for i in range(1, len(args), 2)]
        crit_nodes = [(1 + i, args[2 + 2 * i]) for i in range((len(args) - 1) // 2)]
    else:
        refs = [args[i] for i in range(0, len(args), 2)]
        crit_nodes = [(i, args[2 * i + 1]) for i in range(len(args) // 2)]

    vectors = _vectors(refs, grid, data_rows, n_cols)
    if isinstance(vectors, CellError):
        return vectors
    criteria = []
    for index, crit_node in crit_nodes:
        crit_value = _ev(crit_node, grid, data_rows, n_cols)
        if isinstance(crit_value, CellError):
            return crit_value
        criteria.append((index, crit_value))

    counting = name in ("COUNTIF", "COUNTIFS")
    total = 0.0
    count = 0
    for position in range(len(vectors[0]) if vectors else 0):
        if all(_matches(crit, vectors[i][position]) for i, crit in criteria):
            if counting:
                count += 1
            else:
                hit = vectors[0][position]
                if isinstance(hit, CellError):
                    return hit
                if isinstance(hit, float) and not isinstance(hit, bool):
                    total += hit
    return float(count) if counting else total
