"""The eight atomic spreadsheet tools.

Each tool has a machine-readable descriptor (name, parameters, behavior),
argument validation against the live workbook, and an executor. Validation
failures return a message naming the offending field and the legal values;
that text is fed back to the agent so it can regenerate the call.
Execution is atomic: any failure rolls the workbook back to the state
before the call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from gridmate.address import AddressError, parse_address
from gridmate.formula.criteria import parse_criteria
from gridmate.formula.parser import ParseError, parse_formula
from gridmate.formula.recalc import recalculate
from gridmate.values import Value
from gridmate.workbook import (
    NUMERIC_TYPES,
    ChartSpec,
    ChartType,
    FilterState,
    HighlightColor,
    HighlightRule,
    Row,
    Sheet,
    SortState,
    Table,
    TableKind,
    TableSpec,
    ValueType,
    Workbook,
    WorkbookError,
    build_column_specs,
    find_free_anchor,
    place_table,
    snapshot,
)

TOOLS_SCHEMA_VERSION = "tools/v1"

HIGHLIGHT_COLORS = ("red", "green", "yellow")
CHART_TYPES = ("line", "pie", "histogram")
TABLE_COLORS = ("blue", "green", "red", "yellow", "orange", "purple", "teal", "gray")
TABLE_KINDS = ("data", "insight")


class ToolStatus(Enum):
    OK = "ok"
    VALIDATION_ERROR = "validation_error"
    EXECUTION_ERROR = "execution_error"


@dataclass
class ToolCall:
    name: str
    args: dict[str, Any] = field(default_factory=dict)


@dataclass
class ToolResult:
    status: ToolStatus
    message: str
    state_revision: int

    @property
    def ok(self) -> bool:
        return self.status is ToolStatus.OK


@dataclass
class ValidationIssue:
    field_path: str
    message: str

    def render(self) -> str:
        return f"{self.field_path}: {self.message}"


@dataclass(frozen=True)
class _Param:
    name: str
    type: str  # string | boolean | array
    description: str
    required: bool = True
    enum: tuple[str, ...] | None = None


@dataclass(frozen=True)
class _Tool:
    name: str
    description: str
    params: tuple[_Param, ...]


_TOOLS: tuple[_Tool, ...] = (
    _Tool(
        "change_sheet_name",
        "Updates the sheet name to the new sheet name.",
        (
            _Param("from", "string", "Current sheet name."),
            _Param("to", "string", "New sheet name."),
        ),
    ),
    _Tool(
        "create_table",
        "Creates a table within the sheet with the given name and a list of values to include in the table.",
        (
            _Param("name", "string", "Name for the new table; must be unique in the workbook."),
            _Param("columns", "array", "Column headers, left to right."),
            _Param("rows", "array", "Rows of cell values; text starting with '=' is a formula."),
            _Param("kind", "string", "Role of the table in the sheet.", required=False, enum=TABLE_KINDS),
            _Param("sheet", "string", "Sheet to place the table on; defaults to the first sheet.", required=False),
            _Param("anchor", "string", "Explicit A1 anchor; defaults to the first free spot.", required=False),
        ),
    ),
    _Tool(
        "add_chart",
        "Creates a chart (line, pie, histogram) for the column in a table (for numeric data only).",
        (
            _Param("table", "string", "Table holding the data."),
            _Param("column", "string", "Header of the numeric column to chart."),
            _Param("chartType", "string", "Kind of chart to create.", enum=CHART_TYPES),
            _Param("title", "string", "Chart title.", required=False),
        ),
    ),
    _Tool(
        "sort_rows",
        "Sorts the table rows based on the values in the given column.",
        (
            _Param("table", "string", "Table to sort."),
            _Param("column", "string", "Header of the column supplying the sort keys."),
            _Param("ascending", "boolean", "Sort ascending when true; defaults to true.", required=False),
        ),
    ),
    _Tool(
        "filter_rows",
        "Filters the table to rows that match the given condition. This does not permanently delete rows from the tables.",
        (
            _Param("table", "string", "Table to filter."),
            _Param("column", "string", "Header of the column the condition applies to."),
            _Param("criteria", "string", "Condition such as '>=100', '<>0', or 'Operational'."),
        ),
    ),
    _Tool(
        "highlight_cell",
        "Highlights the cell in the color (red, green, or yellow).",
        (
            _Param("cell", "string", "A1 address of the cell; must fall inside a table."),
            _Param("color", "string", "Highlight color.", enum=HIGHLIGHT_COLORS),
        ),
    ),
    _Tool(
        "highlight_row",
        "Highlights the entire row in the color (red, green, or yellow) if any value in the row matches the condition.",
        (
            _Param("table", "string", "Table whose rows are highlighted."),
            _Param("column", "string", "Header of the column the condition applies to."),
            _Param("criteria", "string", "Condition a row must match to be highlighted."),
            _Param("color", "string", "Highlight color.", enum=HIGHLIGHT_COLORS),
        ),
    ),
    _Tool(
        "change_table_color",
        "Changes the color of the given table.",
        (
            _Param("table", "string", "Table to re-theme."),
            _Param("color", "string", "Theme color.", enum=TABLE_COLORS),
        ),
    ),
)

TOOL_NAMES = tuple(tool.name for tool in _TOOLS)


def tool_schemas() -> list[dict]:
    """Stable, deterministic descriptors for every tool."""
    return [
        {
            "name": tool.name,
            "description": tool.description,
            "parameters": [
                {
                    "name": param.name,
                    "type": param.type,
                    "description": param.description,
                    "required": param.required,
                    **({"enum": list(param.enum)} if param.enum else {}),
                }
                for param in tool.params
            ],
        }
        for tool in _TOOLS
    ]


def tool_schemas_document() -> dict:
    return {"schemaVersion": TOOLS_SCHEMA_VERSION, "tools": tool_schemas()}


def _tool_by_name(name: str) -> _Tool | None:
    for tool in _TOOLS:
        if tool.name == name:
            return tool
    return None


def validate_tool_call(call: ToolCall, workbook: Workbook) -> ValidationIssue | None:
    """None when the call is executable; otherwise the first problem found."""
    tool = _tool_by_name(call.name)
    if tool is None:
        return ValidationIssue("name", f"unknown tool {call.name!r}; legal tools: {', '.join(TOOL_NAMES)}")
    if not isinstance(call.args, dict):
        return ValidationIssue("args", "arguments must be an object")

    for param in tool.params:
        if param.name not in call.args:
            if param.required:
                return ValidationIssue(param.name, "required parameter is missing")
            continue
        value = call.args[param.name]
        if param.type == "string" and not isinstance(value, str):
            return ValidationIssue(param.name, "must be a string")
        if param.type == "boolean" and not isinstance(value, bool):
            return ValidationIssue(param.name, "must be a boolean")
        if param.type == "array" and not isinstance(value, list):
            return ValidationIssue(param.name, "must be an array")
        if param.enum and value not in param.enum:
            return ValidationIssue(
                param.name, f"{value!r} is not allowed; legal values: {', '.join(param.enum)}"
            )
    for key in call.args:
        if all(param.name != key for param in tool.params):
            return ValidationIssue(key, "unknown parameter")

    checker = _VALIDATORS[call.name]
    return checker(call.args, workbook)


def _validate_change_sheet_name(args: dict, workbook: Workbook) -> ValidationIssue | None:
    if not workbook.has_sheet(args["from"]):
        return ValidationIssue("from", f"no sheet named {args['from']!r}")
    if not args["to"].strip():
        return ValidationIssue("to", "new sheet name must be non-empty")
    if workbook.has_sheet(args["to"]) and args["to"].casefold() != args["from"].casefold():
        return ValidationIssue("to", f"sheet name {args['to']!r} is already taken")
    return None


def _validate_create_table(args: dict, workbook: Workbook) -> ValidationIssue | None:
    if not args["name"].strip():
        return ValidationIssue("name", "table name must be non-empty")
    if workbook.has_table(args["name"]):
        return ValidationIssue("name", f"table name {args['name']!r} is already taken")
    columns = args["columns"]
    if not columns:
        return ValidationIssue("columns", "a table needs at least one column")
    if not all(isinstance(c, str) and c.strip() for c in columns):
        return ValidationIssue("columns", "headers must be non-empty strings")
    lowered = [c.casefold() for c in columns]
    if len(set(lowered)) != len(lowered):
        return ValidationIssue("columns", "headers must be unique within the table")
    for row_index, row in enumerate(args["rows"]):
        if not isinstance(row, list):
            return ValidationIssue(f"rows[{row_index}]", "each row must be an array of cell values")
        if len(row) != len(columns):
            return ValidationIssue(
                f"rows[{row_index}]", f"has {len(row)} cells but the table has {len(columns)} columns"
            )
        for col_index, cell in enumerate(row):
            if not isinstance(cell, (str, int, float, bool)) and cell is not None:
                return ValidationIssue(f"rows[{row_index}][{col_index}]", "cell values must be scalar")
            if isinstance(cell, str) and cell.startswith("="):
                try:
                    parse_formula(cell)
                except ParseError as error:
                    return ValidationIssue(f"rows[{row_index}][{col_index}]", f"bad formula: {error}")
    sheet_name = args.get("sheet")
    if sheet_name is not None and not workbook.has_sheet(sheet_name):
        return ValidationIssue("sheet", f"no sheet named {sheet_name!r}")
    anchor = args.get("anchor")
    if anchor is not None:
        try:
            parse_address(anchor)
        except AddressError:
            return ValidationIssue("anchor", f"{anchor!r} is not an A1-style address")
    return None


def _require_table(args: dict, workbook: Workbook) -> ValidationIssue | None:
    if not workbook.has_table(args["table"]):
        names = ", ".join(workbook.table_names()) or "none"
        return ValidationIssue("table", f"no table named {args['table']!r}; existing tables: {names}")
    return None


def _require_column(args: dict, workbook: Workbook) -> ValidationIssue | None:
    table = workbook.table(args["table"])
    headers = [c.header for c in table.columns]
    if not any(h.casefold() == args["column"].casefold() for h in headers):
        return ValidationIssue(
            "column", f"table {table.name!r} has no column {args['column']!r}; columns: {', '.join(headers)}"
        )
    return None


def _validate_add_chart(args: dict, workbook: Workbook) -> ValidationIssue | None:
    issue = _require_table(args, workbook) or _require_column(args, workbook)
    if issue:
        return issue
    table = workbook.table(args["table"])
    column = table.columns[table.column_index_of(args["column"])]
    if column.value_type not in NUMERIC_TYPES:
        legal = ", ".join(t.value for t in NUMERIC_TYPES)
        return ValidationIssue(
            "column",
            f"charts need numeric data; column {column.header!r} is {column.value_type.value} (want {legal})",
        )
    return None


def _validate_sort_rows(args: dict, workbook: Workbook) -> ValidationIssue | None:
    return _require_table(args, workbook) or _require_column(args, workbook)


def _validate_filter_rows(args: dict, workbook: Workbook) -> ValidationIssue | None:
    return _require_table(args, workbook) or _require_column(args, workbook)


def _validate_highlight_cell(args: dict, workbook: Workbook) -> ValidationIssue | None:
    try:
        addr = parse_address(args["cell"])
    except AddressError:
        return ValidationIssue("cell", f"{args['cell']!r} is not an A1-style address")
    if addr.sheet is not None and not workbook.has_sheet(addr.sheet):
        return ValidationIssue("cell", f"no sheet named {addr.sheet!r}")
    sheet = workbook.sheet(addr.sheet) if addr.sheet else workbook.sheets[0]
    if sheet.table_at(addr.with_sheet(None)) is None:
        return ValidationIssue("cell", f"{args['cell']} does not fall inside any table")
    return None


def _validate_highlight_row(args: dict, workbook: Workbook) -> ValidationIssue | None:
    return _require_table(args, workbook) or _require_column(args, workbook)


def _validate_change_table_color(args: dict, workbook: Workbook) -> ValidationIssue | None:
    return _require_table(args, workbook)


_VALIDATORS: dict[str, Callable[[dict, Workbook], ValidationIssue | None]] = {
    "change_sheet_name": _validate_change_sheet_name,
    "create_table": _validate_create_table,
    "add_chart": _validate_add_chart,
    "sort_rows": _validate_sort_rows,
    "filter_rows": _validate_filter_rows,
    "highlight_cell": _validate_highlight_cell,
    "highlight_row": _validate_highlight_row,
    "change_table_color": _validate_change_table_color,
}


def _sort_key(value: Value):
    import datetime

    from gridmate.values import CellError

    if isinstance(value, bool):
        return (3, value)
    if isinstance(value, float):
        return (0, value)
    if isinstance(value, datetime.date):
        return (1, value.toordinal())
    if isinstance(value, CellError):
        return (4, value.kind.value)
    return (2, value.casefold())


def _execute_change_sheet_name(args: dict, workbook: Workbook) -> str:
    workbook.rename_sheet(args["from"], args["to"])
    return f"Renamed sheet {args['from']!r} to {args['to']!r}."


def _refine_formula_column_types(table: Table) -> None:
    """Upgrade text-typed columns whose formula results are uniformly
    numeric, date, or boolean (types are inferred before computation)."""
    import datetime

    for col_index, column in enumerate(table.columns):
        cells = [row.cells[col_index] for row in table.rows]
        if column.value_type is not ValueType.TEXT or not any(c.is_formula for c in cells):
            continue
        values = [c.value for c in cells if c.value is not None]
        if not values:
            continue
        if all(isinstance(v, float) and not isinstance(v, bool) for v in values):
            column.value_type = ValueType.NUMBER
        elif all(isinstance(v, datetime.date) for v in values):
            column.value_type = ValueType.DATE
        elif all(isinstance(v, bool) for v in values):
            column.value_type = ValueType.BOOLEAN


def _execute_create_table(args: dict, workbook: Workbook) -> str:
    sheet_name = args.get("sheet") or workbook.sheets[0].name
    headers = list(args["columns"])
    rows = [list(row) for row in args["rows"]]
    spec = TableSpec(
        name=args["name"],
        columns=build_column_specs(headers, rows),
        rows=rows,
        kind=TableKind(args.get("kind", "data")),
    )
    if args.get("anchor"):
        anchor = parse_address(args["anchor"])
    else:
        anchor = find_free_anchor(workbook, sheet_name, width=len(headers), height=1 + len(rows))
    table = place_table(workbook, sheet_name, spec, anchor)
    recalculate(workbook)
    _refine_formula_column_types(table)
    return f"Created {spec.kind.value} table {table.name!r} at {table.anchor} with {len(rows)} rows."


def _execute_add_chart(args: dict, workbook: Workbook) -> str:
    table = workbook.table(args["table"])
    chart = ChartSpec(
        chart_type=ChartType(args["chartType"]),
        table_name=table.name,
        column_header=args["column"],
        title=args.get("title") or f"{args['column']} ({table.name})",
    )
    table.charts.append(chart)
    workbook.touch()
    return f"Added a {chart.chart_type.value} chart over {table.name!r}.{args['column']}."


def _execute_sort_rows(args: dict, workbook: Workbook) -> str:
    sheet, table = workbook.sheet_of_table(args["table"])
    ascending = args.get("ascending", True)
    col_index = table.column_index_of(args["column"])
    pinned = table.aggregation_row_indexes(sheet)

    head = [row for i, row in enumerate(table.rows) if i not in pinned]
    tail = [row for i, row in enumerate(table.rows) if i in pinned]
    with_key = [(row.cells[col_index].value, row) for row in head]
    filled = [(key, row) for key, row in with_key if key is not None]
    empty = [row for key, row in with_key if key is None]
    # Stable sort; empty cells sink to the bottom in either direction and
    # aggregation rows stay pinned after them.
    ordered = [row for _, row in sorted(filled, key=lambda kr: _sort_key(kr[0]), reverse=not ascending)]
    table.rows = ordered + empty + tail
    table.sort_state = SortState(col_index, ascending)
    workbook.touch()
    direction = "ascending" if ascending else "descending"
    return f"Sorted {table.name!r} by {args['column']!r} {direction}."


def _execute_filter_rows(args: dict, workbook: Workbook) -> str:
    sheet, table = workbook.sheet_of_table(args["table"])
    criteria = parse_criteria(args["criteria"])
    col_index = table.column_index_of(args["column"])
    pinned = table.aggregation_row_indexes(sheet)
    from gridmate.formula.criteria import criteria_matches

    hidden = 0
    for row_index, row in enumerate(table.rows):
        if row_index in pinned:
            row.hidden = False
            continue
        row.hidden = not criteria_matches(criteria, row.cells[col_index].value)
        hidden += row.hidden
    table.filter_state = FilterState(args["column"], criteria, args["criteria"])
    workbook.touch()
    return f"Filtered {table.name!r} on {args['column']} {args['criteria']!r}; {hidden} rows hidden."


def _execute_highlight_cell(args: dict, workbook: Workbook) -> str:
    addr = parse_address(args["cell"])
    sheet = workbook.sheet(addr.sheet) if addr.sheet else workbook.sheets[0]
    table = sheet.table_at(addr.with_sheet(None))
    assert table is not None  # validated
    table.highlights.append(HighlightRule(color=HighlightColor(args["color"]), cell=addr.with_sheet(None)))
    workbook.touch()
    return f"Highlighted {args['cell']} {args['color']}."


def _execute_highlight_row(args: dict, workbook: Workbook) -> str:
    table = workbook.table(args["table"])
    table.highlights.append(HighlightRule(
        color=HighlightColor(args["color"]),
        column_header=args["column"],
        criteria=parse_criteria(args["criteria"]),
        criteria_text=args["criteria"],
    ))
    workbook.touch()
    return f"Highlighting rows of {table.name!r} where {args['column']} {args['criteria']!r} in {args['color']}."


def _execute_change_table_color(args: dict, workbook: Workbook) -> str:
    table = workbook.table(args["table"])
    table.style = args["color"]
    workbook.touch()
    return f"Changed {table.name!r} theme to {args['color']}."


_EXECUTORS: dict[str, Callable[[dict, Workbook], str]] = {
    "change_sheet_name": _execute_change_sheet_name,
    "create_table": _execute_create_table,
    "add_chart": _execute_add_chart,
    "sort_rows": _execute_sort_rows,
    "filter_rows": _execute_filter_rows,
    "highlight_cell": _execute_highlight_cell,
    "highlight_row": _execute_highlight_row,
    "change_table_color": _execute_change_table_color,
}


def execute_tool(call: ToolCall, workbook: Workbook) -> ToolResult:
    """Validate and run one tool call; the workbook is untouched on failure."""
    issue = validate_tool_call(call, workbook)
    if issue is not None:
        return ToolResult(ToolStatus.VALIDATION_ERROR, issue.render(), workbook.revision)
    before = snapshot(workbook)
    revision_before = workbook.revision
    try:
        message = _EXECUTORS[call.name](call.args, workbook)
        recalculate(workbook)
    except (WorkbookError, AddressError, ParseError, ValueError) as error:
        before.restore(workbook)
        workbook.revision = revision_before
        return ToolResult(ToolStatus.EXECUTION_ERROR, str(error), workbook.revision)
    return ToolResult(ToolStatus.OK, message, workbook.revision)
