"""Serialization boundary: agent-facing state JSON, Markdown table
prototypes, CSV export, and the full-fidelity workbook file format.

The state document ("state/v1") is the canonical textual representation of
the workbook handed to the agent every turn: one object per cell with its
A1 address, display value, and formula source. Equal workbook content
yields byte-equal documents; the revision counter is deliberately
excluded. Per-table presentation metadata (anchor, style, charts,
highlights, hidden rows) rides along for the UI.
"""

from __future__ import annotations

import csv
import io
import json
import re

from gridmate.address import parse_address
from gridmate.formula.criteria import parse_criteria
from gridmate.formula.parser import parse_formula
from gridmate.values import Value, coerce_literal, format_value
from gridmate.workbook import (
    Cell,
    CellAddress,
    CellRole,
    ChartSpec,
    ChartType,
    ColumnSpec,
    FilterState,
    HighlightColor,
    HighlightRule,
    Row,
    Sheet,
    SortState,
    Table,
    TableKind,
    ValueType,
    Workbook,
)

STATE_SCHEMA_VERSION = "state/v1"
WORKBOOK_SCHEMA_VERSION = "workbook/v1"

STATE_JSON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schemaVersion", "sheets"],
    "properties": {
        "schemaVersion": {"const": STATE_SCHEMA_VERSION},
        "sheets": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "tables"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "tables": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["name", "kind", "cells"],
                            "properties": {
                                "name": {"type": "string"},
                                "kind": {"enum": ["data", "insight"]},
                                "anchor": {"type": "string"},
                                "style": {"type": ["string", "null"]},
                                "charts": {"type": "array"},
                                "highlights": {"type": "array"},
                                "hiddenRows": {"type": "array", "items": {"type": "integer"}},
                                "cells": {
                                    "type": "array",
                                    "items": {
                                        "type": "object",
                                        "required": ["addr", "value", "formula"],
                                        "properties": {
                                            "addr": {"type": "string"},
                                            "value": {"type": ["string", "null"]},
                                            "formula": {"type": ["string", "null"]},
                                        },
                                    },
                                },
                            },
                        },
                    },
                },
            },
        },
    },
}


def _canonical(document: object) -> str:
    return json.dumps(document, separators=(",", ":"), ensure_ascii=False)


def _cell_objects(table: Table) -> list[dict]:
    cells = []
    for col_index, column in enumerate(table.columns):
        addr = CellAddress(table.anchor.column + col_index, table.anchor.row)
        cells.append({"addr": addr.render(), "value": column.header, "formula": None})
    for row_index, row in enumerate(table.rows):
        for col_index, cell in enumerate(row.cells):
            addr = table.address_of(row_index, col_index)
            cells.append({
                "addr": addr.render(),
                "value": format_value(cell.value),
                "formula": cell.formula,
            })
    return cells


def state_document(workbook: Workbook) -> dict:
    """The state/v1 document as a plain dict (see serialize_state)."""
    sheets = []
    for sheet in workbook.sheets:
        tables = []
        for table in sheet.tables:
            tables.append({
                "name": table.name,
                "kind": table.kind.value,
                "anchor": table.anchor.render(),
                "style": table.style,
                "charts": [
                    {
                        "chartType": chart.chart_type.value,
                        "table": chart.table_name,
                        "column": chart.column_header,
                        "title": chart.title,
                    }
                    for chart in table.charts
                ],
                "highlights": [_highlight_object(rule) for rule in table.highlights],
                "hiddenRows": [i for i, row in enumerate(table.rows) if row.hidden],
                "cells": _cell_objects(table),
            })
        sheets.append({"name": sheet.name, "tables": tables})
    return {"schemaVersion": STATE_SCHEMA_VERSION, "sheets": sheets}


def _highlight_object(rule: HighlightRule) -> dict:
    if rule.cell is not None:
        return {"scope": "cell", "cell": rule.cell.render(), "color": rule.color.value}
    return {
        "scope": "rows",
        "column": rule.column_header,
        "criteria": rule.criteria_text,
        "color": rule.color.value,
    }


def serialize_state(workbook: Workbook) -> str:
    """Canonical state/v1 JSON: fixed key order, no insignificant
    whitespace, byte-identical for workbooks with equal content."""
    return _canonical(state_document(workbook))


# --- Markdown table prototyping -------------------------------------------

class TableProto:
    """A table sketched in chat: headers plus rows of raw cell text.

    Cell text beginning with "=" is a formula source; everything else is a
    literal. ``name`` is rendered as a "Table: <name>" caption line when
    non-empty so the prototype's identity survives a round-trip.
    """

    def __init__(self, name: str, columns: list[str], rows: list[list[str]]):
        if not columns:
            raise ValueError("a table proto needs at least one column")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError("every proto row needs exactly one cell per column")
        self.name = name
        self.columns = list(columns)
        self.rows = [list(row) for row in rows]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TableProto)
            and self.name == other.name
            and self.columns == other.columns
            and self.rows == other.rows
        )

    def __repr__(self) -> str:
        return f"TableProto({self.name!r}, {self.columns!r}, {self.rows!r})"


class MarkdownError(ValueError):
    pass


class NoTableFound(MarkdownError):
    pass


class RaggedRow(MarkdownError):
    def __init__(self, line_number: int):
        super().__init__(f"row on line {line_number} does not match the header width")
        self.line_number = line_number


def _escape_cell(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|")


def _unescape_cell(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text) and text[i + 1] in ("\\", "|"):
            out.append(text[i + 1])
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def render_markdown(proto: TableProto) -> str:
    """GFM pipe table: header, alignment row, one line per data row."""
    lines = []
    if proto.name:
        lines.append(f"Table: {proto.name}")
    lines.append("| " + " | ".join(_escape_cell(c) for c in proto.columns) + " |")
    lines.append("| " + " | ".join("---" for _ in proto.columns) + " |")
    for row in proto.rows:
        lines.append("| " + " | ".join(_escape_cell(c) for c in row) + " |")
    return "\n".join(lines)


_DELIMITER_ROW = re.compile(r"^\s*\|?\s*:?-{3,}:?\s*(\|\s*:?-{3,}:?\s*)*\|?\s*$")


def _split_row(line: str) -> list[str]:
    body = line.strip()
    if body.startswith("|"):
        body = body[1:]
    if body.endswith("|") and not body.endswith("\\|"):
        body = body[:-1]
    cells = []
    current: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            current.append(ch)
            current.append(body[i + 1])
            i += 2
            continue
        if ch == "|":
            cells.append("".join(current))
            current = []
            i += 1
            continue
        current.append(ch)
        i += 1
    cells.append("".join(current))
    return [_unescape_cell(_strip_padding(cell)) for cell in cells]


def _strip_padding(cell: str) -> str:
    # Render pads each cell with exactly one space per side; remove only that.
    if cell.startswith(" "):
        cell = cell[1:]
    if cell.endswith(" "):
        cell = cell[:-1]
    return cell


def _looks_like_row(line: str) -> bool:
    return line.lstrip().startswith("|")


def parse_markdown(text: str) -> TableProto:
    """Parse the first pipe table in the text. Later tables are ignored."""
    lines = text.splitlines()
    for index in range(len(lines) - 1):
        if _looks_like_row(lines[index]) and _DELIMITER_ROW.match(lines[index + 1] or ""):
            columns = _split_row(lines[index])
            name = ""
            if index > 0:
                caption = re.match(r"^Table: (.*)$", lines[index - 1])
                if caption:
                    name = caption.group(1)
            rows = []
            line_number = index + 2
            for line in lines[index + 2:]:
                if not _looks_like_row(line):
                    break
                line_number += 1
                cells = _split_row(line)
                if len(cells) != len(columns):
                    raise RaggedRow(line_number)
                rows.append(cells)
            return TableProto(name, columns, rows)
    raise NoTableFound("no pipe table in text")


def find_markdown_table(text: str) -> TableProto | None:
    try:
        return parse_markdown(text)
    except MarkdownError:
        return None


def proto_from_table(table: Table) -> TableProto:
    """Proto view of a live table: formula sources kept, literals displayed."""
    rows = []
    for row in table.rows:
        rows.append([
            cell.formula if cell.is_formula else format_value(cell.value)
            for cell in row.cells
        ])
    return TableProto(table.name, [c.header for c in table.columns], rows)


# --- CSV export -------------------------------------------------------------

def export_csv(table: Table) -> str:
    """RFC-4180 CSV of computed values; hidden rows are left out."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow([column.header for column in table.columns])
    for row in table.rows:
        if row.hidden:
            continue
        writer.writerow([format_value(cell.value) for cell in row.cells])
    return buffer.getvalue()


# --- Full-fidelity workbook files -------------------------------------------

def workbook_document(workbook: Workbook) -> dict:
    """Everything needed to reconstruct the workbook (minus the revision)."""
    sheets = []
    for sheet in workbook.sheets:
        tables = []
        for table in sheet.tables:
            tables.append({
                "name": table.name,
                "kind": table.kind.value,
                "anchor": table.anchor.render(),
                "style": table.style,
                "columns": [
                    {"header": c.header, "valueType": c.value_type.value} for c in table.columns
                ],
                "rows": [
                    {
                        "hidden": row.hidden,
                        "cells": [
                            {
                                "formula": cell.formula,
                                "value": format_value(cell.value),
                                "role": cell.role.value,
                            }
                            for cell in row.cells
                        ],
                    }
                    for row in table.rows
                ],
                "sortState": (
                    {"columnIndex": table.sort_state.column_index, "ascending": table.sort_state.ascending}
                    if table.sort_state else None
                ),
                "filterState": (
                    {"column": table.filter_state.column_header, "criteria": table.filter_state.criteria_text}
                    if table.filter_state else None
                ),
                "charts": [
                    {
                        "chartType": chart.chart_type.value,
                        "table": chart.table_name,
                        "column": chart.column_header,
                        "title": chart.title,
                    }
                    for chart in table.charts
                ],
                "highlights": [_highlight_object(rule) for rule in table.highlights],
            })
        sheets.append({"name": sheet.name, "tables": tables})
    return {"schemaVersion": WORKBOOK_SCHEMA_VERSION, "sheets": sheets}


def dump_workbook(workbook: Workbook) -> str:
    return _canonical(workbook_document(workbook))


def _cell_from_object(obj: dict, value_type: ValueType) -> Cell:
    formula = obj.get("formula")
    if formula:
        cell = Cell(formula=formula, ast=parse_formula(formula))
        cell.value = _typed_literal(obj.get("value") or "", value_type)
        cell.role = CellRole(obj.get("role", "plain"))
        return cell
    cell = Cell(value=_typed_literal(obj.get("value") or "", value_type))
    cell.role = CellRole(obj.get("role", "plain"))
    return cell


def _typed_literal(text: str, value_type: ValueType) -> Value:
    del value_type  # formatting metadata only; literals keep natural types
    return coerce_literal(text)


def load_workbook(text: str) -> Workbook:
    document = json.loads(text)
    if document.get("schemaVersion") != WORKBOOK_SCHEMA_VERSION:
        raise ValueError(f"expected schemaVersion {WORKBOOK_SCHEMA_VERSION!r}")
    workbook = Workbook(sheet_names=())
    for sheet_obj in document["sheets"]:
        sheet = Sheet(sheet_obj["name"])
        for table_obj in sheet_obj.get("tables", []):
            columns = [
                ColumnSpec(c["header"], ValueType(c["valueType"]))
                for c in table_obj["columns"]
            ]
            rows = []
            for row_obj in table_obj.get("rows", []):
                cells = [
                    _cell_from_object(cell_obj, columns[i].value_type)
                    for i, cell_obj in enumerate(row_obj["cells"])
                ]
                rows.append(Row(cells, hidden=bool(row_obj.get("hidden", False))))
            table = Table(
                name=table_obj["name"],
                kind=TableKind(table_obj.get("kind", "data")),
                anchor=parse_address(table_obj["anchor"]),
                columns=columns,
                rows=rows,
                style=table_obj.get("style"),
            )
            sort_obj = table_obj.get("sortState")
            if sort_obj:
                table.sort_state = SortState(sort_obj["columnIndex"], sort_obj["ascending"])
            filter_obj = table_obj.get("filterState")
            if filter_obj:
                table.filter_state = FilterState(
                    filter_obj["column"], parse_criteria(filter_obj["criteria"]), filter_obj["criteria"],
                )
            for chart_obj in table_obj.get("charts", []):
                table.charts.append(ChartSpec(
                    ChartType(chart_obj["chartType"]), chart_obj["table"],
                    chart_obj["column"], chart_obj["title"],
                ))
            for rule_obj in table_obj.get("highlights", []):
                table.highlights.append(_highlight_from_object(rule_obj))
            sheet.tables.append(table)
        workbook.sheets.append(sheet)
    if not workbook.sheets:
        workbook.sheets.append(Sheet("Sheet1"))
    return workbook


def _highlight_from_object(obj: dict) -> HighlightRule:
    color = HighlightColor(obj["color"])
    if obj.get("scope") == "cell":
        return HighlightRule(color=color, cell=parse_address(obj["cell"]))
    return HighlightRule(
        color=color,
        column_header=obj.get("column"),
        criteria=parse_criteria(obj.get("criteria") or ""),
        criteria_text=obj.get("criteria") or "",
    )
