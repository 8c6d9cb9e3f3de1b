"""In-memory workbook model.

Sheets hold grid-anchored tables; tables are the only content carriers
(there are no free-floating cells). A table's rectangle is its header row
plus all data rows, including any trailing aggregation row. Charts,
highlights, and filters are metadata and occupy no grid cells.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum

from gridmate.address import CellAddress, column_letters
from gridmate.formula.ast import CellRef, ColumnRef, FormulaAst, FunctionCall, RangeRef
from gridmate.formula.criteria import Criteria
from gridmate.formula.parser import parse_formula
from gridmate.values import Value, coerce_literal, parse_iso_date

UNDO_STACK_DEPTH = 50


class WorkbookError(Exception):
    """Base class for workbook contract violations."""


class OverlapError(WorkbookError):
    """A new table's rectangle intersects an existing table."""


class DuplicateNameError(WorkbookError):
    """Sheet or table name already taken (names are case-insensitive)."""


class UnknownEntityError(WorkbookError):
    """Referenced sheet/table/column does not exist."""


class AddressOutsideTableError(WorkbookError):
    """Address passed to a table operation falls outside the table."""


class TableKind(Enum):
    DATA = "data"
    INSIGHT = "insight"


class ValueType(Enum):
    TEXT = "text"
    NUMBER = "number"
    CURRENCY = "currency"
    PERCENT = "percent"
    DATE = "date"
    BOOLEAN = "boolean"


NUMERIC_TYPES = (ValueType.NUMBER, ValueType.CURRENCY, ValueType.PERCENT)


class CellRole(Enum):
    PLAIN = "plain"
    AGGREGATION = "aggregation"
    AGGREGATION_REFERENCE = "aggregation_reference"
    TABLE_AGGREGATION = "table_aggregation"
    TRANSFORM = "transform"
    PARAMETER = "parameter"


class ChartType(Enum):
    LINE = "line"
    PIE = "pie"
    HISTOGRAM = "histogram"


class HighlightColor(Enum):
    RED = "red"
    GREEN = "green"
    YELLOW = "yellow"


@dataclass
class ColumnSpec:
    header: str
    value_type: ValueType = ValueType.TEXT


@dataclass
class Cell:
    """Literal or formula cell.

    Literal cells keep ``formula``/``ast`` as None and ``value`` is the
    literal itself. Formula cells retain their source text verbatim and
    cache the last computed value in ``value``.
    """

    value: Value = None
    formula: str | None = None
    ast: FormulaAst | None = None
    role: CellRole = CellRole.PLAIN

    @property
    def is_formula(self) -> bool:
        return self.formula is not None


@dataclass
class Row:
    cells: list[Cell]
    hidden: bool = False


@dataclass
class ChartSpec:
    chart_type: ChartType
    table_name: str
    column_header: str
    title: str


@dataclass
class HighlightRule:
    """Either a single-cell highlight or a rows-matching-criteria highlight."""

    color: HighlightColor
    cell: CellAddress | None = None
    column_header: str | None = None
    criteria: Criteria | None = None
    criteria_text: str | None = None


@dataclass
class SortState:
    column_index: int
    ascending: bool


@dataclass
class FilterState:
    column_header: str
    criteria: Criteria
    criteria_text: str


@dataclass
class Table:
    name: str
    kind: TableKind
    anchor: CellAddress
    columns: list[ColumnSpec]
    rows: list[Row] = field(default_factory=list)
    style: str | None = None
    sort_state: SortState | None = None
    filter_state: FilterState | None = None
    charts: list[ChartSpec] = field(default_factory=list)
    highlights: list[HighlightRule] = field(default_factory=list)

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def height(self) -> int:
        """Grid rows occupied: header plus data rows."""
        return 1 + len(self.rows)

    def rect(self) -> tuple[int, int, int, int]:
        """(col_lo, row_lo, col_hi, row_hi), inclusive."""
        return (
            self.anchor.column,
            self.anchor.row,
            self.anchor.column + self.width - 1,
            self.anchor.row + self.height - 1,
        )

    def contains(self, addr: CellAddress) -> bool:
        col_lo, row_lo, col_hi, row_hi = self.rect()
        return col_lo <= addr.column <= col_hi and row_lo <= addr.row <= row_hi

    def column_index_of(self, header: str) -> int:
        for index, column in enumerate(self.columns):
            if column.header.casefold() == header.casefold():
                return index
        raise UnknownEntityError(f"table {self.name!r} has no column {header!r}")

    def column_grid_index(self, header: str) -> int:
        """Absolute grid column of a header."""
        return self.anchor.column + self.column_index_of(header)

    def cell_at(self, addr: CellAddress) -> Cell | None:
        """Data cell at an absolute address; None for the header row."""
        if not self.contains(addr):
            raise AddressOutsideTableError(f"{addr} outside table {self.name!r}")
        if addr.row == self.anchor.row:
            return None
        row = self.rows[addr.row - self.anchor.row - 1]
        return row.cells[addr.column - self.anchor.column]

    def data_row_index(self, addr: CellAddress) -> int | None:
        if addr.row == self.anchor.row:
            return None
        return addr.row - self.anchor.row - 1

    def address_of(self, row_index: int, col_index: int, sheet: str | None = None) -> CellAddress:
        return CellAddress(self.anchor.column + col_index, self.anchor.row + 1 + row_index, sheet)

    def aggregation_row_indexes(self, sheet: "Sheet | None" = None) -> set[int]:
        """Rows holding aggregation or table-aggregation cells (usually the last)."""
        found: set[int] = set()
        for row_index, row in enumerate(self.rows):
            for col_index in range(self.width):
                role = classify_cell_role(self, self.address_of(row_index, col_index), sheet)
                if role in (CellRole.AGGREGATION, CellRole.TABLE_AGGREGATION):
                    found.add(row_index)
                    break
        return found


@dataclass
class Sheet:
    name: str
    tables: list[Table] = field(default_factory=list)

    def table_at(self, addr: CellAddress) -> Table | None:
        for table in self.tables:
            if table.contains(addr):
                return table
        return None


class Workbook:
    """Ordered sheets plus a revision counter that increases on every mutation."""

    def __init__(self, sheet_names: tuple[str, ...] = ("Sheet1",)):
        self.sheets: list[Sheet] = [Sheet(name) for name in sheet_names]
        self.revision = 0

    def touch(self) -> int:
        self.revision += 1
        return self.revision

    def sheet(self, name: str) -> Sheet:
        for sheet in self.sheets:
            if sheet.name.casefold() == name.casefold():
                return sheet
        raise UnknownEntityError(f"no sheet named {name!r}")

    def has_sheet(self, name: str) -> bool:
        return any(s.name.casefold() == name.casefold() for s in self.sheets)

    def sheet_of_table(self, table_name: str) -> tuple[Sheet, Table]:
        for sheet in self.sheets:
            for table in sheet.tables:
                if table.name.casefold() == table_name.casefold():
                    return sheet, table
        raise UnknownEntityError(f"no table named {table_name!r}")

    def table(self, table_name: str) -> Table:
        return self.sheet_of_table(table_name)[1]

    def has_table(self, table_name: str) -> bool:
        try:
            self.sheet_of_table(table_name)
            return True
        except UnknownEntityError:
            return False

    def table_names(self) -> list[str]:
        return [table.name for sheet in self.sheets for table in sheet.tables]

    def rename_sheet(self, old: str, new: str) -> None:
        sheet = self.sheet(old)
        if new.casefold() != old.casefold() and self.has_sheet(new):
            raise DuplicateNameError(f"sheet name {new!r} already taken")
        if not new:
            raise WorkbookError("sheet name must be non-empty")
        _rewrite_sheet_references(self, sheet.name, new)
        sheet.name = new
        self.touch()


@dataclass
class TableSpec:
    """Input to place_table: headers, optional explicit types, and raw rows.

    Row cells may be ready Values or strings; strings starting with "="
    become formula cells, anything else is coerced to a literal.
    """

    name: str
    columns: list[ColumnSpec]
    rows: list[list[object]] = field(default_factory=list)
    kind: TableKind = TableKind.DATA


def build_column_specs(headers: list[str], rows: list[list[object]],
                       value_types: list[ValueType] | None = None) -> list[ColumnSpec]:
    """Column specs from headers, with types inferred from the data when absent."""
    if value_types is not None:
        return [ColumnSpec(h, t) for h, t in zip(headers, value_types)]
    specs = []
    for index, header in enumerate(headers):
        specs.append(ColumnSpec(header, _infer_value_type(rows, index)))
    return specs


def _infer_value_type(rows: list[list[object]], index: int) -> ValueType:
    for row in rows:
        if index >= len(row):
            continue
        raw = row[index]
        if isinstance(raw, str):
            if raw.startswith("="):
                continue
            value = coerce_literal(raw)
            currency = raw.strip().startswith(("$", "-$"))
        else:
            value = raw
            currency = False
        if value is None:
            continue
        if isinstance(value, bool):
            return ValueType.BOOLEAN
        if isinstance(value, float):
            return ValueType.CURRENCY if currency else ValueType.NUMBER
        if parse_iso_date(str(raw)) is not None:
            return ValueType.DATE
        return ValueType.TEXT
    return ValueType.TEXT


def _build_cell(raw: object) -> Cell:
    if isinstance(raw, Cell):
        return raw
    if isinstance(raw, str) and raw.startswith("="):
        return Cell(value=None, formula=raw, ast=parse_formula(raw))
    if isinstance(raw, str):
        return Cell(value=coerce_literal(raw))
    if isinstance(raw, int) and not isinstance(raw, bool):
        return Cell(value=float(raw))
    return Cell(value=raw)  # already a Value


def _rects_intersect(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    return not (a[2] < b[0] or b[2] < a[0] or a[3] < b[1] or b[3] < a[1])


def place_table(workbook: Workbook, sheet_name: str, spec: TableSpec,
                anchor: CellAddress) -> Table:
    """Materialize a table with its header at ``anchor`` and rows below.

    Raises OverlapError when the rectangle intersects any existing table on
    the sheet, DuplicateNameError when the table name is taken anywhere in
    the workbook. Bumps the revision on success.
    """
    sheet = workbook.sheet(sheet_name)
    if not spec.columns:
        raise WorkbookError("table needs at least one column")
    if not spec.name:
        raise WorkbookError("table name must be non-empty")
    if workbook.has_table(spec.name):
        raise DuplicateNameError(f"table name {spec.name!r} already taken")

    rows = []
    for raw_row in spec.rows:
        if len(raw_row) != len(spec.columns):
            raise WorkbookError(
                f"row has {len(raw_row)} cells, table {spec.name!r} has {len(spec.columns)} columns"
            )
        rows.append(Row([_build_cell(raw) for raw in raw_row]))

    table = Table(
        name=spec.name,
        kind=spec.kind,
        anchor=CellAddress(anchor.column, anchor.row),
        columns=list(spec.columns),
        rows=rows,
    )
    for existing in sheet.tables:
        if _rects_intersect(table.rect(), existing.rect()):
            raise OverlapError(
                f"table {spec.name!r} at {anchor} would overlap {existing.name!r}"
            )
    sheet.tables.append(table)
    workbook.touch()
    return table


def find_free_anchor(workbook: Workbook, sheet_name: str, width: int, height: int) -> CellAddress:
    """First-fit anchor scan: columns left to right, rows top to bottom,
    keeping a one-cell spacer from every existing table."""
    sheet = workbook.sheet(sheet_name)
    padded = []
    max_row = 1
    for table in sheet.tables:
        col_lo, row_lo, col_hi, row_hi = table.rect()
        padded.append((col_lo - 1, row_lo - 1, col_hi + 1, row_hi + 1))
        max_row = max(max_row, row_hi)
    for col in range(1, 10_000):
        for row in range(1, max_row + 3):
            candidate = (col, row, col + width - 1, row + height - 1)
            if not any(_rects_intersect(candidate, box) for box in padded):
                return CellAddress(col, row)
    raise WorkbookError("no free anchor found")  # pragma: no cover


def _collect_refs(ast: FormulaAst) -> tuple[list[CellRef], list[RangeRef], list[ColumnRef]]:
    cells: list[CellRef] = []
    ranges: list[RangeRef] = []
    columns: list[ColumnRef] = []

    def walk(node: FormulaAst) -> None:
        if isinstance(node, CellRef):
            cells.append(node)
        elif isinstance(node, RangeRef):
            ranges.append(node)
        elif isinstance(node, ColumnRef):
            columns.append(node)
        elif isinstance(node, FunctionCall):
            for arg in node.args:
                walk(arg)
        elif hasattr(node, "left"):
            walk(node.left)
            walk(node.right)

    walk(ast)
    return cells, ranges, columns


def classify_cell_role(table: Table, addr: CellAddress, sheet: Sheet | None = None) -> CellRole:
    """Derive the taxonomy role of a cell from its formula shape.

    Aggregation: formula over ranges entirely within the cell's own table
    column. Aggregation reference: a single reference to another table's
    aggregation cell (needs the sheet to look across tables). Table
    aggregation: aggregates the table's own aggregation-reference cells;
    tested before the aggregation rule, which the same shape also
    satisfies. Transform: references two or more columns of its own row.
    Everything else, including literals, is plain.
    """
    return _classify(table, addr, sheet, frozenset())


def _classify(table: Table, addr: CellAddress, sheet: Sheet | None,
              seen: frozenset[tuple[str, int, int]]) -> CellRole:
    key = (table.name.casefold(), addr.column, addr.row)
    if key in seen:
        return CellRole.PLAIN  # reference cycle between cells
    seen = seen | {key}

    cell = table.cell_at(addr)
    if cell is None or not cell.is_formula or cell.ast is None:
        return CellRole.PLAIN
    cells, ranges, columns = _collect_refs(cell.ast)
    if columns:
        return CellRole.PLAIN

    if sheet is not None and len(cells) == 1 and not ranges:
        target = cells[0].address
        if target.sheet is None:
            bare = CellAddress(target.column, target.row)
            other = sheet.table_at(bare)
            if other is not None and other is not table and other.data_row_index(bare) is not None:
                if _classify(other, bare, sheet, seen) is CellRole.AGGREGATION:
                    return CellRole.AGGREGATION_REFERENCE

    range_addresses = [
        CellAddress(col, row)
        for ref in ranges
        if ref.start.sheet is None
        for col in range(ref.start.column, ref.end.column + 1)
        for row in range(ref.start.row, ref.end.row + 1)
    ]
    in_own_data = [
        ref_addr for ref_addr in range_addresses
        if ref_addr != addr and table.contains(ref_addr) and table.data_row_index(ref_addr) is not None
    ]
    whole_range_in_own_data = (
        bool(ranges) and not cells
        and len(in_own_data) == len(range_addresses) > 0
    )

    if whole_range_in_own_data and sheet is not None:
        if all(_classify(table, ref_addr, sheet, seen) is CellRole.AGGREGATION_REFERENCE
               for ref_addr in in_own_data):
            return CellRole.TABLE_AGGREGATION

    if whole_range_in_own_data:
        if all(ref_addr.column == addr.column for ref_addr in in_own_data):
            return CellRole.AGGREGATION

    own_row_columns = {
        ref.address.column
        for ref in cells
        if ref.address.sheet is None and ref.address.row == addr.row and ref.address.column != addr.column
    }
    if len(own_row_columns) >= 2 and not ranges:
        return CellRole.TRANSFORM

    return CellRole.PLAIN


def _rewrite_sheet_references(workbook: Workbook, old: str, new: str) -> None:
    """Rewrite sheet-qualified references in every formula on sheet rename."""
    from gridmate.formula.ast import to_text

    def rewrite(node: FormulaAst) -> FormulaAst:
        if isinstance(node, CellRef) and node.address.sheet and node.address.sheet.casefold() == old.casefold():
            return CellRef(node.address.with_sheet(new))
        if isinstance(node, RangeRef) and node.start.sheet and node.start.sheet.casefold() == old.casefold():
            return RangeRef(node.start.with_sheet(new), node.end.with_sheet(new))
        if isinstance(node, ColumnRef) and node.sheet and node.sheet.casefold() == old.casefold():
            return ColumnRef(node.start_column, node.end_column, new)
        if isinstance(node, FunctionCall):
            return FunctionCall(node.name, tuple(rewrite(arg) for arg in node.args))
        if hasattr(node, "left"):
            return type(node)(node.op, rewrite(node.left), rewrite(node.right))
        return node

    for sheet in workbook.sheets:
        for table in sheet.tables:
            for row in table.rows:
                for cell in row.cells:
                    if cell.ast is None:
                        continue
                    rewritten = rewrite(cell.ast)
                    if rewritten != cell.ast:
                        cell.ast = rewritten
                        cell.formula = to_text(rewritten)


class Snapshot:
    """Deep copy of a workbook's content, used for undo and rollback."""

    def __init__(self, workbook: Workbook):
        self._sheets = copy.deepcopy(workbook.sheets)

    def restore(self, workbook: Workbook) -> None:
        workbook.sheets = copy.deepcopy(self._sheets)
        workbook.touch()


def snapshot(workbook: Workbook) -> Snapshot:
    return Snapshot(workbook)


def restore(workbook: Workbook, snap: Snapshot) -> None:
    snap.restore(workbook)


class SnapshotStack:
    """Bounded undo stack; pushing past the limit drops the oldest entry."""

    def __init__(self, depth: int = UNDO_STACK_DEPTH):
        self._depth = depth
        self._stack: list[Snapshot] = []

    def push(self, snap: Snapshot) -> None:
        self._stack.append(snap)
        if len(self._stack) > self._depth:
            del self._stack[0]

    def pop(self) -> Snapshot | None:
        return self._stack.pop() if self._stack else None

    def __len__(self) -> int:
        return len(self._stack)


def iter_cells(workbook: Workbook):
    """Yield (sheet, table, address, cell) for every data cell."""
    for sheet in workbook.sheets:
        for table in sheet.tables:
            for row_index, row in enumerate(table.rows):
                for col_index, cell in enumerate(row.cells):
                    yield sheet, table, table.address_of(row_index, col_index), cell


def grid_value(sheet: Sheet, column: int, row: int) -> Value:
    """Current value at a grid position; Empty outside tables and on headers."""
    addr = CellAddress(column, row)
    table = sheet.table_at(addr)
    if table is None:
        return None
    if addr.row == table.anchor.row:
        return table.columns[addr.column - table.anchor.column].header
    cell = table.cell_at(addr)
    return cell.value if cell is not None else None


def column_label(table: Table, col_index: int) -> str:
    return column_letters(table.anchor.column + col_index)
