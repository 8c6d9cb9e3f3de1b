"""Hypothesis strategies shared by the formula and table property tests."""

from __future__ import annotations

import datetime
from dataclasses import dataclass

from hypothesis import strategies as st

from gridmate.address import CellAddress, column_letters
from gridmate.workbook import ColumnSpec, TableSpec, ValueType, Workbook, place_table


@dataclass
class TableWorld:
    """A small single-table workbook plus a plain-dict mirror for oracles."""

    col_kinds: list[str]  # "num" | "text" | "date"
    rows: list[list[object]]
    integer_only: bool = False

    @property
    def n_cols(self) -> int:
        return len(self.col_kinds)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def grid(self) -> dict[tuple[int, int], object]:
        """(col, row) -> value for data cells; header row excluded."""
        cells = {}
        for r, row in enumerate(self.rows):
            for c, value in enumerate(row):
                cells[(c + 1, r + 2)] = value
        return cells

    def data_rows(self) -> list[int]:
        return list(range(2, self.n_rows + 2))

    def build_workbook(self) -> Workbook:
        workbook = Workbook()
        kinds = {"num": ValueType.NUMBER, "text": ValueType.TEXT, "date": ValueType.DATE}
        spec = TableSpec(
            name="T",
            columns=[ColumnSpec(f"C{i}", kinds[k]) for i, k in enumerate(self.col_kinds)],
            rows=self.rows,
        )
        place_table(workbook, "Sheet1", spec, CellAddress(1, 1))
        return workbook


_TEXT_POOL = ("Operational", "Marketing", "Office Supplies", "x", "Y", "")


def _value_for(kind: str, integer_only: bool):
    if kind == "num":
        if integer_only:
            return st.integers(-100, 100).map(float)
        return st.one_of(
            st.integers(-100, 100).map(float),
            st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False, width=64),
        )
    if kind == "date":
        return st.integers(1, 30).map(lambda d: datetime.date(2023, 4, d))
    return st.sampled_from(_TEXT_POOL)


@st.composite
def table_worlds(draw, integer_only: bool = False, max_cols: int = 6, max_rows: int = 10):
    n_cols = draw(st.integers(1, max_cols))
    kinds = ["num"] + [draw(st.sampled_from(["num", "text", "date"])) for _ in range(n_cols - 1)]
    n_rows = draw(st.integers(1, max_rows))
    rows = [
        [draw(_value_for(kind, integer_only)) for kind in kinds]
        for _ in range(n_rows)
    ]
    return TableWorld(kinds, rows, integer_only)


# --- formula text generation --------------------------------------------------


def _cols_of_kind(world: TableWorld, kind: str) -> list[int]:
    return [i + 1 for i, k in enumerate(world.col_kinds) if k == kind]


@st.composite
def _number_literal(draw):
    return str(draw(st.integers(-50, 99)))


@st.composite
def _string_literal(draw):
    return '"' + draw(st.sampled_from(_TEXT_POOL)).replace('"', '""') + '"'


@st.composite
def _cell_ref(draw, world: TableWorld, kinds: tuple[str, ...] = ("num",)):
    cols = [c for k in kinds for c in _cols_of_kind(world, k)]
    if not cols:
        return str(draw(st.integers(0, 9)))
    col = draw(st.sampled_from(cols))
    row = draw(st.integers(2, world.n_rows + 1))
    return f"{column_letters(col)}{row}"


@st.composite
def _column_span(draw, world: TableWorld, kinds: tuple[str, ...] = ("num",)):
    cols = [c for k in kinds for c in _cols_of_kind(world, k)]
    col = draw(st.sampled_from(cols)) if cols else 1
    letters = column_letters(col)
    return f"{letters}:{letters}"


@st.composite
def _range_ref(draw, world: TableWorld, kinds: tuple[str, ...] = ("num",), full: bool = False):
    cols = [c for k in kinds for c in _cols_of_kind(world, k)]
    col = draw(st.sampled_from(cols)) if cols else 1
    letters = column_letters(col)
    if full:
        return f"{letters}2:{letters}{world.n_rows + 1}"
    lo = draw(st.integers(2, world.n_rows + 1))
    hi = draw(st.integers(lo, world.n_rows + 1))
    return f"{letters}{lo}:{letters}{hi}"


@st.composite
def _criteria_text(draw, world: TableWorld, kind: str):
    op = draw(st.sampled_from(["", ">=", "<=", ">", "<", "<>", "="]))
    if kind == "num":
        operand = str(draw(st.integers(-100, 100)))
    elif kind == "date":
        operand = datetime.date(2023, 4, draw(st.integers(1, 30))).isoformat()
    else:
        operand = draw(st.sampled_from(_TEXT_POOL))
    return f'"{op}{operand}"'


@st.composite
def _scalar(draw, world: TableWorld, depth: int):
    options = ["number", "cellref"]
    if depth > 0:
        options += ["binary", "if", "aggregate", "compare"]
    choice = draw(st.sampled_from(options))
    if choice == "number":
        return draw(_number_literal())
    if choice == "cellref":
        return draw(_cell_ref(world))
    if choice == "binary":
        op = draw(st.sampled_from(["+", "-", "*", "/"]))
        return f"({draw(_scalar(world, depth - 1))}{op}{draw(_scalar(world, depth - 1))})"
    if choice == "compare":
        op = draw(st.sampled_from(["=", "<>", "<", "<=", ">", ">="]))
        left = draw(_scalar(world, 0))
        right = draw(_scalar(world, 0))
        return f"({left}{op}{right})"
    if choice == "if":
        cond = draw(_scalar(world, 0))
        op = draw(st.sampled_from(["=", "<", ">"]))
        return (
            f"IF({cond}{op}{draw(_number_literal())}, "
            f"{draw(_scalar(world, depth - 1))}, {draw(_scalar(world, depth - 1))})"
        )
    return draw(_aggregate(world, depth - 1))


@st.composite
def _aggregate(draw, world: TableWorld, depth: int):
    fn = draw(st.sampled_from(["SUM", "AVERAGE", "COUNT", "MIN", "MAX"]))
    source = draw(st.sampled_from(["range", "column", "scalars"]))
    if source == "range":
        return f"{fn}({draw(_range_ref(world))})"
    if source == "column":
        return f"{fn}({draw(_column_span(world))})"
    args = ", ".join(draw(_scalar(world, 0)) for _ in range(draw(st.integers(1, 3))))
    return f"{fn}({args})"


@st.composite
def _conditional_aggregate(draw, world: TableWorld):
    fn = draw(st.sampled_from(["SUMIF", "COUNTIF", "SUMIFS", "COUNTIFS"]))
    whole = draw(st.booleans())

    def area(kinds):
        if whole:
            return draw(_column_span(world, kinds))
        return draw(_range_ref(world, kinds, full=True))

    def crit_pair():
        kind = draw(st.sampled_from(["num", "text", "date"]))
        cols = _cols_of_kind(world, kind)
        if not cols:
            kind = "num"
        return area((kind,)), draw(_criteria_text(world, kind))

    if fn == "SUMIF":
        crit_area, crit = crit_pair()
        if draw(st.booleans()):
            return f"SUMIF({crit_area}, {crit}, {area(('num',))})"
        return f"SUMIF({area(('num',))}, {draw(_criteria_text(world, 'num'))})"
    if fn == "COUNTIF":
        crit_area, crit = crit_pair()
        return f"COUNTIF({crit_area}, {crit})"
    pairs = [crit_pair() for _ in range(draw(st.integers(1, 2)))]
    flat = ", ".join(f"{a}, {c}" for a, c in pairs)
    if fn == "SUMIFS":
        return f"SUMIFS({area(('num',))}, {flat})"
    return f"COUNTIFS({flat})"


@st.composite
def formulas_for(draw, world: TableWorld):
    """Formula text exercising the supported grammar against the world."""
    top = draw(st.sampled_from(["scalar", "aggregate", "conditional", "conditional", "aggregate"]))
    if top == "scalar":
        body = draw(_scalar(world, 2))
    elif top == "aggregate":
        body = draw(_aggregate(world, 1))
    else:
        body = draw(_conditional_aggregate(world))
    return "=" + body
