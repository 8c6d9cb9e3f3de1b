from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridmate.address import CellAddress, parse_address
from gridmate.codec import dump_workbook
from gridmate.workbook import (
    CellRole,
    ColumnSpec,
    DuplicateNameError,
    OverlapError,
    SnapshotStack,
    TableKind,
    TableSpec,
    ValueType,
    Workbook,
    classify_cell_role,
    find_free_anchor,
    place_table,
    restore,
    snapshot,
)


def two_col_spec(name="T", rows=2):
    return TableSpec(
        name=name,
        columns=[ColumnSpec("A1h"), ColumnSpec("B1h")],
        rows=[[f"r{i}a", f"r{i}b"] for i in range(rows)],
    )


def test_place_table_occupies_header_plus_rows():
    wb = Workbook()
    table = place_table(wb, "Sheet1", two_col_spec(), parse_address("A1"))
    assert table.rect() == (1, 1, 2, 3)  # A1:B3
    assert wb.revision == 1


def test_overlapping_table_rejected():
    wb = Workbook()
    place_table(wb, "Sheet1", two_col_spec("T1"), parse_address("A1"))
    with pytest.raises(OverlapError):
        place_table(wb, "Sheet1", two_col_spec("T2"), parse_address("A2"))


def test_duplicate_table_name_rejected_case_insensitively():
    wb = Workbook()
    place_table(wb, "Sheet1", two_col_spec("Totals"), parse_address("A1"))
    with pytest.raises(DuplicateNameError):
        place_table(wb, "Sheet1", two_col_spec("TOTALS"), parse_address("E1"))


def test_expense_schema_matches_scenario():
    wb = Workbook()
    spec = TableSpec(
        name="Expenses",
        columns=[
            ColumnSpec("Date", ValueType.DATE),
            ColumnSpec("Category"),
            ColumnSpec("Amount", ValueType.CURRENCY),
            ColumnSpec("Notes"),
        ],
        rows=[["2023-04-03", "Operational", "1250.00", "Cloud hosting"]],
    )
    table = place_table(wb, "Sheet1", spec, parse_address("A1"))
    assert [c.header for c in table.columns] == ["Date", "Category", "Amount", "Notes"]
    assert table.anchor == CellAddress(1, 1)
    assert table.rect() == (1, 1, 4, 2)


def test_sheet_rename_rewrites_qualified_formulas():
    wb = Workbook()
    spec = TableSpec(
        name="T",
        columns=[ColumnSpec("X", ValueType.NUMBER), ColumnSpec("Y", ValueType.NUMBER)],
        rows=[["1", "=Sheet1!A2+1"]],
    )
    place_table(wb, "Sheet1", spec, parse_address("A1"))
    wb.rename_sheet("Sheet1", "Budget")
    cell = wb.table("T").rows[0].cells[1]
    assert cell.formula == "=Budget!A2+1"


# --- cell role classification -------------------------------------------------

def build_template_sheet():
    """The classic layout: a data table with an aggregation row, plus an
    insight table of reference cells and a table aggregation."""
    wb = Workbook()
    place_table(wb, "Sheet1", TableSpec(
        name="Costs",
        columns=[ColumnSpec("Item"), ColumnSpec("Est", ValueType.NUMBER),
                 ColumnSpec("Act", ValueType.NUMBER), ColumnSpec("Delta", ValueType.NUMBER)],
        rows=[
            ["rent", "100", "90", "=B2-C2"],
            ["tools", "50", "65", "=B3-C3"],
            ["Total", "=SUM(B2:B3)", "=SUM(C2:C3)", ""],
        ],
    ), parse_address("A1"))
    place_table(wb, "Sheet1", TableSpec(
        name="Summary",
        kind=TableKind.INSIGHT,
        columns=[ColumnSpec("What"), ColumnSpec("Amount", ValueType.NUMBER)],
        rows=[
            ["Estimated", "=B4"],
            ["Actual", "=C4"],
            ["Overall", "=SUM(G2:G3)"],
        ],
    ), parse_address("F1"))
    return wb


def test_classify_roles_across_the_template():
    wb = build_template_sheet()
    sheet = wb.sheets[0]
    costs = wb.table("Costs")
    summary = wb.table("Summary")

    assert classify_cell_role(costs, parse_address("B4"), sheet) is CellRole.AGGREGATION
    assert classify_cell_role(costs, parse_address("D2"), sheet) is CellRole.TRANSFORM
    assert classify_cell_role(costs, parse_address("A2"), sheet) is CellRole.PLAIN
    assert classify_cell_role(summary, parse_address("G2"), sheet) is CellRole.AGGREGATION_REFERENCE
    assert classify_cell_role(summary, parse_address("G4"), sheet) is CellRole.TABLE_AGGREGATION


def test_classification_is_pure():
    wb = build_template_sheet()
    sheet = wb.sheets[0]
    costs = wb.table("Costs")
    first = classify_cell_role(costs, parse_address("B4"), sheet)
    second = classify_cell_role(costs, parse_address("B4"), sheet)
    assert first is second


def test_aggregation_rows_detected():
    wb = build_template_sheet()
    sheet = wb.sheets[0]
    assert wb.table("Costs").aggregation_row_indexes(sheet) == {2}
    assert wb.table("Summary").aggregation_row_indexes(sheet) == {2}


# --- snapshots -----------------------------------------------------------------

def test_snapshot_restore_round_trip():
    wb = Workbook()
    place_table(wb, "Sheet1", two_col_spec("T1"), parse_address("A1"))
    before = dump_workbook(wb)
    snap = snapshot(wb)
    place_table(wb, "Sheet1", two_col_spec("T2"), parse_address("E1"))
    assert dump_workbook(wb) != before
    restore(wb, snap)
    assert dump_workbook(wb) == before


def test_restore_on_untouched_workbook_is_identity():
    wb = Workbook()
    place_table(wb, "Sheet1", two_col_spec(), parse_address("A1"))
    before = dump_workbook(wb)
    restore(wb, snapshot(wb))
    assert dump_workbook(wb) == before


def test_snapshot_stack_caps_at_depth():
    stack = SnapshotStack(depth=50)
    wb = Workbook()
    marks = []
    for i in range(51):
        wb.touch()
        marks.append(snapshot(wb))
        stack.push(marks[-1])
    assert len(stack) == 50
    popped = [stack.pop() for _ in range(50)]
    assert popped[0] is marks[50]
    assert popped[-1] is marks[1]  # the very first snapshot was evicted
    assert stack.pop() is None


def test_revision_strictly_increases():
    wb = Workbook()
    seen = [wb.revision]
    place_table(wb, "Sheet1", two_col_spec("T1"), parse_address("A1"))
    seen.append(wb.revision)
    wb.rename_sheet("Sheet1", "Data")
    seen.append(wb.revision)
    assert seen == sorted(seen) and len(set(seen)) == len(seen)


# --- placement property ---------------------------------------------------------

@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(1, 12), st.integers(1, 20),
                          st.integers(1, 4), st.integers(0, 5)), min_size=1, max_size=12))
def test_placed_tables_never_overlap(placements):
    wb = Workbook()
    rects = []
    for index, (col, row, width, height) in enumerate(placements):
        spec = TableSpec(
            name=f"T{index}",
            columns=[ColumnSpec(f"C{i}") for i in range(width)],
            rows=[[""] * width for _ in range(height)],
        )
        try:
            table = place_table(wb, "Sheet1", spec, CellAddress(col, row))
            rects.append(table.rect())
        except OverlapError:
            pass
    for i, a in enumerate(rects):
        for b in rects[i + 1:]:
            assert a[2] < b[0] or b[2] < a[0] or a[3] < b[1] or b[3] < a[1]


def test_find_free_anchor_places_below_with_spacer():
    wb = Workbook()
    place_table(wb, "Sheet1", TableSpec(
        name="Wide",
        columns=[ColumnSpec(h) for h in "ABCD"],
        rows=[[""] * 4 for _ in range(6)],
    ), parse_address("A1"))
    anchor = find_free_anchor(wb, "Sheet1", width=2, height=4)
    assert anchor == CellAddress(1, 9)  # row 8 stays blank


def test_find_free_anchor_on_empty_sheet_is_a1():
    wb = Workbook()
    assert find_free_anchor(wb, "Sheet1", 3, 3) == CellAddress(1, 1)
