"""Workbook recalculation: dependency graph, topological order, cycles.

Every formula cell is evaluated exactly once per recalculation, in
dependency order. Cells on a dependency cycle are not evaluated; their
cached value becomes #CYCLE!, as does anything downstream of one.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from gridmate.address import CellAddress
from gridmate.formula.ast import ColumnRef, FormulaAst
from gridmate.formula.evaluate import evaluate, resolve_column_ref
from gridmate.values import CYCLE_ERROR
from gridmate.workbook import Cell, Workbook, iter_cells

# A node is (sheet name casefold, column, row).
_Node = tuple[str, int, int]


@dataclass
class RecalcReport:
    """What a recalculation pass did, for tests and logging."""

    evaluated: list[CellAddress] = field(default_factory=list)
    cycle_cells: list[CellAddress] = field(default_factory=list)


def _reads(ast: FormulaAst, workbook: Workbook, context_sheet: str) -> set[_Node]:
    reads: set[_Node] = set()

    def sheet_key(name: str | None) -> str:
        return (name or context_sheet).casefold()

    def walk(node: FormulaAst) -> None:
        from gridmate.formula.ast import Binary, CellRef, FunctionCall, RangeRef

        if isinstance(node, CellRef):
            reads.add((sheet_key(node.address.sheet), node.address.column, node.address.row))
        elif isinstance(node, RangeRef):
            key = sheet_key(node.start.sheet)
            for col in range(node.start.column, node.end.column + 1):
                for row in range(node.start.row, node.end.row + 1):
                    reads.add((key, col, row))
        elif isinstance(node, ColumnRef):
            key = sheet_key(node.sheet)
            for addr in resolve_column_ref(node, workbook, node.sheet or context_sheet):
                reads.add((key, addr.column, addr.row))
        elif isinstance(node, FunctionCall):
            for arg in node.args:
                walk(arg)
        elif isinstance(node, Binary):
            walk(node.left)
            walk(node.right)

    walk(ast)
    return reads


def recalculate(workbook: Workbook) -> RecalcReport:
    """Refresh every formula cell's cached value."""
    formula_cells: dict[_Node, tuple[str, Cell, CellAddress]] = {}
    for sheet, _table, addr, cell in iter_cells(workbook):
        if cell.is_formula and cell.ast is not None:
            node = (sheet.name.casefold(), addr.column, addr.row)
            formula_cells[node] = (sheet.name, cell, addr)

    dependents: dict[_Node, set[_Node]] = defaultdict(set)
    blockers: dict[_Node, int] = {}
    for node, (sheet_name, cell, _addr) in formula_cells.items():
        # Self-references stay in the set and read as a one-cell cycle.
        depends_on = _reads(cell.ast, workbook, sheet_name) & formula_cells.keys()
        blockers[node] = len(depends_on)
        for upstream in depends_on:
            dependents[upstream].add(node)

    ready = sorted(node for node, count in blockers.items() if count == 0)
    report = RecalcReport()
    order: list[_Node] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for downstream in sorted(dependents.get(node, ())):
            blockers[downstream] -= 1
            if blockers[downstream] == 0:
                ready.append(downstream)

    for node in order:
        sheet_name, cell, addr = formula_cells[node]
        cell.value = evaluate(cell.ast, workbook, sheet_name)
        report.evaluated.append(addr.with_sheet(sheet_name))

    for node, count in sorted(blockers.items()):
        if count > 0:
            sheet_name, cell, addr = formula_cells[node]
            cell.value = CYCLE_ERROR
            report.cycle_cells.append(addr.with_sheet(sheet_name))
    return report
