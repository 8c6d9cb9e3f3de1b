"""gridmate: a headless conversational spreadsheet workbench.

A spreadsheet engine (typed tables, formula evaluation, recalculation),
eight atomic tools an agent can call, a scaffolded session loop with
human-in-the-loop planning, and an HTTP/SSE service a chat UI talks to.
"""

from gridmate.address import CellAddress, parse_address
from gridmate.gateway import AgentTurn, BackendConfig, make_backend
from gridmate.orchestrator import Phase, Session
from gridmate.tools import ToolCall, ToolResult, execute_tool, tool_schemas, validate_tool_call
from gridmate.workbook import (
    Cell,
    CellRole,
    ColumnSpec,
    Sheet,
    Table,
    TableKind,
    TableSpec,
    ValueType,
    Workbook,
    place_table,
)

__version__ = "0.1.0"

__all__ = [
    "AgentTurn",
    "BackendConfig",
    "Cell",
    "CellAddress",
    "CellRole",
    "ColumnSpec",
    "Phase",
    "Session",
    "Sheet",
    "Table",
    "TableKind",
    "TableSpec",
    "ToolCall",
    "ToolResult",
    "ValueType",
    "Workbook",
    "execute_tool",
    "make_backend",
    "parse_address",
    "place_table",
    "tool_schemas",
    "validate_tool_call",
    "__version__",
]
