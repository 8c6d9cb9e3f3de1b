"""Session loop: observe the workbook, let the backend plan, execute tools,
respond, and suggest next steps.

One turn runs at a time per session. Each backend planning step may carry
tool calls; calls are validated before execution, and a validation error
is fed back so the backend can regenerate the call — at most three
attempts per call, after which the failure is reported in an event and the
turn moves on. Every successful execution is atomic, and the state before
a turn's first execution lands on the undo stack. Cancellation is
cooperative: the flag is honored between tool executions and between
planning iterations.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from gridmate.codec import serialize_state
from gridmate.gateway import AgentTurn, GatewayError, ScriptMismatch
from gridmate.suggestions import Suggestion, generate_suggestions
from gridmate.tools import ToolResult, ToolStatus, execute_tool, tool_schemas, validate_tool_call
from gridmate.workbook import SnapshotStack, TableKind, Workbook, snapshot

MAX_CALL_ATTEMPTS = 3
MAX_PLAN_ITERATIONS = 25


class OrchestratorError(Exception):
    pass


class TurnInFlight(OrchestratorError):
    """A second turn was started while one is running."""


class NothingToUndo(OrchestratorError):
    pass


class Phase(Enum):
    GATHER_REQUIREMENTS = "gather_requirements"
    DEFINE_DATA_TABLES = "define_data_tables"
    EXTRACT_INSIGHTS = "extract_insights"


_PHASE_ORDER = {
    Phase.GATHER_REQUIREMENTS: 0,
    Phase.DEFINE_DATA_TABLES: 1,
    Phase.EXTRACT_INSIGHTS: 2,
}


@dataclass
class Message:
    role: str  # user | agent | toolEvent
    text: str
    timestamp: float = field(default_factory=time.time)


@dataclass
class ConversationState:
    messages: list[Message] = field(default_factory=list)
    phase: Phase = Phase.GATHER_REQUIREMENTS
    goal_summary: str = ""
    pending_suggestions: list[Suggestion] = field(default_factory=list)


@dataclass
class TurnOutcome:
    events: list[dict]
    final_utterance: str | None
    suggestions: list[Suggestion]
    cancelled: bool = False
    aborted: bool = False


def build_system_prompt(state_text: str, phase: Phase, goal_summary: str) -> str:
    """Planning prompt: context, state JSON, process steps, goal duty,
    guidelines — in that order."""
    steps = (
        "1. Gather requirements: ask about the audience, context, and timescale "
        "of the spreadsheet, and request any related documents.\n"
        "2. Define data tables: propose a schema from the requirements and "
        "prototype the table as a Markdown pipe table in the chat, with example "
        "rows, before transferring it to the sheet with create_table.\n"
        "3. Extract insights: suggest and build insight tables, charts, sorting, "
        "filtering, and highlighting over the data tables. Prototype insight "
        "tables in Markdown too."
    )
    guidelines = (
        "- Use formulas (SUM, AVERAGE, SUMIFS, COUNTIF, IF, ...) for anything computed.\n"
        "- Tables must never overlap; leave a blank row or column between them.\n"
        "- Work in small steps: one table or change at a time, then report back.\n"
        "- When nothing is left to run, reply with a short summary of what changed."
    )
    return (
        "You are a spreadsheet assistant working inside a workbook editor. "
        "You build spreadsheets with the user step by step, using the provided tools.\n\n"
        f"Current workbook state (cell address, value, formula per cell):\n{state_text}\n\n"
        f"Follow this process (currently at: {phase.value}):\n{steps}\n\n"
        "After every reply, restate the user's overall goal on a final line "
        "starting with 'GOAL:'. "
        f"Current goal: {goal_summary or '(not yet known)'}\n\n"
        f"Guidelines:\n{guidelines}"
    )


def advance_phase(conversation: ConversationState, workbook: Workbook) -> Phase:
    """Forward-only phase transitions.

    Requirements are considered supplied once the goal summary is known and
    the user has sent a second message (answering or confirming); a placed
    Data table moves the plan to insight extraction regardless.
    """
    current = conversation.phase
    candidate = current
    user_messages = sum(1 for m in conversation.messages if m.role == "user")
    if conversation.goal_summary and user_messages >= 2:
        candidate = _max_phase(candidate, Phase.DEFINE_DATA_TABLES)
    if any(
        table.kind is TableKind.DATA
        for sheet in workbook.sheets
        for table in sheet.tables
    ):
        candidate = _max_phase(candidate, Phase.EXTRACT_INSIGHTS)
    conversation.phase = candidate
    return candidate


def _max_phase(a: Phase, b: Phase) -> Phase:
    return a if _PHASE_ORDER[a] >= _PHASE_ORDER[b] else b


class Session:
    """One workbook, one conversation, one backend; single turn in flight."""

    def __init__(self, backend, workbook: Workbook | None = None, session_id: str = ""):
        self.id = session_id
        self.backend = backend
        self.workbook = workbook or Workbook()
        self.conversation = ConversationState()
        self.undo_stack = SnapshotStack()
        self.events: list[dict] = []
        self.lock = threading.RLock()
        self.event_seen = threading.Condition(self.lock)
        self.cancel_requested = threading.Event()
        self.turn_active = False
        self.on_event: Callable[[dict], None] | None = None

    # -- events ---------------------------------------------------------

    def emit(self, event_type: str, data: dict) -> dict:
        with self.lock:
            event = {"n": len(self.events) + 1, "type": event_type, "data": data}
            self.events.append(event)
            self.event_seen.notify_all()
        if self.on_event is not None:
            self.on_event(event)
        return event

    def events_after(self, cursor: int) -> list[dict]:
        with self.lock:
            return [e for e in self.events if e["n"] > cursor]

    # -- history --------------------------------------------------------

    def _history_dicts(self) -> list[dict]:
        return [{"role": m.role, "text": m.text} for m in self.conversation.messages]

    def _append_message(self, role: str, text: str) -> None:
        self.conversation.messages.append(Message(role, text))

    # -- controls ---------------------------------------------------------

    def stop(self) -> None:
        """Ask the in-flight turn to halt at its next check point."""
        self.cancel_requested.set()

    def undo(self) -> None:
        """Restore the snapshot taken before the most recent tool batch."""
        with self.lock:
            if self.turn_active:
                raise TurnInFlight("cannot undo while a turn is running")
            snap = self.undo_stack.pop()
            if snap is None:
                raise NothingToUndo("nothing to undo")
            snap.restore(self.workbook)
        self.emit("state_update", {"state": _state_payload(self.workbook), "reason": "undo"})

    # -- the loop ---------------------------------------------------------

    def reserve_turn(self) -> bool:
        """Atomically claim the single turn slot; False when one is running."""
        with self.lock:
            if self.turn_active:
                return False
            self.turn_active = True
            self.cancel_requested.clear()
            return True

    def run_turn(self, user_message: str, _reserved: bool = False) -> TurnOutcome:
        if not _reserved and not self.reserve_turn():
            raise TurnInFlight("a turn is already running for this session")
        first_event = len(self.events)
        try:
            outcome = self._run_turn_inner(user_message)
        finally:
            with self.lock:
                self.turn_active = False
                self.event_seen.notify_all()
        outcome.events = self.events_after(first_event)
        return outcome

    def _run_turn_inner(self, user_message: str) -> TurnOutcome:
        self._append_message("user", user_message)
        pre_batch = snapshot(self.workbook)
        batch_saved = False
        final_utterance: str | None = None
        cancelled = False
        aborted = False
        repair_tool: str | None = None
        repair_attempts = 0

        for _iteration in range(MAX_PLAN_ITERATIONS):
            if self.cancel_requested.is_set():
                cancelled = True
                break
            state_text = serialize_state(self.workbook)
            prompt = build_system_prompt(state_text, self.conversation.phase, self.conversation.goal_summary)
            try:
                turn: AgentTurn = self.backend.plan(prompt, self._history_dicts(), tool_schemas())
            except GatewayError as error:
                kind = "script_mismatch" if isinstance(error, ScriptMismatch) else "backend_unavailable"
                self.emit("error", {"code": kind, "message": str(error)})
                aborted = True
                break

            if turn.goal_summary is not None:
                self.conversation.goal_summary = turn.goal_summary
            if turn.utterance:
                final_utterance = turn.utterance
                self._append_message("agent", turn.utterance)
                self.emit("utterance", {"text": turn.utterance})

            replan = False
            for call in turn.tool_calls:
                if self.cancel_requested.is_set():
                    cancelled = True
                    break
                attempt = repair_attempts + 1 if call.name == repair_tool else 1
                self.emit("tool_call", {"name": call.name, "args": call.args, "attempt": attempt})
                issue = validate_tool_call(call, self.workbook)
                if issue is not None:
                    self.emit("tool_result", {
                        "name": call.name,
                        "status": ToolStatus.VALIDATION_ERROR.value,
                        "message": issue.render(),
                        "revision": self.workbook.revision,
                    })
                    repair_tool, repair_attempts = call.name, attempt
                    if attempt >= MAX_CALL_ATTEMPTS:
                        self.emit("error", {
                            "code": "retries_exhausted",
                            "tool": call.name,
                            "attempts": attempt,
                            "message": f"{call.name} still invalid after {attempt} attempts; moving on",
                        })
                        self._append_message(
                            "toolEvent",
                            f"{call.name} was abandoned after {attempt} invalid attempts: {issue.render()}",
                        )
                        repair_tool, repair_attempts = None, 0
                        continue
                    self._append_message(
                        "toolEvent",
                        f"{call.name} rejected ({issue.render()}); regenerate the parameter and retry",
                    )
                    replan = True
                    break
                if not batch_saved:
                    self.undo_stack.push(pre_batch)
                    batch_saved = True
                result: ToolResult = execute_tool(call, self.workbook)
                self.emit("tool_result", {
                    "name": call.name,
                    "status": result.status.value,
                    "message": result.message,
                    "revision": result.state_revision,
                })
                self.emit("state_update", {"state": _state_payload(self.workbook)})
                self._append_message("toolEvent", f"{call.name}: {result.message}")
                if result.ok and call.name == repair_tool:
                    repair_tool, repair_attempts = None, 0

            if cancelled:
                break
            if replan:
                continue
            if turn.done:
                break
        else:
            self.emit("error", {
                "code": "plan_overrun",
                "message": f"backend did not finish within {MAX_PLAN_ITERATIONS} planning steps",
            })
            aborted = True

        phase_before = self.conversation.phase
        phase_now = advance_phase(self.conversation, self.workbook)
        if phase_now is not phase_before:
            self.emit("phase", {"phase": phase_now.value})

        suggestions: list[Suggestion] = []
        if cancelled:
            self.emit("error", {"code": "cancelled", "message": "turn cancelled by the user"})
        elif not aborted:
            suggestions = generate_suggestions(
                self.backend, self.workbook, self._history_dicts(),
                user_message, self.conversation.goal_summary, self.conversation.phase,
            )
            self.conversation.pending_suggestions = suggestions
            self.emit("suggestions", {
                "items": [{"thought": s.thought, "suggestion": s.text} for s in suggestions]
            })
        self.emit("done", {"cancelled": cancelled, "aborted": aborted})
        return TurnOutcome([], final_utterance, suggestions, cancelled=cancelled, aborted=aborted)


def _state_payload(workbook: Workbook) -> dict:
    from gridmate.codec import state_document

    return state_document(workbook)


def run_turn(session: Session, user_message: str) -> TurnOutcome:
    return session.run_turn(user_message)
