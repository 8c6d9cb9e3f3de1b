"""Next-step suggestion generation.

Every completed turn ends with exactly three suggestion pills. The
preferred source is the backend (a separate structured call whose reply is
a JSON array of {thought, suggestion} objects); replies are validated for
cardinality, length, and groundedness, with one reprompt before falling
back to deterministic phase-aware templates.

Groundedness: any double-quoted name inside a suggestion must match an
existing table or column header, so the agent never proposes work on
tables that are not in the sheet.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from gridmate.workbook import NUMERIC_TYPES, Workbook

SUGGESTIONS_SCHEMA_VERSION = "suggestions/v1"
SUGGESTION_COUNT = 3
MAX_PILL_LENGTH = 120


@dataclass(frozen=True)
class Suggestion:
    thought: str
    text: str


class MalformedSuggestionReply(ValueError):
    pass


_QUOTED = re.compile(r'"([^"]+)"')


def _known_names(workbook: Workbook) -> set[str]:
    names = set()
    for sheet in workbook.sheets:
        names.add(sheet.name.casefold())
        for table in sheet.tables:
            names.add(table.name.casefold())
            for column in table.columns:
                names.add(column.header.casefold())
    return names


def parse_reply(reply: object, workbook: Workbook) -> list[Suggestion]:
    """Validate a backend suggestion reply; raises MalformedSuggestionReply."""
    if not isinstance(reply, list):
        raise MalformedSuggestionReply("reply must be a JSON array")
    if len(reply) != SUGGESTION_COUNT:
        raise MalformedSuggestionReply(
            f"need exactly {SUGGESTION_COUNT} suggestions, got {len(reply)}"
        )
    known = _known_names(workbook)
    suggestions = []
    for index, item in enumerate(reply):
        if not isinstance(item, dict):
            raise MalformedSuggestionReply(f"item {index} must be an object")
        text = item.get("suggestion")
        thought = item.get("thought", "")
        if not isinstance(text, str) or not text.strip():
            raise MalformedSuggestionReply(f"item {index} needs a non-empty 'suggestion'")
        if not isinstance(thought, str):
            raise MalformedSuggestionReply(f"item {index} 'thought' must be a string")
        if len(text) > MAX_PILL_LENGTH:
            raise MalformedSuggestionReply(
                f"item {index} is {len(text)} chars; pills are capped at {MAX_PILL_LENGTH}"
            )
        for name in _QUOTED.findall(text):
            if name.casefold() not in known:
                raise MalformedSuggestionReply(
                    f"item {index} mentions {name!r}, which is not an existing table or column"
                )
        suggestions.append(Suggestion(thought=thought, text=text))
    return suggestions


def generate_suggestions(backend, workbook: Workbook, history: list, last_message: str,
                         goal_summary: str, phase) -> list[Suggestion]:
    """Three pills from the backend, or deterministic fallbacks.

    The backend gets one reprompt carrying the validation error; a second
    bad reply (or a backend without scripted suggestions) falls back.
    """
    error_note = None
    for _attempt in range(2):
        try:
            reply = backend.suggest(
                workbook=workbook,
                history=history,
                last_message=last_message,
                goal_summary=goal_summary,
                phase=phase,
                error_note=error_note,
            )
        except Exception:
            break
        try:
            return parse_reply(reply, workbook)
        except MalformedSuggestionReply as error:
            error_note = str(error)
    return fallback_suggestions(phase, workbook)


def _clamped(text: str, fallback: str) -> str:
    return text if len(text) <= MAX_PILL_LENGTH else fallback


def fallback_suggestions(phase, workbook: Workbook) -> list[Suggestion]:
    """Deterministic phase-aware pills; total over every workbook."""
    from gridmate.orchestrator import Phase

    if phase is Phase.GATHER_REQUIREMENTS:
        return [
            Suggestion(
                "I should say who will read this spreadsheet so the schema fits them.",
                "Describe the audience for this spreadsheet.",
            ),
            Suggestion(
                "Budgets differ month to month versus year to year; the timescale matters.",
                "Set the timescale the data should cover.",
            ),
            Suggestion(
                "Extra context or an example document would pin down the requirements.",
                "Share more context or paste example data.",
            ),
        ]
    if phase is Phase.DEFINE_DATA_TABLES:
        return [
            Suggestion(
                "A concrete schema proposal is the fastest way to react to something.",
                "Propose a table schema for my data.",
            ),
            Suggestion(
                "Example rows would show how the schema behaves before committing.",
                "Prototype the table with a few example rows.",
            ),
            Suggestion(
                "Once the prototype looks right it should live in the sheet.",
                "Transfer the prototyped table to the sheet.",
            ),
        ]

    # Extract-insights pills, parameterized by an existing table when one
    # has a numeric column to aggregate.
    target = None
    for sheet in workbook.sheets:
        for table in sheet.tables:
            for column in table.columns:
                if column.value_type in NUMERIC_TYPES:
                    target = (table.name, column.header)
                    break
            if target:
                break
        if target:
            break
    if target is None:
        return [
            Suggestion("Totals are the first insight worth checking.",
                       "Add a table that summarizes the data."),
            Suggestion("Ordering rows makes the extremes obvious.",
                       "Sort the data by its most important column."),
            Suggestion("A chart would make the distribution visible at a glance.",
                       "Create a chart once a numeric column exists."),
        ]
    table_name, column_header = target
    return [
        Suggestion(
            f"A total of {column_header} would summarize {table_name} in one number.",
            _clamped(f'Summarize the total "{column_header}" in "{table_name}".',
                     "Add a table that summarizes the data."),
        ),
        Suggestion(
            f"Sorting {table_name} by {column_header} surfaces the largest entries.",
            _clamped(f'Sort "{table_name}" by "{column_header}" in descending order.',
                     "Sort the data by its most important column."),
        ),
        Suggestion(
            f"A chart of {column_header} would make {table_name} easier to read.",
            _clamped(f'Create a pie chart of "{column_header}" in "{table_name}".',
                     "Create a chart for the main numeric column."),
        ),
    ]
