"""Pluggable agent backends.

Three modes share one interface: ``plan`` maps a system prompt, chat
history, and tool schemas onto an agent turn (utterance, tool calls, done
flag, refreshed goal summary), and ``suggest`` returns the raw structured
reply for the suggestion engine to validate.

  - Scripted: deterministic turns from a "script/v1" file; the workhorse
    for tests and replays.
  - Live: an OpenAI-compatible chat-completions endpoint with function
    tools attached; can record every exchange.
  - Replay: answers from a "fixture/v1" recording, keyed by a hash of the
    full request payload so any prompt drift fails loudly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import httpx

from gridmate.tools import ToolCall

logger = logging.getLogger(__name__)

SCRIPT_SCHEMA_VERSION = "script/v1"
FIXTURE_SCHEMA_VERSION = "fixture/v1"


class GatewayError(Exception):
    pass


class BackendUnavailable(GatewayError):
    """Transport failure or timeout; the turn aborts with the workbook intact."""


class ScriptMismatch(GatewayError):
    """The live user text diverged from what the script expects."""


class FixtureMiss(GatewayError):
    """Replay request was never recorded; carries the divergent hash."""


@dataclass
class AgentTurn:
    """One backend planning step: say something and/or run tools."""

    utterance: str | None = None
    tool_calls: list[ToolCall] = field(default_factory=list)
    done: bool = False
    goal_summary: str | None = None

    def __post_init__(self) -> None:
        if self.done and self.tool_calls:
            raise ValueError("a done turn cannot carry tool calls")


@dataclass
class BackendConfig:
    mode: str = "scripted"  # live | scripted | replay
    api_base: str = ""
    api_key: str = ""
    model: str = ""
    timeout_ms: int = 30_000
    script_path: str | None = None
    fixture_path: str | None = None

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "BackendConfig":
        env = dict(os.environ if env is None else env)
        return cls(
            mode=env.get("AGENT_BACKEND", "scripted"),
            api_base=env.get("AGENT_API_BASE", ""),
            api_key=env.get("AGENT_API_KEY", ""),
            model=env.get("AGENT_MODEL", ""),
            timeout_ms=int(env.get("AGENT_TIMEOUT_MS", "30000")),
            script_path=env.get("AGENT_SCRIPT"),
            fixture_path=env.get("AGENT_FIXTURE"),
        )

    def validate(self) -> None:
        if self.mode == "live":
            missing = [
                name for name, value in
                (("AGENT_API_BASE", self.api_base), ("AGENT_API_KEY", self.api_key), ("AGENT_MODEL", self.model))
                if not value
            ]
            if missing:
                raise GatewayError(f"live mode needs {', '.join(missing)}")
        elif self.mode == "scripted":
            if not self.script_path:
                raise GatewayError("scripted mode needs AGENT_SCRIPT")
        elif self.mode == "replay":
            if not self.fixture_path:
                raise GatewayError("replay mode needs AGENT_FIXTURE")
        else:
            raise GatewayError(f"unknown backend mode {self.mode!r}")


def make_backend(config: BackendConfig, transport: httpx.BaseTransport | None = None):
    config.validate()
    if config.mode == "scripted":
        return ScriptedBackend.from_file(config.script_path)
    if config.mode == "replay":
        return ReplayBackend.from_file(config.fixture_path)
    return LiveBackend(config, transport=transport)


# --- Scripted ---------------------------------------------------------------

def load_script(path: str | Path) -> dict:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    if document.get("version") != SCRIPT_SCHEMA_VERSION:
        raise GatewayError(f"script must declare version {SCRIPT_SCHEMA_VERSION!r}")
    for turn_index, turn in enumerate(document.get("turns", [])):
        plans = turn.get("plans", [])
        if not plans:
            raise GatewayError(f"turn {turn_index} has no plans")
        if not plans[-1].get("done"):
            raise GatewayError(f"turn {turn_index}: the last plan must be done")
    return document


class ScriptedBackend:
    """Replays hand-authored agent turns; raises ScriptMismatch on drift."""

    def __init__(self, script: dict):
        self.script = script
        self.turn_index = -1
        self.plan_index = 0
        self.suggestion_replies: list = []

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        return cls(load_script(path))

    @property
    def user_inputs(self) -> list[str]:
        return [turn["user"] for turn in self.script.get("turns", [])]

    def _current_turn(self) -> dict:
        turns = self.script.get("turns", [])
        if not 0 <= self.turn_index < len(turns):
            raise ScriptMismatch(f"script has no turn {self.turn_index}")
        return turns[self.turn_index]

    def plan(self, system_prompt: str, history: list[dict], tool_schemas: list[dict]) -> AgentTurn:
        del system_prompt, tool_schemas
        last_user = next((m["text"] for m in reversed(history) if m["role"] == "user"), "")
        turns = self.script.get("turns", [])
        if self.turn_index < 0 or self.plan_index >= len(self._current_turn().get("plans", [])):
            self.turn_index += 1
            self.plan_index = 0
            turn = self._current_turn()
            expected = turn.get("user")
            if expected is not None and expected != last_user:
                raise ScriptMismatch(
                    f"turn {self.turn_index} expects user text {expected!r}, got {last_user!r}"
                )
            replies = turn.get("suggestion_replies")
            if replies is None and "suggestions" in turn:
                replies = [turn["suggestions"]]
            self.suggestion_replies = list(replies or [])
        turn = self._current_turn()
        plan = turn["plans"][self.plan_index]
        self.plan_index += 1
        return AgentTurn(
            utterance=plan.get("utterance"),
            tool_calls=[ToolCall(t["name"], t.get("args", {})) for t in plan.get("tools", [])],
            done=bool(plan.get("done", False)),
            goal_summary=plan.get("goal_summary"),
        )

    def suggest(self, **context) -> object:
        del context
        if not self.suggestion_replies:
            raise GatewayError("script provides no (more) suggestion replies")
        return self.suggestion_replies.pop(0)


# --- Request canonicalization and hashing -----------------------------------

def request_hash(request: dict) -> str:
    canonical = json.dumps(request, separators=(",", ":"), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _plan_request(model: str, system_prompt: str, history: list[dict], tool_schemas: list[dict]) -> dict:
    messages = [{"role": "system", "content": system_prompt}]
    for message in history:
        role = {"user": "user", "agent": "assistant", "toolEvent": "user"}[message["role"]]
        text = message["text"]
        if message["role"] == "toolEvent":
            text = f"[tool event] {text}"
        messages.append({"role": role, "content": text})
    return {
        "kind": "plan",
        "model": model,
        "messages": messages,
        "tools": [
            {
                "type": "function",
                "function": {
                    "name": schema["name"],
                    "description": schema["description"],
                    "parameters": {
                        "type": "object",
                        "properties": {
                            p["name"]: {
                                "type": p["type"],
                                "description": p["description"],
                                **({"enum": p["enum"]} if "enum" in p else {}),
                            }
                            for p in schema["parameters"]
                        },
                        "required": [p["name"] for p in schema["parameters"] if p["required"]],
                    },
                },
            }
            for schema in tool_schemas
        ],
    }


def _suggest_request(model: str, state_text: str, history: list[dict], last_message: str,
                     goal_summary: str, phase: str, error_note: str | None) -> dict:
    prompt = (
        "You help a spreadsheet programmer decide their next step. "
        "Given the sheet state, conversation, and goal, reply with a JSON array of exactly "
        "three objects {\"thought\", \"suggestion\"}. Think as the programmer would before "
        "each suggestion. Keep suggestions imperative, under 120 characters, and only about "
        "tables that already exist."
    )
    if error_note:
        prompt += f" Your previous reply was rejected: {error_note}."
    return {
        "kind": "suggest",
        "model": model,
        "state": state_text,
        "history": [{"role": m["role"], "text": m["text"]} for m in history],
        "lastMessage": last_message,
        "goalSummary": goal_summary,
        "phase": phase,
        "prompt": prompt,
    }


# --- Live --------------------------------------------------------------------

class LiveBackend:
    """Chat-completions endpoint with function tools; optionally records."""

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(
            base_url=config.api_base,
            timeout=config.timeout_ms / 1000.0,
            transport=transport,
        )
        self.recorded: list[dict] = []
        self.recording = False

    def start_recording(self) -> None:
        self.recording = True
        self.recorded = []

    def write_fixture(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.recorded, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    def _post(self, request: dict) -> dict:
        body = {k: v for k, v in request.items() if k != "kind"}
        if request["kind"] == "suggest":
            # The structured suggestion call rides the same endpoint as a
            # plain chat message.
            body = {
                "model": request["model"],
                "messages": [
                    {"role": "system", "content": request["prompt"]},
                    {"role": "user", "content": json.dumps({
                        "state": request["state"],
                        "lastMessage": request["lastMessage"],
                        "goalSummary": request["goalSummary"],
                        "phase": request["phase"],
                    }, ensure_ascii=False)},
                ],
            }
        try:
            response = self._client.post(
                "/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.config.api_key}"},
            )
            response.raise_for_status()
        except httpx.TimeoutException as error:
            raise BackendUnavailable(f"backend timed out after {self.config.timeout_ms} ms") from error
        except httpx.HTTPError as error:
            raise BackendUnavailable(f"backend transport error: {error}") from error
        payload = response.json()
        if self.recording:
            self.recorded.append({
                "requestHash": request_hash(request),
                "request": request,  # no credentials: the key lives in headers only
                "response": payload,
            })
        return payload

    def plan(self, system_prompt: str, history: list[dict], tool_schemas: list[dict]) -> AgentTurn:
        request = _plan_request(self.config.model, system_prompt, history, tool_schemas)
        return parse_completion(self._post(request))

    def suggest(self, *, workbook, history, last_message, goal_summary, phase, error_note=None) -> object:
        from gridmate.codec import serialize_state

        request = _suggest_request(
            self.config.model, serialize_state(workbook), history, last_message,
            goal_summary, getattr(phase, "value", str(phase)), error_note,
        )
        payload = self._post(request)
        content = payload["choices"][0]["message"].get("content") or "[]"
        try:
            return json.loads(content)
        except json.JSONDecodeError:
            return content


def parse_completion(payload: dict) -> AgentTurn:
    """Map a chat-completions response onto an AgentTurn.

    A reply without tool calls is a done turn. A trailing "GOAL: ..." line
    in the content refreshes the goal summary without reaching the user.
    """
    message = payload["choices"][0]["message"]
    calls = [
        ToolCall(
            item["function"]["name"],
            json.loads(item["function"]["arguments"]) if item["function"].get("arguments") else {},
        )
        for item in message.get("tool_calls") or []
    ]
    content = message.get("content") or None
    goal_summary = None
    if content:
        lines = content.splitlines()
        kept = []
        for line in lines:
            if line.startswith("GOAL:"):
                goal_summary = line[len("GOAL:"):].strip()
            else:
                kept.append(line)
        content = "\n".join(kept).strip() or None
    return AgentTurn(
        utterance=content,
        tool_calls=calls,
        done=not calls,
        goal_summary=goal_summary,
    )


# --- Replay -------------------------------------------------------------------

def load_fixture(path: str | Path) -> list[dict]:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(document, list):
        raise GatewayError("a fixture file is a JSON array of request/response entries")
    return document


class ReplayBackend:
    """Byte-matched replay of recorded backend exchanges."""

    def __init__(self, entries: list[dict]):
        self.by_hash: dict[str, list[dict]] = {}
        for entry in entries:
            self.by_hash.setdefault(entry["requestHash"], []).append(entry["response"])
        self.model = next(
            (entry["request"].get("model", "") for entry in entries if "request" in entry), "",
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayBackend":
        return cls(load_fixture(path))

    def _lookup(self, request: dict) -> dict:
        digest = request_hash(request)
        responses = self.by_hash.get(digest)
        if not responses:
            raise FixtureMiss(f"no recorded response for request hash {digest}")
        return responses.pop(0) if len(responses) > 1 else responses[0]

    def plan(self, system_prompt: str, history: list[dict], tool_schemas: list[dict]) -> AgentTurn:
        request = _plan_request(self.model, system_prompt, history, tool_schemas)
        return parse_completion(self._lookup(request))

    def suggest(self, *, workbook, history, last_message, goal_summary, phase, error_note=None) -> object:
        from gridmate.codec import serialize_state

        request = _suggest_request(
            self.model, serialize_state(workbook), history, last_message,
            goal_summary, getattr(phase, "value", str(phase)), error_note,
        )
        payload = self._lookup(request)
        content = payload["choices"][0]["message"].get("content") or "[]"
        try:
            return json.loads(content)
        except json.JSONDecodeError:
            return content
