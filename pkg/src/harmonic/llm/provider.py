"""Provider abstraction: a neutral request/response shape with live and
replay backends. Live adapters translate to each vendor's wire format at the
edge; credentials come from environment variables only.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol

import httpx

from ..transcript import Transcript, canonical


class ProviderError(RuntimeError):
    pass


class ReplayMismatch(ProviderError):
    pass


class ReplayExhausted(ProviderError):
    pass


@dataclass(frozen=True)
class ToolCall:
    name: str
    args: dict

    def as_dict(self) -> dict:
        return {"name": self.name, "args": self.args}


@dataclass(frozen=True)
class Request:
    model: str
    system: str
    messages: tuple[dict, ...]
    tools: tuple[dict, ...]
    temperature: float = 0.0
    # structured view for in-process policies; not part of the wire request
    context: Any = field(default=None, compare=False, repr=False)

    def wire(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "system": self.system,
            "messages": list(self.messages),
            "tools": list(self.tools),
        }

    def digest(self) -> str:
        return hashlib.sha256(canonical(self.wire()).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Response:
    text: str = ""
    tool_calls: tuple[ToolCall, ...] = ()

    def as_dict(self) -> dict:
        return {"text": self.text, "tool_calls": [c.as_dict() for c in self.tool_calls]}

    @classmethod
    def from_dict(cls, data: dict) -> "Response":
        calls = tuple(ToolCall(c["name"], dict(c.get("args") or {})) for c in data.get("tool_calls") or [])
        return cls(data.get("text") or "", calls)


class Provider(Protocol):
    def complete(self, request: Request) -> Response: ...


# --------------------------------------------------------------------------
# Replay
# --------------------------------------------------------------------------


class ReplayProvider:
    """Serves recorded responses in order, checking position and request digest."""

    def __init__(self, exchanges: Iterable[dict], check_digest: bool = True):
        self.exchanges = list(exchanges)
        self.position = 0
        self.check_digest = check_digest

    @classmethod
    def from_transcript(cls, t: Transcript, check_digest: bool = True) -> "ReplayProvider":
        return cls((e.payload for e in t.channel("exchange")), check_digest)

    def complete(self, request: Request) -> Response:
        if self.position >= len(self.exchanges):
            raise ReplayExhausted(f"recording exhausted at exchange {self.position}")
        rec = self.exchanges[self.position]
        if rec.get("position") != self.position:
            raise ReplayMismatch(f"recording out of order at exchange {self.position}")
        if self.check_digest and rec.get("request_digest") != request.digest():
            raise ReplayMismatch(f"request {self.position} differs from the recording")
        self.position += 1
        return Response.from_dict(rec["response"])


class PolicyProvider:
    """In-process provider driven by a policy over the structured context."""

    def __init__(self, policy: Callable[[Request], Response]):
        self.policy = policy

    def complete(self, request: Request) -> Response:
        return self.policy(request)


# --------------------------------------------------------------------------
# Live
# --------------------------------------------------------------------------

VENDORS = {
    "anthropic": ("ANTHROPIC_API_KEY", "https://api.anthropic.com/v1/messages"),
    "openai": ("OPENAI_API_KEY", "https://api.openai.com/v1/chat/completions"),
    "gemini": ("GEMINI_API_KEY", "https://generativelanguage.googleapis.com/v1beta/models/{model}:generateContent"),
}


def vendor_for(model: str) -> str:
    m = model.lower()
    if m.startswith("claude"):
        return "anthropic"
    if m.startswith("gemini"):
        return "gemini"
    if m.startswith(("gpt", "o1", "o3", "o4")):
        return "openai"
    raise ProviderError(f"cannot tell the vendor of model {model!r}")


def anthropic_body(req: Request) -> dict:
    return {
        "model": req.model,
        "max_tokens": 1024,
        "temperature": req.temperature,
        "system": req.system,
        "messages": list(req.messages),
        "tools": [{"name": t["name"], "description": t["description"], "input_schema": t["input_schema"]} for t in req.tools],
    }


def anthropic_parse(data: dict) -> Response:
    text = "".join(b.get("text", "") for b in data.get("content", []) if b.get("type") == "text")
    calls = tuple(ToolCall(b["name"], dict(b.get("input") or {})) for b in data.get("content", []) if b.get("type") == "tool_use")
    return Response(text.strip(), calls)


def openai_body(req: Request) -> dict:
    return {
        "model": req.model,
        "temperature": req.temperature,
        "messages": [{"role": "system", "content": req.system}] + list(req.messages),
        "tools": [
            {"type": "function", "function": {"name": t["name"], "description": t["description"], "parameters": t["input_schema"]}}
            for t in req.tools
        ],
    }


def openai_parse(data: dict) -> Response:
    msg = data["choices"][0]["message"]
    calls = []
    for c in msg.get("tool_calls") or []:
        fn = c["function"]
        try:
            args = json.loads(fn.get("arguments") or "{}")
        except json.JSONDecodeError:
            args = {"_unparsed": fn.get("arguments")}
        calls.append(ToolCall(fn["name"], args))
    return Response((msg.get("content") or "").strip(), tuple(calls))


def _gemini_schema(schema: dict) -> dict:
    # the function-declaration dialect has no additionalProperties/oneOf
    out = {k: v for k, v in schema.items() if k not in ("additionalProperties", "oneOf")}
    if "properties" in out:
        out["properties"] = {k: _gemini_schema(v) for k, v in out["properties"].items()}
    if isinstance(out.get("type"), list):
        out["type"] = out["type"][0]
    return out


def gemini_body(req: Request) -> dict:
    return {
        "systemInstruction": {"parts": [{"text": req.system}]},
        "contents": [{"role": "user", "parts": [{"text": m["content"]}]} for m in req.messages],
        "tools": [
            {
                "functionDeclarations": [
                    {"name": t["name"], "description": t["description"], "parameters": _gemini_schema(t["input_schema"])}
                    for t in req.tools
                ]
            }
        ],
        "generationConfig": {"temperature": req.temperature},
    }


def gemini_parse(data: dict) -> Response:
    parts = data["candidates"][0]["content"].get("parts", [])
    text = "".join(p.get("text", "") for p in parts)
    calls = tuple(ToolCall(p["functionCall"]["name"], dict(p["functionCall"].get("args") or {})) for p in parts if "functionCall" in p)
    return Response(text.strip(), calls)


ADAPTERS = {
    "anthropic": (anthropic_body, anthropic_parse),
    "openai": (openai_body, openai_parse),
    "gemini": (gemini_body, gemini_parse),
}


class LiveProvider:
    """HTTP provider. Reads the vendor's API key from the environment."""

    def __init__(
        self,
        model: str,
        *,
        temperature: float = 0.0,
        vendor: str | None = None,
        client: httpx.Client | None = None,
        env: dict | None = None,
        timeout: float = 60.0,
    ):
        if temperature != 0:
            raise ValueError("live providers run at temperature 0 only")
        self.model = model
        self.vendor = vendor or vendor_for(model)
        env_var, self.url = VENDORS[self.vendor]
        key = (env if env is not None else os.environ).get(env_var)
        if not key:
            raise ProviderError(f"set {env_var} to use {self.vendor} models")
        self._key = key
        self.client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict:
        if self.vendor == "anthropic":
            return {"x-api-key": self._key, "anthropic-version": "2023-06-01", "content-type": "application/json"}
        if self.vendor == "openai":
            return {"authorization": f"Bearer {self._key}", "content-type": "application/json"}
        return {"x-goog-api-key": self._key, "content-type": "application/json"}

    def complete(self, request: Request) -> Response:
        if request.temperature != 0:
            raise ValueError("live providers run at temperature 0 only")
        body_fn, parse_fn = ADAPTERS[self.vendor]
        url = self.url.format(model=request.model)
        try:
            resp = self.client.post(url, json=body_fn(request), headers=self._headers())
            resp.raise_for_status()
            return parse_fn(resp.json())
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"{self.vendor} request failed: {exc}") from exc
