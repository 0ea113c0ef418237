"""Provider-agnostic chat-model access for the transformation pipelines.

Prompt templates are data files under restruct/prompts/, one per mode.
Chunks are processed strictly sequentially, with the prior response
injected as assistant context so the model keeps continuity across
chunk boundaries.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources

import requests

from .chunker import Chunk, estimate_tokens
from .errors import ProviderError, SequenceError

log = logging.getLogger(__name__)

INPUT_WINDOW_TOKENS = 128_000
OUTPUT_WINDOW_TOKENS = 16_384

DEFAULT_TEMPERATURE = 0.2
DEFAULT_TOP_P = 1.0
DEFAULT_FREQUENCY_PENALTY = 0.0
DEFAULT_PRESENCE_PENALTY = 0.0


@dataclass(frozen=True)
class ModelParams:
    model: str = "gpt-4o"
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = OUTPUT_WINDOW_TOKENS
    top_p: float = DEFAULT_TOP_P
    frequency_penalty: float = DEFAULT_FREQUENCY_PENALTY
    presence_penalty: float = DEFAULT_PRESENCE_PENALTY


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown chat role: {self.role}")


@dataclass(frozen=True)
class PromptTemplate:
    mode: str  # regenerate | reorganize
    system: str
    first_user: str
    continuation_user: str  # holds {part_index} and {content} exactly once
    assistant_context: str  # holds {previous_output} exactly once

    def __post_init__(self):
        for holder, placeholder in (
            (self.continuation_user, "{part_index}"),
            (self.continuation_user, "{content}"),
            (self.assistant_context, "{previous_output}"),
        ):
            if holder.count(placeholder) != 1:
                raise ValueError(
                    f"template for mode {self.mode!r} must contain {placeholder} exactly once"
                )


def load_template(mode: str) -> PromptTemplate:
    """Load the packaged prompt template for a pipeline mode."""
    if mode not in ("regenerate", "reorganize"):
        raise ValueError(f"unknown template mode: {mode}")
    raw = resources.files("restruct.prompts").joinpath(f"{mode}.json").read_text("utf-8")
    data = json.loads(raw)
    return PromptTemplate(
        mode=mode,
        system=data["system"],
        first_user=data["first_user"],
        continuation_user=data["continuation_user"],
        assistant_context=data["assistant_context"],
    )


def _truncate_front(text: str, max_tokens: int) -> str:
    """Keep the tail of `text` so its estimate fits; seams matter most."""
    if estimate_tokens(text) <= max_tokens:
        return text
    keep_bytes = max_tokens * 4
    encoded = text.encode("utf-8")[-keep_bytes:]
    return encoded.decode("utf-8", errors="ignore")


def build_messages(
    template: PromptTemplate,
    chunk: Chunk,
    previous_output: str | None = None,
    *,
    input_window: int = INPUT_WINDOW_TOKENS,
    budget: int | None = None,
) -> list[ChatMessage]:
    """Messages for one sequential call; pure in all arguments."""
    if chunk.index <= 1:
        return [
            ChatMessage("system", template.system),
            ChatMessage("user", template.first_user + "\n\n" + chunk.html),
        ]
    if previous_output is None:
        raise ValueError(f"chunk {chunk.index} requires previous_output")
    static_cost = estimate_tokens(template.system) + estimate_tokens(
        template.continuation_user
    ) + estimate_tokens(template.assistant_context)
    allowance = input_window - (budget if budget is not None else chunk.token_estimate)
    allowance -= static_cost
    context = _truncate_front(previous_output, max(0, allowance))
    user = template.continuation_user.replace(
        "{part_index}", str(chunk.index)
    ).replace("{content}", chunk.html)
    return [
        ChatMessage("system", template.system),
        ChatMessage("assistant", template.assistant_context.replace("{previous_output}", context)),
        ChatMessage("user", user),
    ]


class MockChatProvider:
    """Replays a scripted response list; entries may be exceptions to raise.

    Single-consumer. Every call is recorded on `calls` for log inspection.
    """

    def __init__(self, script: list):
        self.script = list(script)
        self.calls: list[dict] = []
        self._cursor = 0

    def complete(self, messages: list[ChatMessage], params: ModelParams) -> str:
        self.calls.append({"messages": list(messages), "params": params})
        if self._cursor >= len(self.script):
            raise ProviderError("mock script exhausted")
        entry = self.script[self._cursor]
        self._cursor += 1
        if isinstance(entry, Exception):
            raise ProviderError(str(entry)) from entry
        return entry


class RemoteChatProvider:
    """Chat-completions endpoint speaking the common JSON wire format."""

    def __init__(self, base_url: str, api_key: str, timeout: float = 300.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout

    def complete(self, messages: list[ChatMessage], params: ModelParams) -> str:
        payload = {
            "model": params.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "top_p": params.top_p,
            "frequency_penalty": params.frequency_penalty,
            "presence_penalty": params.presence_penalty,
        }
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"chat completion failed: {exc}") from exc


def run_sequence(
    chunks: list[Chunk],
    template: PromptTemplate,
    provider,
    params: ModelParams,
    *,
    input_window: int = INPUT_WINDOW_TOKENS,
    budget: int | None = None,
) -> list[str]:
    """One provider call per chunk, strictly in index order.

    Each response is threaded into the next call's assistant context.
    Aborts on the first provider failure, reporting the chunk index.
    """
    responses: list[str] = []
    previous: str | None = None
    for chunk in sorted(chunks, key=lambda c: c.index):
        messages = build_messages(
            template, chunk, previous, input_window=input_window, budget=budget
        )
        try:
            response = provider.complete(messages, params)
        except ProviderError as exc:
            raise SequenceError(chunk.index, exc) from exc
        if estimate_tokens(response) > params.max_tokens:
            log.warning(
                "chunk %d response estimate exceeds max_tokens=%d; output may be truncated",
                chunk.index,
                params.max_tokens,
            )
        responses.append(response)
        previous = response
    return responses


_FENCE_RE = re.compile(r"```[a-zA-Z0-9]*\r?\n(.*?)```", re.DOTALL)


def extract_html_payload(response: str) -> str:
    """Strip model chatter: fenced block first, then outermost tag span."""
    match = _FENCE_RE.search(response)
    if match:
        return match.group(1).strip()
    start = response.find("<")
    end = response.rfind(">")
    if start != -1 and end > start:
        return response[start : end + 1]
    return response.strip()


def extract_json_array_payload(response: str) -> str:
    """Like extract_html_payload, but for bracketed JSON arrays."""
    match = _FENCE_RE.search(response)
    if match:
        response = match.group(1)
    start = response.find("[")
    end = response.rfind("]")
    if start != -1 and end > start:
        return response[start : end + 1]
    return response.strip()
