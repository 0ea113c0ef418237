"""Gateway: templates, message building, sequential runs, payload cleanup."""

import pytest

from restruct.chunker import Chunk, estimate_tokens
from restruct.errors import SequenceError
from restruct.llm import (
    INPUT_WINDOW_TOKENS,
    MockChatProvider,
    ModelParams,
    build_messages,
    extract_html_payload,
    extract_json_array_payload,
    load_template,
    run_sequence,
)


def make_chunk(index, html="<div>x</div>"):
    return Chunk(
        index=index,
        html=html,
        token_estimate=estimate_tokens(html),
        ancestor_path="html>body",
        covered_ids=[],
    )


def test_default_params_are_pinned():
    params = ModelParams()
    assert params.temperature == 0.2
    assert params.max_tokens == 16384
    assert params.top_p == 1.0
    assert params.frequency_penalty == 0.0
    assert params.presence_penalty == 0.0


def test_templates_load_and_validate():
    for mode in ("regenerate", "reorganize"):
        template = load_template(mode)
        assert template.continuation_user.count("{part_index}") == 1
        assert template.continuation_user.count("{content}") == 1
        assert template.assistant_context.count("{previous_output}") == 1


def test_regenerate_system_prompt_content():
    template = load_template("regenerate")
    assert "Remove non-essential elements" in template.system
    assert "text-only HTML" in template.first_user


def test_reorganize_prompt_content():
    template = load_template("reorganize")
    assert "Do not introduce or remove elements" in template.first_user


def test_first_chunk_messages():
    template = load_template("regenerate")
    messages = build_messages(template, make_chunk(1, "<p>a</p>"))
    assert [m.role for m in messages] == ["system", "user"]
    assert messages[1].content.endswith("<p>a</p>")


def test_continuation_messages():
    template = load_template("regenerate")
    messages = build_messages(template, make_chunk(2, "<p>b</p>"), "...<div>A</div>")
    assert [m.role for m in messages] == ["system", "assistant", "user"]
    assert "<div>A</div>" in messages[1].content
    assert "part 2" in messages[2].content
    assert "<p>b</p>" in messages[2].content


def test_continuation_requires_previous():
    template = load_template("regenerate")
    with pytest.raises(ValueError):
        build_messages(template, make_chunk(2))


def test_build_messages_pure():
    template = load_template("regenerate")
    a = build_messages(template, make_chunk(2, "<p>b</p>"), "prev")
    b = build_messages(template, make_chunk(2, "<p>b</p>"), "prev")
    assert a == b


def test_previous_output_front_truncated():
    template = load_template("regenerate")
    budget = 24_000
    huge = "START " + ("filler " * 200_000) + "THE-END"
    messages = build_messages(
        template, make_chunk(2), huge, input_window=INPUT_WINDOW_TOKENS, budget=budget
    )
    assistant = messages[1].content
    assert "THE-END" in assistant  # tail kept
    assert "START" not in assistant  # front dropped
    total = sum(estimate_tokens(m.content) for m in messages)
    assert total <= INPUT_WINDOW_TOKENS


def test_run_sequence_echo():
    template = load_template("regenerate")
    provider = MockChatProvider(["<p>out</p>"])
    out = run_sequence([make_chunk(1)], template, provider, ModelParams())
    assert out == ["<p>out</p>"]
    assert len(provider.calls) == 1


def test_run_sequence_threads_context():
    template = load_template("regenerate")
    provider = MockChatProvider(["R1", "R2", "R3"])
    chunks = [make_chunk(i) for i in (1, 2, 3)]
    out = run_sequence(chunks, template, provider, ModelParams())
    assert out == ["R1", "R2", "R3"]
    # Call k carries response k-1 in its assistant context.
    for k in (1, 2):
        assistant = provider.calls[k]["messages"][1]
        assert assistant.role == "assistant"
        assert f"R{k}" in assistant.content


def test_run_sequence_aborts_with_index():
    template = load_template("regenerate")
    provider = MockChatProvider(["ok", RuntimeError("boom"), "never"])
    chunks = [make_chunk(i) for i in (1, 2, 3)]
    with pytest.raises(SequenceError) as exc_info:
        run_sequence(chunks, template, provider, ModelParams())
    assert exc_info.value.chunk_index == 2
    assert len(provider.calls) == 2  # no third call issued


def test_extract_html_payload_fenced():
    assert extract_html_payload("```html\n<p>a</p>\n```") == "<p>a</p>"


def test_extract_html_payload_passthrough():
    assert extract_html_payload("<p>a</p>") == "<p>a</p>"


def test_extract_html_payload_bracket_rule():
    assert extract_html_payload("Here is the page: <div>x</div> Done.") == "<div>x</div>"


def test_extract_html_payload_plain_text():
    assert extract_html_payload("  nothing structured  ") == "nothing structured"


def test_extract_json_array_payload():
    assert extract_json_array_payload('```json\n[{"node": 1}]\n```') == '[{"node": 1}]'
    assert extract_json_array_payload('noise [1, 2] trailing') == "[1, 2]"
