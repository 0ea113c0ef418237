"""Chunk packing, budgets, coverage, and stitching."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from restruct.chunker import chunk_document, estimate_tokens, stitch
from restruct.dom import TEXT, parse, serialize, structurally_equal
from restruct.errors import BudgetError
from restruct.extract import extract_accessible

from .strategies import documents


def test_estimate_examples():
    assert estimate_tokens("abcd") == 1
    assert estimate_tokens("") == 0
    assert estimate_tokens("x" * 10) == 3


def test_estimate_counts_bytes_not_chars():
    assert estimate_tokens("é" * 4) == 2  # two bytes per character in UTF-8


def test_budget_below_minimum():
    with pytest.raises(BudgetError):
        chunk_document(parse("<p>x</p>"), 15)


def _section(n_bytes: int, i: int) -> str:
    # <section>...</section> adds 19 bytes; pad the text to hit the target.
    return f"<section>{'x' * (n_bytes - 19)}</section>"


def test_three_sections_one_chunk_each():
    # Greedy trace by hand: each section estimates 100 tokens; any pair
    # would estimate 200 > 120, so every section gets its own chunk.
    html = "<html><body>" + "".join(_section(400, i) for i in range(3)) + "</body></html>"
    chunks = chunk_document(parse(html), 120)
    assert [c.index for c in chunks] == [1, 2, 3]
    assert all(c.token_estimate == 100 for c in chunks)
    assert all(c.ancestor_path == "html>body" for c in chunks)
    assert not any(c.oversize for c in chunks)


def test_everything_fits_one_chunk():
    doc = parse("<html><body><p>small</p><p>page</p></body></html>")
    chunks = chunk_document(doc, 1000)
    assert len(chunks) == 1
    assert chunks[0].token_estimate <= 1000


def test_oversize_div_recurses_into_children():
    # One ~290-token div holding three ~96-token paragraphs, budget 120:
    # the div splits over its children, one chunk per paragraph.
    paragraph = f"<p>{'y' * 375}</p>"
    html = f"<html><body><div>{paragraph * 3}</div></body></html>"
    chunks = chunk_document(parse(html), 120)
    assert len(chunks) == 3
    assert all(c.ancestor_path.endswith(">div") for c in chunks)
    assert all(c.token_estimate <= 120 for c in chunks)


def test_oversize_text_node_split_at_whitespace():
    words = " ".join(f"word{i:04d}" for i in range(200))  # ~2200 bytes
    doc = parse(f"<html><body>{words}</body></html>")
    chunks = chunk_document(doc, 100)
    assert len(chunks) > 1
    assert all(c.token_estimate <= 100 for c in chunks)
    text_ids = [n.id for n in doc.walk() if n.kind == TEXT and n.text.strip()]
    covered = [nid for c in chunks for nid in c.covered_ids]
    assert covered == text_ids  # the sole text node claimed exactly once


def test_indivisible_word_flagged_oversize():
    doc = parse(f"<html><body>{'z' * 500}</body></html>")
    chunks = chunk_document(doc, 20)
    assert any(c.oversize for c in chunks)


def test_head_context_rides_in_first_chunk():
    doc = parse(
        "<html><head><title>Shop</title><meta charset='utf-8'></head>"
        "<body><p>content</p></body></html>"
    )
    chunks = chunk_document(doc, 1000)
    assert "<title>Shop</title>" in chunks[0].html
    assert all("<title>" not in c.html for c in chunks[1:])


def _coverage_properties(doc, chunks):
    body_text_ids = [
        n.id for n in doc.walk(doc.body.id) if n.kind == TEXT and n.text.strip()
    ]
    covered = [nid for c in chunks for nid in c.covered_ids]
    assert sorted(covered) == sorted(set(covered)), "chunks overlap"
    assert set(covered) == set(body_text_ids), "coverage gap"
    assert covered == body_text_ids, "document order broken"


@given(documents, st.integers(min_value=16, max_value=400))
def test_partition_properties_random(html, budget):
    doc = parse(html)
    chunks = chunk_document(doc, budget)
    _coverage_properties(doc, chunks)
    for chunk in chunks:
        if not chunk.oversize:
            assert chunk.token_estimate <= budget
    assert [c.index for c in chunks] == list(range(1, len(chunks) + 1))


@given(documents, st.integers(min_value=16, max_value=400))
def test_identity_fragments_preserve_extraction(html, budget):
    doc = parse(html)
    chunks = chunk_document(doc, budget)
    stitched = parse(stitch([c.html for c in chunks]))
    assert (
        extract_accessible(stitched).concatenated
        == extract_accessible(doc).concatenated
    )


def test_stitch_single_fragment_identity():
    html = "<html><head><title>T</title></head><body><p>a</p><!--c--></body></html>"
    doc = parse(html)
    assert structurally_equal(parse(stitch([html])), doc)


def test_stitch_concatenates_bodies():
    out = parse(stitch(["<body><p>A</p></body>", "<body><p>B</p></body>"]))
    texts = [
        doc_text.text
        for doc_text in out.walk(out.body.id)
        if doc_text.kind == TEXT
    ]
    assert texts == ["A", "B"]


def test_stitch_first_head_wins_and_titles_dedupe():
    out = parse(
        stitch(
            [
                "<head><title>First</title></head><body><p>a</p></body>",
                "<head><title>Second</title></head><body><p>b</p></body>",
            ]
        )
    )
    titles = list(out.elements("title"))
    assert len(titles) == 1
    assert out.node(titles[0].children[0]).text == "First"


def test_stitch_associativity():
    xs = ["<body><p>1</p></body>", "<body><p>2</p></body>"]
    ys = ["<body><p>3</p></body>"]
    direct = parse(stitch(xs + ys))
    nested = parse(stitch([stitch(xs), stitch(ys)]))
    assert structurally_equal(direct, nested)


def test_stitch_empty_returns_skeleton():
    assert serialize(parse("")) == stitch([])
