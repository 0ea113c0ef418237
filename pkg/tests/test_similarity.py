"""Similarity metric, gate, and link reinsertion."""

import random
from collections import Counter

import pytest

from restruct.dom import parse
from restruct.errors import ProviderError
from restruct.extract import AccessibleContent, AccessibleItem, extract_accessible
from restruct.similarity import (
    LexicalProvider,
    aggregated_similarity,
    find_missing_links,
    gate,
    lexical_embed,
    normalize_href,
    reinsert_links,
)

from .conftest import read_page


def content_of(*texts):
    return AccessibleContent(
        items=[AccessibleItem("html", "visible-text", t) for t in texts]
    )


def test_lexical_embed_counts():
    assert lexical_embed("a b a") == Counter({"a": 2, "b": 1})
    assert lexical_embed("") == Counter()


def test_lexical_embed_case_punct_folding():
    assert lexical_embed("Add to cart!") == lexical_embed("add TO cart")


def test_lexical_embed_dense_with_vocab():
    vec = lexical_embed("a b a", ["a", "b", "c"])
    assert list(vec) == [2.0, 1.0, 0.0]


def test_identity_is_exactly_one():
    doc = extract_accessible(parse(read_page("07_mini_shop.html")))
    assert aggregated_similarity(doc, doc, LexicalProvider()) == 1.0


def test_disjoint_vocabulary_is_zero():
    a, b = content_of("red blender"), content_of("kitchen towel")
    assert aggregated_similarity(a, b, LexicalProvider()) == 0.0


def test_bag_of_words_permutation():
    a = content_of("add to cart buy now")
    b = content_of("buy now add to cart")
    assert aggregated_similarity(a, b, LexicalProvider()) == 1.0


def test_empty_sides():
    empty, full = content_of(), content_of("words here")
    lex = LexicalProvider()
    assert aggregated_similarity(empty, empty, lex) == 1.0
    assert aggregated_similarity(empty, full, lex) == 0.0
    assert aggregated_similarity(full, empty, lex) == 0.0


def test_symmetry_and_range_random():
    rng = random.Random(11)
    words = ["cart", "shop", "deal", "sale", "home", "toys"]
    lex = LexicalProvider()
    for _ in range(200):
        a = content_of(" ".join(rng.choices(words, k=rng.randint(0, 8))))
        b = content_of(" ".join(rng.choices(words, k=rng.randint(0, 8))))
        ab = aggregated_similarity(a, b, lex)
        assert ab == aggregated_similarity(b, a, lex)
        assert 0.0 <= ab <= 1.0


def test_gate_boundary():
    assert gate(0.92, 0.90) is True
    assert gate(0.90, 0.90) is True  # inclusive
    assert gate(0.89, 0.90) is False


def test_provider_failure_surfaces():
    class Boom:
        name = "boom"

        def embed_pair(self, a, b):
            raise ProviderError("no network")

    with pytest.raises(ProviderError):
        aggregated_similarity(content_of("a"), content_of("b"), Boom())


def test_normalize_href():
    assert normalize_href(" HTTP://Shop.example/p/1#frag ") == "http://shop.example/p/1"
    assert normalize_href("/p/1?q=2#x") == "/p/1?q=2"


def test_missing_links_identity_empty():
    doc = parse(read_page("11_departments.html"))
    assert find_missing_links(doc, doc) == []


def test_missing_link_by_definition():
    original = parse('<a href="/p/1">Blender</a>')
    generated = parse("<p>no links</p>")
    assert find_missing_links(original, generated) == [
        {"href": "/p/1", "text": "Blender"}
    ]


def test_three_dropped_links_detected_and_reinserted():
    original = parse(read_page("11_departments.html"))
    html = read_page("11_departments.html")
    for fragment in (
        '<li><a href="/d/5">Computers</a></li>',
        '<li><a href="/d/12">Kitchen</a></li>',
        '<li><a href="/d/19">Toys</a></li>',
    ):
        assert fragment in html
        html = html.replace(fragment, "")
    generated = parse(html)

    missing = find_missing_links(original, generated)
    assert missing == [
        {"href": "/d/5", "text": "Computers"},
        {"href": "/d/12", "text": "Kitchen"},
        {"href": "/d/19", "text": "Toys"},
    ]
    restored = reinsert_links(generated, missing)
    assert find_missing_links(original, restored) == []
    from restruct.audit import run_audit

    assert run_audit(restored).count_for("LINK-NAME") == run_audit(generated).count_for(
        "LINK-NAME"
    )


def test_reinsert_empty_is_identity():
    doc = parse(read_page("11_departments.html"))
    assert reinsert_links(doc, []) is doc


def test_reinsert_idempotent_for_fixed_list():
    original = parse('<a href="/p/1">Blender</a><a href="/p/2">Towel</a>')
    generated = parse("<p>stub</p>")
    missing = find_missing_links(original, generated)
    once = reinsert_links(generated, missing)
    twice = reinsert_links(once, missing)
    from restruct.dom import structurally_equal

    assert structurally_equal(once, twice)
