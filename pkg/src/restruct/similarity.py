"""Content-integrity scoring between two documents.

The score is the cosine similarity between embeddings of the concatenated
accessible content of each side. Production deployments may point at a
remote embedding endpoint; tests and offline runs use a deterministic
lexical term-frequency fallback.
"""

from __future__ import annotations

import copy
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Protocol
from urllib.parse import urlsplit, urlunsplit

import numpy as np
import requests

from .dom import ELEMENT, TEXT, DocumentModel
from .errors import ProviderError
from .extract import AccessibleContent, accessible_name

_TOKEN_RE = re.compile(r"[a-z0-9]+")

DEFAULT_THRESHOLD = 0.90


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def lexical_embed(text: str, vocab: list[str] | None = None):
    """Term-frequency vector over case-folded word tokens.

    Without a vocabulary, returns the sparse Counter form; with one,
    returns a dense vector in vocabulary order.
    """
    counts = Counter(tokenize(text))
    if vocab is None:
        return counts
    return np.array([counts[token] for token in vocab], dtype=float)


class EmbeddingProvider(Protocol):
    name: str

    def embed_pair(self, text_a: str, text_b: str) -> tuple[np.ndarray, np.ndarray]:
        ...


class LexicalProvider:
    """Deterministic fallback: TF vectors over the pair's union vocabulary."""

    name = "lexical"

    def embed_pair(self, text_a: str, text_b: str) -> tuple[np.ndarray, np.ndarray]:
        vocab = sorted(set(tokenize(text_a)) | set(tokenize(text_b)))
        return lexical_embed(text_a, vocab), lexical_embed(text_b, vocab)


class RemoteEmbeddingProvider:
    """Embeddings from a remote endpoint speaking the common JSON shape.

    POST {base_url}/embeddings with {"model": ..., "input": [a, b]} and
    reads data[*].embedding. Failures surface as ProviderError.
    """

    def __init__(self, base_url: str, api_key: str, model: str, timeout: float = 60.0):
        self.name = f"remote:{model}"
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout = timeout

    def embed_pair(self, text_a: str, text_b: str) -> tuple[np.ndarray, np.ndarray]:
        try:
            response = requests.post(
                f"{self.base_url}/embeddings",
                json={"model": self.model, "input": [text_a, text_b]},
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            data = response.json()["data"]
            return (
                np.asarray(data[0]["embedding"], dtype=float),
                np.asarray(data[1]["embedding"], dtype=float),
            )
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc


@dataclass
class SimilarityReport:
    score: float
    threshold: float
    passed: bool
    provider: str
    missing_anchors: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "score": self.score,
            "threshold": self.threshold,
            "pass": self.passed,
            "provider": self.provider,
            "missing_anchors": self.missing_anchors,
        }


def aggregated_similarity(
    a: AccessibleContent, b: AccessibleContent, provider: EmbeddingProvider
) -> float:
    """Cosine similarity of the two sides' concatenated content, in [0, 1].

    Both sides empty scores 1.0 (vacuous equality), exactly one empty 0.0.
    Identical concatenations score exactly 1.0 without touching the
    provider, which also spares remote calls on no-op transformations.
    """
    text_a, text_b = a.concatenated, b.concatenated
    if not text_a and not text_b:
        return 1.0
    if not text_a or not text_b:
        return 0.0
    if text_a == text_b:
        return 1.0
    vec_a, vec_b = provider.embed_pair(text_a, text_b)
    norm_a = float(np.dot(vec_a, vec_a))
    norm_b = float(np.dot(vec_b, vec_b))
    if norm_a == 0.0 and norm_b == 0.0:
        return 1.0  # token-free on both sides, e.g. punctuation only
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    cosine = float(np.dot(vec_a, vec_b)) / math.sqrt(norm_a * norm_b)
    return min(1.0, max(0.0, cosine))


def gate(score: float, threshold: float) -> bool:
    """Inclusive acceptance test: the score must meet or exceed the bar."""
    return score >= threshold


def normalize_href(href: str) -> str:
    """Trim, drop the fragment, and case-fold scheme and host."""
    parts = urlsplit(href.strip())
    return urlunsplit(
        (parts.scheme.lower(), parts.netloc.lower(), parts.path, parts.query, "")
    )


def _anchors(doc: DocumentModel) -> list[tuple[str, str, int]]:
    out = []
    for el in doc.elements("a"):
        href = el.get_attr("href")
        if href is not None:
            out.append((href, normalize_href(href), el.id))
    return out


def find_missing_links(
    original: DocumentModel, generated: DocumentModel
) -> list[dict]:
    """Anchors of the original absent (by normalized href) from the generated."""
    present = {norm for _, norm, _ in _anchors(generated)}
    missing = []
    for href, norm, node_id in _anchors(original):
        if norm not in present:
            missing.append(
                {"href": href, "text": accessible_name(original, node_id) or ""}
            )
    return missing


def reinsert_links(generated: DocumentModel, missing: list[dict]) -> DocumentModel:
    """Append the given anchors in a trailing navigation section.

    Entries whose href already resolves in the document are skipped, so
    re-applying the same list is a no-op.
    """
    present = {norm for _, norm, _ in _anchors(generated)}
    to_add = [m for m in missing if normalize_href(m["href"]) not in present]
    if not to_add:
        return generated

    doc = copy.deepcopy(generated)
    body = doc.body
    if body is None:
        return doc
    nav = doc.new_node(
        ELEMENT, tag="nav", attrs=[("role", "navigation"), ("aria-label", "Additional links")]
    )
    doc.append_child(body.id, nav)
    heading = doc.new_node(ELEMENT, tag="h2")
    doc.append_child(nav.id, heading)
    doc.append_child(heading.id, doc.new_node(TEXT, text="Additional links"))
    items = doc.new_node(ELEMENT, tag="ul")
    doc.append_child(nav.id, items)
    for entry in to_add:
        li = doc.new_node(ELEMENT, tag="li")
        doc.append_child(items.id, li)
        anchor = doc.new_node(ELEMENT, tag="a", attrs=[("href", entry["href"])])
        doc.append_child(li.id, anchor)
        if entry.get("text"):
            doc.append_child(anchor.id, doc.new_node(TEXT, text=entry["text"]))
    return doc
