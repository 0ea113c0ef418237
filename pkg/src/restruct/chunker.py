"""Token-budgeted document chunking and fragment stitching.

Chunks are formed by greedy left-to-right packing of body subtrees at
logical DOM boundaries; a subtree too large for the budget is split over
its own children, and a single oversize text run is split at whitespace.
Stitching reassembles model outputs into one document, with the first
fragment winning the head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dom import (
    COMMENT,
    ELEMENT,
    TEXT,
    DocumentModel,
    DomNode,
    NodeId,
    node_path,
    parse,
    serialize,
    serialize_node,
)
from .errors import BudgetError

MIN_BUDGET = 16
DEFAULT_BUDGET = 24_000


@dataclass
class Chunk:
    index: int
    html: str
    token_estimate: int
    ancestor_path: str
    covered_ids: list[NodeId]
    oversize: bool = False


def estimate_tokens(text: str) -> int:
    """Crude provider-independent estimate: one token per four bytes."""
    return math.ceil(len(text.encode("utf-8")) / 4)


@dataclass
class _Piece:
    html: str
    estimate: int
    ancestor: str | None  # None groups with anything (head context)
    covered: list[NodeId] = field(default_factory=list)
    oversize: bool = False


def _covered_text_ids(doc: DocumentModel, node_id: NodeId) -> list[NodeId]:
    return [
        n.id for n in doc.walk(node_id) if n.kind == TEXT and n.text.strip()
    ]


def _split_text_node(
    doc: DocumentModel, node: DomNode, ancestor: str, budget: int
) -> list[_Piece]:
    """Whitespace-split pieces of one text node; first piece carries its id."""
    pieces: list[_Piece] = []
    words = node.text.split()
    current: list[str] = []
    for word in words:
        candidate = " ".join(current + [word])
        if current and estimate_tokens(candidate) > budget:
            pieces.append(_Piece(" ".join(current), estimate_tokens(" ".join(current)), ancestor))
            current = [word]
        else:
            current.append(word)
    if current:
        text = " ".join(current)
        pieces.append(
            _Piece(text, estimate_tokens(text), ancestor, oversize=estimate_tokens(text) > budget)
        )
    if pieces:
        pieces[0].covered = [node.id]
    return pieces


def _atomize(
    doc: DocumentModel, parent: DomNode, budget: int, out: list[_Piece]
) -> None:
    ancestor = node_path(doc, parent.id)
    for cid in parent.children:
        child = doc.node(cid)
        if child.kind == TEXT and not child.text.strip():
            continue
        html = serialize_node(doc, cid)
        estimate = estimate_tokens(html)
        if estimate <= budget:
            out.append(_Piece(html, estimate, ancestor, _covered_text_ids(doc, cid)))
            continue
        if child.kind == TEXT:
            out.extend(_split_text_node(doc, child, ancestor, budget))
        elif child.kind == ELEMENT and any(
            doc.node(g).kind != COMMENT for g in child.children
        ):
            _atomize(doc, child, budget, out)
        else:
            # Indivisible oversize leaf (e.g. enormous attribute payload).
            out.append(
                _Piece(html, estimate, ancestor, _covered_text_ids(doc, cid), oversize=True)
            )


def _head_context(doc: DocumentModel) -> str:
    head = doc.head
    if head is None:
        return ""
    parts = []
    for cid in head.children:
        child = doc.node(cid)
        if child.kind == ELEMENT and child.tag in ("title", "meta"):
            parts.append(serialize_node(doc, cid))
    return "".join(parts)


def chunk_document(doc: DocumentModel, budget: int = DEFAULT_BUDGET) -> list[Chunk]:
    """Partition the body into budgeted chunks in document order.

    Every non-whitespace body text node is covered by exactly one chunk.
    The head's title/meta context rides along in the first chunk.
    """
    if budget < MIN_BUDGET:
        raise BudgetError(f"budget {budget} below minimum {MIN_BUDGET}")

    pieces: list[_Piece] = []
    body = doc.body
    body_path = node_path(doc, body.id) if body is not None else "html>body"
    if body is not None:
        _atomize(doc, body, budget, pieces)

    head_ctx = _head_context(doc)
    if head_ctx:
        pieces.insert(0, _Piece(head_ctx, estimate_tokens(head_ctx), None))
    if not pieces:
        return []

    chunks: list[Chunk] = []

    def flush(group: list[_Piece]) -> None:
        if not group:
            return
        html = "".join(p.html for p in group)
        ancestor = next((p.ancestor for p in group if p.ancestor), body_path)
        chunks.append(
            Chunk(
                index=len(chunks) + 1,
                html=html,
                token_estimate=sum(p.estimate for p in group),
                ancestor_path=ancestor,
                covered_ids=[nid for p in group for nid in p.covered],
                oversize=any(p.oversize for p in group),
            )
        )

    group: list[_Piece] = []
    group_est = 0

    for piece in pieces:
        group_anchor = next((p.ancestor for p in group if p.ancestor), None)
        compatible = (
            piece.ancestor is None
            or group_anchor is None
            or piece.ancestor == group_anchor
        )
        if piece.oversize:
            if group and compatible and not any(p.covered or p.ancestor for p in group):
                # only head context pending: keep it in this first chunk
                group.append(piece)
                flush(group)
            else:
                flush(group)
                flush([piece])
            group, group_est = [], 0
            continue
        if group and compatible and group_est + piece.estimate <= budget:
            group.append(piece)
            group_est += piece.estimate
        elif not group:
            group, group_est = [piece], piece.estimate
        else:
            flush(group)
            group, group_est = [piece], piece.estimate
    flush(group)
    return chunks


def _copy_subtree(
    src: DocumentModel, node: DomNode, dst: DocumentModel, parent_id: NodeId
) -> None:
    clone = dst.new_node(
        node.kind, tag=node.tag, attrs=list(node.attrs), text=node.text
    )
    dst.append_child(parent_id, clone)
    for cid in node.children:
        _copy_subtree(src, src.node(cid), dst, clone.id)


def stitch(fragments: list[str]) -> str:
    """Combine regenerated fragments into a single serialized document.

    The first fragment's doctype, html/body attributes, and head content
    win; body children of all fragments are concatenated in order, and
    title elements beyond the first are dropped.
    """
    docs = [parse(fragment) for fragment in fragments]
    out = parse("")
    if not docs:
        return serialize(out)

    first = docs[0]
    out.doctype = first.doctype
    out.html.attrs = list(first.html.attrs)
    out_head = out.head
    out_body = out.body
    if first.body is not None:
        out_body.attrs = list(first.body.attrs)

    seen_title = False
    first_head = first.head
    if first_head is not None:
        for cid in first_head.children:
            child = first.node(cid)
            if child.kind == ELEMENT and child.tag == "title":
                if seen_title:
                    continue
                seen_title = True
            _copy_subtree(first, child, out, out_head.id)

    for doc in docs:
        body = doc.body
        if body is None:
            continue
        for cid in body.children:
            _copy_subtree(doc, doc.node(cid), out, out_body.id)
    return serialize(out)
