"""Extraction of screen-reader-accessible content from a document.

The extracted item list is the input to both the content-integrity metric
and the audit's name checks. Visibility is judged from markup alone:
subtrees under aria-hidden="true", the hidden attribute, or an inline
display:none are excluded, as are script/style/template/noscript.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .dom import ELEMENT, TEXT, DocumentModel, DomNode, NodeId, node_path

_SKIPPED_CONTAINERS = frozenset({"script", "style", "template", "noscript"})
_DISPLAY_NONE_RE = re.compile(r"display\s*:\s*none")
_ALT_BEARING = frozenset({"img", "area"})
_INTERACTIVE = frozenset({"a", "button", "input", "select", "textarea", "summary"})
_VALUE_LABELLED_TYPES = frozenset({"submit", "button", "reset"})

VISIBLE_TEXT = "visible-text"
ARIA_LABEL = "aria-label"
ALT_TEXT = "alt-text"
TITLE_ATTR = "title-attr"
CONTROL_NAME = "control-name"


@dataclass(frozen=True)
class AccessibleItem:
    path: str
    kind: str
    text: str


@dataclass
class AccessibleContent:
    items: list[AccessibleItem]

    @property
    def concatenated(self) -> str:
        return " ".join(item.text for item in self.items)


def collapse_whitespace(text: str) -> str:
    return " ".join(text.split())


def is_markup_hidden(node: DomNode) -> bool:
    """True when the element hides its subtree from assistive technology."""
    if node.kind != ELEMENT:
        return False
    if (node.get_attr("aria-hidden") or "").strip().lower() == "true":
        return True
    if node.has_attr("hidden"):
        return True
    style = node.get_attr("style") or ""
    return bool(_DISPLAY_NONE_RE.search(style.lower()))


def _bears_alt(node: DomNode) -> bool:
    if node.tag in _ALT_BEARING:
        return True
    return node.tag == "input" and (node.get_attr("type") or "").lower() == "image"


def _is_interactive(node: DomNode) -> bool:
    if node.tag == "a":
        return node.has_attr("href")
    return node.tag in _INTERACTIVE


def visible_text(doc: DocumentModel, node_id: NodeId) -> str:
    """Collapsed text of visible descendants, markup-level visibility only."""
    parts: list[str] = []

    def rec(node: DomNode) -> None:
        if node.kind == TEXT:
            parts.append(node.text)
            return
        if node.kind != ELEMENT:
            return
        if node.tag in _SKIPPED_CONTAINERS or is_markup_hidden(node):
            return
        for cid in node.children:
            rec(doc.node(cid))

    rec(doc.node(node_id))
    return collapse_whitespace("".join(parts))


def labelledby_text(doc: DocumentModel, node: DomNode) -> str:
    tokens = (node.get_attr("aria-labelledby") or "").split()
    if not tokens:
        return ""
    by_id = {
        el.get_attr("id"): el for el in doc.elements() if el.get_attr("id")
    }
    texts = []
    for token in tokens:
        target = by_id.get(token)
        if target is not None:
            text = visible_text(doc, target.id)
            if text:
                texts.append(text)
    return " ".join(texts)


def sole_img_alt(doc: DocumentModel, node: DomNode) -> str:
    imgs = [d for d in doc.walk(node.id) if d.kind == ELEMENT and d.tag == "img"]
    if len(imgs) != 1:
        return ""
    return collapse_whitespace(imgs[0].get_attr("alt") or "")


def accessible_name(doc: DocumentModel, node_id: NodeId) -> str | None:
    """Name announced for an element, by fixed precedence.

    aria-label, then aria-labelledby targets, then a sole descendant img's
    alt, then the title attribute, then collapsed visible descendant text.
    """
    node = doc.node(node_id)
    label = collapse_whitespace(node.get_attr("aria-label") or "")
    if label:
        return label
    referenced = collapse_whitespace(labelledby_text(doc, node))
    if referenced:
        return referenced
    alt = sole_img_alt(doc, node)
    if alt:
        return alt
    title = collapse_whitespace(node.get_attr("title") or "")
    if title:
        return title
    text = visible_text(doc, node_id)
    return text if text else None


def _has_non_title_name(doc: DocumentModel, node: DomNode) -> bool:
    if collapse_whitespace(node.get_attr("aria-label") or ""):
        return True
    if collapse_whitespace(labelledby_text(doc, node)):
        return True
    if sole_img_alt(doc, node):
        return True
    if node.tag == "input" and (node.get_attr("type") or "").lower() in _VALUE_LABELLED_TYPES:
        if collapse_whitespace(node.get_attr("value") or ""):
            return True
    return bool(visible_text(doc, node.id))


def extract_accessible(doc: DocumentModel) -> AccessibleContent:
    """Collect accessible items from the body subtree in document order."""
    items: list[AccessibleItem] = []
    body = doc.body
    if body is None:
        return AccessibleContent(items=[])

    def visit(node: DomNode) -> None:
        if node.kind == TEXT:
            text = collapse_whitespace(node.text)
            if text:
                items.append(AccessibleItem(node_path(doc, node.id), VISIBLE_TEXT, text))
            return
        if node.kind != ELEMENT:
            return
        if node.tag in _SKIPPED_CONTAINERS or is_markup_hidden(node):
            return

        path = None
        label = collapse_whitespace(node.get_attr("aria-label") or "")
        if label:
            path = node_path(doc, node.id)
            items.append(AccessibleItem(path, ARIA_LABEL, label))
        if _bears_alt(node):
            alt = collapse_whitespace(node.get_attr("alt") or "")
            if alt:
                path = path or node_path(doc, node.id)
                items.append(AccessibleItem(path, ALT_TEXT, alt))
        if node.tag == "input" and (node.get_attr("type") or "").lower() in _VALUE_LABELLED_TYPES:
            value = collapse_whitespace(node.get_attr("value") or "")
            if value:
                path = path or node_path(doc, node.id)
                items.append(AccessibleItem(path, CONTROL_NAME, value))
        if _is_interactive(node) and not _has_non_title_name(doc, node):
            title = collapse_whitespace(node.get_attr("title") or "")
            if title:
                path = path or node_path(doc, node.id)
                items.append(AccessibleItem(path, TITLE_ATTR, title))

        for cid in node.children:
            visit(doc.node(cid))

    for cid in body.children:
        visit(doc.node(cid))
    return AccessibleContent(items=items)
