"""Lenient HTML document model.

Parses arbitrary HTML text into a tree of nodes with stable integer ids,
recovering from malformed markup the way browsers do for the common cases:
implied ``html``/``head``/``body``, auto-closed ``p``/``li``/table rows,
raw-text ``script``/``style`` content, and head-routed metadata elements.
Serialization back to text is a structural fixpoint under re-parsing.

Not in scope: CSS, JavaScript, shadow DOM, and the full HTML5 adoption
agency; the recovery rules here cover the subset exercised by captured
shopping pages.
"""

from __future__ import annotations

import html as html_escape
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

from .errors import EncodingError, UnknownNodeError

NodeId = int

ELEMENT = "element"
TEXT = "text"
COMMENT = "comment"

VOID_ELEMENTS = frozenset(
    {
        "area", "base", "br", "col", "embed", "hr", "img", "input",
        "link", "meta", "param", "source", "track", "wbr",
    }
)
RAW_TEXT_ELEMENTS = frozenset({"script", "style"})
# Metadata elements always routed into <head>, wherever they appear.
_HEAD_ROUTED = frozenset({"title", "meta", "base", "link"})

# Start tags that implicitly close the element currently open on the stack.
_P_CLOSERS = frozenset(
    {
        "address", "article", "aside", "blockquote", "details", "div", "dl",
        "dd", "dt", "fieldset", "figcaption", "figure", "footer", "form",
        "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "menu",
        "nav", "ol", "p", "pre", "section", "summary", "table", "ul",
    }
)
_CLOSED_BY = {
    "p": _P_CLOSERS,
    "li": frozenset({"li"}),
    "dt": frozenset({"dt", "dd"}),
    "dd": frozenset({"dt", "dd"}),
    "tr": frozenset({"tr"}),
    "td": frozenset({"td", "th", "tr"}),
    "th": frozenset({"td", "th", "tr"}),
    "thead": frozenset({"tbody", "tfoot"}),
    "tbody": frozenset({"tbody", "tfoot"}),
    "option": frozenset({"option", "optgroup"}),
    "optgroup": frozenset({"optgroup"}),
}


@dataclass
class DomNode:
    id: NodeId
    kind: str
    tag: str = ""
    attrs: list[tuple[str, str]] = field(default_factory=list)
    text: str = ""
    children: list[NodeId] = field(default_factory=list)
    parent: NodeId | None = None

    def get_attr(self, name: str) -> str | None:
        name = name.lower()
        for key, value in self.attrs:
            if key == name:
                return value
        return None

    def has_attr(self, name: str) -> bool:
        return self.get_attr(name) is not None

    def set_attr(self, name: str, value: str) -> None:
        name = name.lower()
        for i, (key, _) in enumerate(self.attrs):
            if key == name:
                self.attrs[i] = (key, value)
                return
        self.attrs.append((name, value))

    def remove_attr(self, name: str) -> None:
        name = name.lower()
        self.attrs = [(k, v) for k, v in self.attrs if k != name]


@dataclass
class DocumentModel:
    nodes: dict[NodeId, DomNode]
    root: NodeId
    next_id: NodeId
    doctype: str | None = None

    def node(self, node_id: NodeId) -> DomNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"no node with id {node_id}") from None

    def has_node(self, node_id: NodeId) -> bool:
        return node_id in self.nodes

    @property
    def html(self) -> DomNode:
        return self.node(self.root)

    def _child_element(self, parent: DomNode, tag: str) -> DomNode | None:
        for cid in parent.children:
            child = self.nodes[cid]
            if child.kind == ELEMENT and child.tag == tag:
                return child
        return None

    @property
    def head(self) -> DomNode | None:
        return self._child_element(self.html, "head")

    @property
    def body(self) -> DomNode | None:
        return self._child_element(self.html, "body")

    def walk(self, start: NodeId | None = None):
        """Yield nodes in document (pre-order) position starting at `start`."""
        stack = [self.root if start is None else start]
        while stack:
            node = self.node(stack.pop())
            yield node
            stack.extend(reversed(node.children))

    def elements(self, tag: str | None = None):
        for node in self.walk():
            if node.kind == ELEMENT and (tag is None or node.tag == tag):
                yield node

    def new_node(self, kind: str, **kwargs) -> DomNode:
        node = DomNode(id=self.next_id, kind=kind, **kwargs)
        self.nodes[node.id] = node
        self.next_id += 1
        return node

    def append_child(self, parent_id: NodeId, child: DomNode) -> None:
        child.parent = parent_id
        self.node(parent_id).children.append(child.id)

    def detach(self, node_id: NodeId) -> None:
        """Remove a subtree from the document; ids of other nodes unchanged."""
        node = self.node(node_id)
        if node.parent is not None:
            siblings = self.node(node.parent).children
            siblings.remove(node_id)
        doomed = [node_id]
        i = 0
        while i < len(doomed):
            doomed.extend(self.nodes[doomed[i]].children)
            i += 1
        for nid in doomed:
            del self.nodes[nid]


class _TreeBuilder(HTMLParser):
    """Streams tokenizer events into a DocumentModel with error recovery."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.doc = DocumentModel(nodes={}, root=-1, next_id=0)
        self._html: NodeId | None = None
        self._head: NodeId | None = None
        self._body: NodeId | None = None
        self._stack: list[NodeId] = []

    # -- skeleton management ------------------------------------------------

    def _ensure_html(self) -> NodeId:
        if self._html is None:
            node = self.doc.new_node(ELEMENT, tag="html")
            self._html = node.id
            self.doc.root = node.id
        return self._html

    def _ensure_head(self) -> NodeId:
        html_id = self._ensure_html()
        if self._head is None:
            node = self.doc.new_node(ELEMENT, tag="head")
            self.doc.append_child(html_id, node)
            self._head = node.id
        return self._head

    def _ensure_body(self) -> NodeId:
        self._ensure_head()
        if self._body is None:
            node = self.doc.new_node(ELEMENT, tag="body")
            self.doc.append_child(self._html, node)
            self._body = node.id
        return self._body

    def _merge_attrs(self, node_id: NodeId, attrs: list[tuple[str, str]]) -> None:
        node = self.doc.node(node_id)
        for name, value in attrs:
            if not node.has_attr(name):
                node.attrs.append((name, value))

    def _insertion_parent(self) -> NodeId:
        if self._stack:
            return self._stack[-1]
        return self._ensure_body()

    # -- token handlers -----------------------------------------------------

    @staticmethod
    def _fold_attrs(attrs) -> list[tuple[str, str]]:
        folded: list[tuple[str, str]] = []
        seen: set[str] = set()
        for name, value in attrs:
            name = name.lower()
            if name in seen:
                continue  # first declaration wins, as in browsers
            seen.add(name)
            folded.append((name, value if value is not None else ""))
        return folded

    def handle_starttag(self, tag, attrs):
        attrs = self._fold_attrs(attrs)
        if tag == "html":
            self._merge_attrs(self._ensure_html(), attrs)
            return
        if tag == "head":
            self._merge_attrs(self._ensure_head(), attrs)
            return
        if tag == "body":
            self._merge_attrs(self._ensure_body(), attrs)
            return

        if tag in _HEAD_ROUTED:
            parent = self._ensure_head()
        elif tag in RAW_TEXT_ELEMENTS and self._body is None and not self._stack:
            parent = self._ensure_head()
        else:
            self._auto_close(tag)
            parent = self._insertion_parent()

        node = self.doc.new_node(ELEMENT, tag=tag, attrs=attrs)
        self.doc.append_child(parent, node)
        if tag not in VOID_ELEMENTS:
            self._stack.append(node.id)

    def _auto_close(self, incoming: str) -> None:
        while self._stack:
            top_tag = self.doc.node(self._stack[-1]).tag
            closers = _CLOSED_BY.get(top_tag)
            if closers and incoming in closers:
                self._stack.pop()
            else:
                return

    def handle_startendtag(self, tag, attrs):
        # <div/> has no special meaning in HTML; treat as an empty element.
        self.handle_starttag(tag, attrs)
        if tag not in VOID_ELEMENTS and self._stack and self.doc.node(self._stack[-1]).tag == tag:
            self._stack.pop()

    def handle_endtag(self, tag):
        if tag in VOID_ELEMENTS or tag in ("html", "head", "body"):
            if tag == "head" and self._body is None:
                self._ensure_body()
            return
        for i in range(len(self._stack) - 1, -1, -1):
            if self.doc.node(self._stack[i]).tag == tag:
                del self._stack[i:]
                return
        # Unmatched end tag: ignored (recovery).

    def handle_data(self, data):
        if not data:
            return
        if self._stack:
            parent = self._stack[-1]
        else:
            if self._body is None and not data.strip():
                return  # inter-element whitespace before body
            parent = self._ensure_body()
        self._append_text(parent, data)

    def _append_text(self, parent_id: NodeId, data: str) -> None:
        parent = self.doc.node(parent_id)
        if parent.children:
            last = self.doc.node(parent.children[-1])
            if last.kind == TEXT:
                last.text += data
                return
        node = self.doc.new_node(TEXT, text=data)
        self.doc.append_child(parent_id, node)

    def handle_comment(self, data):
        if self._html is None and not self._stack:
            return  # comments before the root are dropped
        parent = self._insertion_parent()
        node = self.doc.new_node(COMMENT, text=data)
        self.doc.append_child(parent, node)

    def handle_decl(self, decl):
        if self.doc.doctype is None and decl.lower().startswith("doctype"):
            self.doc.doctype = decl

    def unknown_decl(self, data):
        pass

    def handle_pi(self, data):
        pass

    def finish(self) -> DocumentModel:
        self._ensure_body()
        return self.doc


def parse(html: str | bytes) -> DocumentModel:
    """Parse HTML text into a DocumentModel; malformed markup never raises."""
    if isinstance(html, bytes):
        try:
            html = html.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"input is not valid UTF-8: {exc}") from exc
    builder = _TreeBuilder()
    builder.feed(html)
    builder.close()
    return builder.finish()


def escape_text(text: str) -> str:
    return html_escape.escape(text, quote=False)


def escape_attr(value: str) -> str:
    return html_escape.escape(value, quote=True)


def _serialize_into(doc: DocumentModel, node: DomNode, out: list[str]) -> None:
    if node.kind == TEXT:
        out.append(escape_text(node.text))
        return
    if node.kind == COMMENT:
        out.append(f"<!--{node.text}-->")
        return
    attrs = "".join(f' {k}="{escape_attr(v)}"' for k, v in node.attrs)
    out.append(f"<{node.tag}{attrs}>")
    if node.tag in VOID_ELEMENTS:
        return
    if node.tag in RAW_TEXT_ELEMENTS:
        for cid in node.children:
            child = doc.node(cid)
            if child.kind == TEXT:
                out.append(child.text)  # raw: re-escaping would corrupt code
    else:
        for cid in node.children:
            _serialize_into(doc, doc.node(cid), out)
    out.append(f"</{node.tag}>")


def serialize(doc: DocumentModel) -> str:
    """Emit HTML text; parse(serialize(doc)) is structurally equal to doc."""
    out: list[str] = []
    if doc.doctype:
        out.append(f"<!{doc.doctype}>")
    _serialize_into(doc, doc.html, out)
    return "".join(out)


def serialize_node(doc: DocumentModel, node_id: NodeId) -> str:
    """Emit one subtree as an HTML fragment."""
    out: list[str] = []
    _serialize_into(doc, doc.node(node_id), out)
    return "".join(out)


def _sibling_ordinal(doc: DocumentModel, node: DomNode) -> int:
    """1-based position among same-tag (elements) or same-kind siblings."""
    if node.parent is None:
        return 1
    ordinal = 0
    for cid in doc.node(node.parent).children:
        sib = doc.node(cid)
        if node.kind == ELEMENT:
            if sib.kind == ELEMENT and sib.tag == node.tag:
                ordinal += 1
        elif sib.kind == node.kind:
            ordinal += 1
        if cid == node.id:
            return ordinal
    raise UnknownNodeError(f"node {node.id} not among its parent's children")


def node_path(doc: DocumentModel, node_id: NodeId) -> str:
    """CSS-like locator from the root, e.g. "html>body>p:nth-of-type(2)"."""
    node = doc.node(node_id)
    segments: list[str] = []
    while True:
        label = node.tag if node.kind == ELEMENT else f"#{node.kind}"
        ordinal = _sibling_ordinal(doc, node)
        segments.append(f"{label}:nth-of-type({ordinal})" if ordinal > 1 else label)
        if node.parent is None:
            break
        node = doc.node(node.parent)
    return ">".join(reversed(segments))


_SEGMENT_RE = re.compile(r"^(#?[a-z][a-z0-9-]*)(?::nth-of-type\((\d+)\))?$")


def find_by_path(doc: DocumentModel, path: str) -> NodeId | None:
    """Resolve a node_path locator back to a node id, or None."""
    segments = path.split(">")
    if not segments:
        return None
    current: DomNode | None = None
    for i, segment in enumerate(segments):
        match = _SEGMENT_RE.match(segment.strip())
        if not match:
            return None
        label, ordinal = match.group(1), int(match.group(2) or 1)
        if i == 0:
            root = doc.html
            if label != root.tag or ordinal != 1:
                return None
            current = root
            continue
        found = None
        count = 0
        for cid in current.children:
            child = doc.node(cid)
            if label.startswith("#"):
                hit = child.kind == label[1:]
            else:
                hit = child.kind == ELEMENT and child.tag == label
            if hit:
                count += 1
                if count == ordinal:
                    found = child
                    break
        if found is None:
            return None
        current = found
    return current.id


def structurally_equal(a: DocumentModel, b: DocumentModel) -> bool:
    """Tree equality on kind/tag/attrs/text, ignoring node ids."""

    def eq(na: DomNode, nb: DomNode) -> bool:
        if na.kind != nb.kind:
            return False
        if na.kind == ELEMENT:
            if na.tag != nb.tag or na.attrs != nb.attrs:
                return False
        elif na.text != nb.text:
            return False
        if len(na.children) != len(nb.children):
            return False
        return all(
            eq(a.node(ca), b.node(cb)) for ca, cb in zip(na.children, nb.children)
        )

    return a.doctype == b.doctype and eq(a.html, b.html)
