"""End-to-end orchestration of the two transformation pipelines.

Regeneration rebuilds the whole document as text-only accessible HTML;
reorganization patches tags and attributes in place without touching
content. Both run behind the content-integrity gate and report audits
of the before/after documents. Deterministic offline transformers stand
in for the model in tests and network-free operation.
"""

from __future__ import annotations

import copy
import json
import logging
import re
from dataclasses import dataclass, field

from .audit import HEADING_TAGS, AuditReport, run_audit
from .chunker import Chunk, DEFAULT_BUDGET, chunk_document, estimate_tokens, stitch
from .dom import (
    ELEMENT,
    TEXT,
    DocumentModel,
    DomNode,
    NodeId,
    escape_attr,
    escape_text,
    node_path,
    parse,
    serialize,
)
from .errors import GateFailure, PatchError, UnknownNodeError
from .extract import (
    accessible_name,
    collapse_whitespace,
    extract_accessible,
    is_markup_hidden,
    labelledby_text,
    sole_img_alt,
    visible_text,
)
from .llm import (
    ModelParams,
    extract_html_payload,
    extract_json_array_payload,
    load_template,
    run_sequence,
)
from .similarity import (
    DEFAULT_THRESHOLD,
    LexicalProvider,
    SimilarityReport,
    aggregated_similarity,
    find_missing_links,
    gate,
    reinsert_links,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_ATTEMPTS = 3

_RECORD_TAGS = frozenset(
    {"a", "button", "img", "input", "select", "textarea", *HEADING_TAGS}
)
_DROPPED_CONTAINERS = frozenset({"script", "style", "noscript", "template"})
_TAG_NAME_RE = re.compile(r"^[a-z][a-z0-9-]*$")

# Attributes carried over onto form controls by the offline regenerator.
_CONTROL_ATTRS = (
    "type", "name", "value", "placeholder", "id", "min", "max", "step",
    "maxlength", "checked", "required", "disabled", "readonly", "multiple",
    "title",
)

_INLINE_TAGS = frozenset(
    {"span", "b", "i", "em", "strong", "small", "sup", "sub", "u", "s",
     "code", "abbr", "mark", "time", "q", "cite", "var", "kbd", "samp",
     "bdi", "bdo", "wbr", "data", "dfn", "ins", "del", "output", "picture",
     "source", "br", "td", "th"}
)


@dataclass
class TagRecord:
    node: NodeId
    tag: str
    id_attr: str | None
    classes: list[str]
    attributes: list[tuple[str, str]]
    text: str

    def to_json_dict(self) -> dict:
        record: dict = {"node": self.node, "tag": self.tag}
        if self.id_attr is not None:
            record["id"] = self.id_attr
        record["classes"] = self.classes
        record["attributes"] = [[k, v] for k, v in self.attributes]
        record["text"] = self.text
        return record


@dataclass
class TagPatch:
    node: NodeId
    new_tag: str | None = None
    set_attributes: list[tuple[str, str]] = field(default_factory=list)
    remove_attributes: list[str] = field(default_factory=list)
    path: str | None = None  # locator against the source document

    def to_json_dict(self) -> dict:
        return {
            "node": self.node,
            "path": self.path,
            "new_tag": self.new_tag,
            "set_attributes": [[k, v] for k, v in self.set_attributes],
            "remove_attributes": list(self.remove_attributes),
        }


@dataclass
class TransformOptions:
    mode: str = "regenerate"  # regenerate | reorganize
    provider: str = "offline"  # remote | mock | offline
    threshold: float = DEFAULT_THRESHOLD
    budget: int = DEFAULT_BUDGET
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self):
        if self.mode not in ("regenerate", "reorganize"):
            raise ValueError(f"unknown mode: {self.mode}")
        if self.provider not in ("remote", "mock", "offline"):
            raise ValueError(f"unknown provider: {self.provider}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be within [0, 1]")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")


@dataclass
class TransformResult:
    html: str
    patches: list[TagPatch] | None
    similarity: SimilarityReport
    audit_before: AuditReport
    audit_after: AuditReport
    attempts: int
    chunk_count: int

    def to_json_dict(self) -> dict:
        return {
            "html": self.html,
            "patches": None
            if self.patches is None
            else [p.to_json_dict() for p in self.patches],
            "similarity": self.similarity.to_json_dict(),
            "audit_before": self.audit_before.to_json_dict(),
            "audit_after": self.audit_after.to_json_dict(),
            "attempts": self.attempts,
            "chunks": self.chunk_count,
        }


# ---------------------------------------------------------------------------
# Tag records and patches (the in-place pipeline's exchange format)
# ---------------------------------------------------------------------------


def _direct_text(doc: DocumentModel, el: DomNode) -> str:
    return collapse_whitespace(
        "".join(doc.node(c).text for c in el.children if doc.node(c).kind == TEXT)
    )


def tag_records(doc: DocumentModel) -> list[TagRecord]:
    """Records for elements carrying direct text or interactive semantics."""
    records: list[TagRecord] = []
    body = doc.body
    if body is None:
        return records
    for el in doc.walk(body.id):
        if el.kind != ELEMENT:
            continue
        direct = _direct_text(doc, el)
        if not direct and el.tag not in _RECORD_TAGS:
            continue
        records.append(
            TagRecord(
                node=el.id,
                tag=el.tag,
                id_attr=el.get_attr("id"),
                classes=(el.get_attr("class") or "").split(),
                attributes=[(k, v) for k, v in el.attrs if k not in ("id", "class")],
                text=direct,
            )
        )
    return records


def serialize_tag_records(doc: DocumentModel) -> str:
    """Deterministic JSON array of the document's tag records."""
    return json.dumps(
        [r.to_json_dict() for r in tag_records(doc)],
        ensure_ascii=False,
        separators=(",", ":"),
    )


def _record_chunks(records: list[TagRecord], budget: int) -> list[Chunk]:
    """Pack record JSON into budgeted chunks for sequential calls."""
    chunks: list[Chunk] = []
    group: list[TagRecord] = []

    def flush() -> None:
        if not group:
            return
        payload = json.dumps(
            [r.to_json_dict() for r in group], ensure_ascii=False, separators=(",", ":")
        )
        estimate = estimate_tokens(payload)
        chunks.append(
            Chunk(
                index=len(chunks) + 1,
                html=payload,
                token_estimate=estimate,
                ancestor_path="$records",
                covered_ids=[r.node for r in group],
                oversize=estimate > budget,
            )
        )

    for record in records:
        candidate = group + [record]
        payload = json.dumps(
            [r.to_json_dict() for r in candidate], ensure_ascii=False, separators=(",", ":")
        )
        if group and estimate_tokens(payload) > budget:
            flush()
            group = [record]
        else:
            group = candidate
    flush()
    return chunks


@dataclass
class ParsedPatches:
    patches: list[TagPatch]
    rejected: list[str] = field(default_factory=list)


def _coerce_attr_pairs(value) -> list[tuple[str, str]] | None:
    if isinstance(value, dict):
        return [(str(k).lower(), str(v)) for k, v in value.items()]
    if isinstance(value, list):
        pairs = []
        for item in value:
            if isinstance(item, (list, tuple)) and len(item) == 2:
                pairs.append((str(item[0]).lower(), str(item[1])))
            else:
                return None
        return pairs
    return None


def parse_patches(response: str, doc: DocumentModel | None = None) -> ParsedPatches:
    """Parse a model response into validated patches.

    Individually invalid entries are dropped and reported; the absence of
    any parseable JSON array raises PatchError.
    """
    payload = extract_json_array_payload(response)
    try:
        data = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise PatchError(f"no parseable JSON array in response: {exc}") from exc
    if not isinstance(data, list):
        raise PatchError("patch payload is not a JSON array")

    result = ParsedPatches(patches=[])
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            result.rejected.append(f"entry {i}: not an object")
            continue
        node = entry.get("node")
        if not isinstance(node, int) or isinstance(node, bool):
            result.rejected.append(f"entry {i}: missing integer node id")
            continue
        new_tag = entry.get("new_tag")
        if new_tag is not None and (
            not isinstance(new_tag, str) or not _TAG_NAME_RE.match(new_tag)
        ):
            result.rejected.append(f"entry {i}: invalid tag name {new_tag!r}")
            continue
        set_attrs = _coerce_attr_pairs(entry.get("set_attributes", []))
        if set_attrs is None:
            result.rejected.append(f"entry {i}: malformed set_attributes")
            continue
        remove_attrs = entry.get("remove_attributes", [])
        if not isinstance(remove_attrs, list) or not all(
            isinstance(a, str) for a in remove_attrs
        ):
            result.rejected.append(f"entry {i}: malformed remove_attributes")
            continue
        if new_tag is None and not set_attrs and not remove_attrs:
            result.rejected.append(f"entry {i}: no changes requested")
            continue
        if doc is not None and (
            not doc.has_node(node) or doc.node(node).kind != ELEMENT
        ):
            result.rejected.append(f"entry {i}: node {node} not in document")
            continue
        result.patches.append(
            TagPatch(
                node=node,
                new_tag=new_tag,
                set_attributes=set_attrs,
                remove_attributes=[a.lower() for a in remove_attrs],
            )
        )
    return result


def apply_patches(doc: DocumentModel, patches: list[TagPatch]) -> DocumentModel:
    """Apply tag/attribute rewrites in order on a copy of the document.

    Children, text, and document order are untouched; node ids survive.
    """
    for patch in patches:
        if not doc.has_node(patch.node) or doc.node(patch.node).kind != ELEMENT:
            raise UnknownNodeError(f"patch references unknown element {patch.node}")
    out = copy.deepcopy(doc)
    for patch in patches:
        node = out.node(patch.node)
        if patch.new_tag:
            node.tag = patch.new_tag
        for name, value in patch.set_attributes:
            node.set_attr(name, value)
        for name in patch.remove_attributes:
            node.remove_attr(name)
    return out


# ---------------------------------------------------------------------------
# Offline regeneration (deterministic text-only rebuild)
# ---------------------------------------------------------------------------


class _HeadingState:
    def __init__(self, first_h1_id: NodeId | None):
        self.previous: int | None = None
        self.first_h1_id = first_h1_id

    def renumber(self, el: DomNode) -> int:
        level = int(el.tag[1])
        if el.id == self.first_h1_id:
            level = 1
        elif level == 1:
            level = 2  # a rebuilt page keeps a single h1
        if self.previous is not None and level > self.previous + 1:
            level = self.previous + 1
        self.previous = level
        return level

    def note_forced(self, level: int) -> None:
        self.previous = level


class _Emitter:
    def __init__(self) -> None:
        self.blocks: list[str] = []
        self.inline: list[str] = []

    def flush(self) -> None:
        if self.inline:
            self.blocks.append("<p>" + " ".join(self.inline) + "</p>")
            self.inline = []

    def add_inline(self, html: str) -> None:
        if html:
            self.inline.append(html)

    def add_block(self, html: str) -> None:
        self.flush()
        if html:
            self.blocks.append(html)

    def result(self) -> str:
        self.flush()
        return "".join(self.blocks)


def _derived_label(doc: DocumentModel, el: DomNode) -> str | None:
    """Explicit label to carry when the rebuilt element loses its name source."""
    own = collapse_whitespace(el.get_attr("aria-label") or "")
    if own:
        return own
    if visible_text(doc, el.id):
        return None  # inner text survives the rebuild and keeps the name
    name = accessible_name(doc, el.id)
    return name


def _inline_flatten(doc: DocumentModel, el: DomNode) -> str:
    """Text-with-anchors rendering of an element's content."""
    parts: list[str] = []

    def rec(node: DomNode) -> None:
        if node.kind == TEXT:
            text = collapse_whitespace(node.text)
            if text:
                parts.append(escape_text(text))
            return
        if node.kind != ELEMENT:
            return
        if node.tag in _DROPPED_CONTAINERS or is_markup_hidden(node):
            return
        if node.tag == "img":
            alt = collapse_whitespace(node.get_attr("alt") or "")
            if alt:
                parts.append(escape_text(alt))
            return
        if node.tag == "a" and node.has_attr("href"):
            parts.append(_render_anchor(doc, node))
            return
        for cid in node.children:
            rec(doc.node(cid))

    for cid in el.children:
        rec(doc.node(cid))
    return " ".join(parts)


def _render_anchor(doc: DocumentModel, el: DomNode) -> str:
    inner = _inline_flatten(doc, el)
    attrs = f' href="{escape_attr(el.get_attr("href") or "")}"'
    label = _derived_label(doc, el)
    if label:
        attrs += f' aria-label="{escape_attr(label)}"'
    return f"<a{attrs}>{inner}</a>"


def _render_control(doc: DocumentModel, el: DomNode) -> str:
    if el.tag == "input":
        kind = (el.get_attr("type") or "text").lower()
        if kind == "hidden":
            return ""
        if kind == "image":
            alt = collapse_whitespace(el.get_attr("alt") or "")
            return f"<button>{escape_text(alt)}</button>" if alt else ""
        attrs = "".join(
            f' {name}="{escape_attr(el.get_attr(name) or "")}"'
            for name in _CONTROL_ATTRS
            if el.has_attr(name)
        )
        label = _derived_label(doc, el)
        if label:
            attrs += f' aria-label="{escape_attr(label)}"'
        return f"<input{attrs}>"
    if el.tag == "textarea":
        attrs = "".join(
            f' {name}="{escape_attr(el.get_attr(name) or "")}"'
            for name in ("name", "id", "placeholder", "title")
            if el.has_attr(name)
        )
        label = _derived_label(doc, el)
        if label:
            attrs += f' aria-label="{escape_attr(label)}"'
        return f"<textarea{attrs}>{escape_text(visible_text(doc, el.id))}</textarea>"
    if el.tag == "select":
        attrs = "".join(
            f' {name}="{escape_attr(el.get_attr(name) or "")}"'
            for name in ("name", "id", "title")
            if el.has_attr(name)
        )
        label = _derived_label(doc, el)
        if label:
            attrs += f' aria-label="{escape_attr(label)}"'
        options = []
        for opt in doc.walk(el.id):
            if opt.kind == ELEMENT and opt.tag == "option":
                value = opt.get_attr("value")
                vattr = f' value="{escape_attr(value)}"' if value is not None else ""
                options.append(
                    f"<option{vattr}>{escape_text(visible_text(doc, opt.id))}</option>"
                )
        return f"<select{attrs}>{''.join(options)}</select>"
    return ""


def _in_hidden_subtree(doc: DocumentModel, el: DomNode) -> bool:
    node = el
    while True:
        if is_markup_hidden(node):
            return True
        if node.parent is None:
            return False
        node = doc.node(node.parent)


def _is_link_only_heading(doc: DocumentModel, el: DomNode) -> bool:
    if el.kind != ELEMENT or el.tag not in HEADING_TAGS:
        return False
    if is_markup_hidden(el):
        return False
    anchors = [
        d
        for d in doc.walk(el.id)
        if d.kind == ELEMENT and d.tag == "a" and d.has_attr("href")
    ]
    if len(anchors) != 1:
        return False
    own = visible_text(doc, el.id)
    return bool(own) and own == visible_text(doc, anchors[0].id)


def _category_run(doc: DocumentModel, children: list[DomNode], start: int) -> list[DomNode]:
    """Consecutive link-only sibling headings from `start`, whitespace-tolerant."""
    run: list[DomNode] = []
    i = start
    while i < len(children):
        node = children[i]
        if node.kind == TEXT and not node.text.strip():
            i += 1
            continue
        if _is_link_only_heading(doc, node):
            run.append(node)
            i += 1
            continue
        break
    return run


def offline_regenerate(doc: DocumentModel) -> str:
    """Deterministic text-only rebuild standing in for the model.

    Keeps every piece of visible text, every anchor, and working form
    controls; drops scripts, styles, images (replaced by their alt text),
    and presentation wrappers. Headings are renumbered to remove level
    skips, and runs of three or more link-only headings collapse into a
    single "Categories" section with a plain link list.
    """
    title_el = next(doc.elements("title"), None)
    title_text = visible_text(doc, title_el.id) if title_el is not None else ""
    body = doc.body
    first_h1 = None
    if body is not None:
        for el in doc.walk(body.id):
            if (
                el.kind == ELEMENT
                and el.tag == "h1"
                and not _in_hidden_subtree(doc, el)
                and visible_text(doc, el.id)
            ):
                first_h1 = el
                break
    if not title_text and first_h1 is not None:
        title_text = visible_text(doc, first_h1.id)

    state = _HeadingState(first_h1.id if first_h1 is not None else None)
    emitter = _Emitter()
    if first_h1 is None and title_text:
        emitter.add_block(f"<h1>{escape_text(title_text)}</h1>")
        state.note_forced(1)

    def emit_children(parent: DomNode, em: _Emitter) -> None:
        children = [doc.node(c) for c in parent.children]
        i = 0
        while i < len(children):
            node = children[i]
            run = _category_run(doc, children, i)
            if len(run) >= 3:
                em.add_block("<h2>Categories</h2>")
                state.note_forced(2)
                items = "".join(
                    f"<li>{_inline_flatten(doc, h)}</li>" for h in run
                )
                em.add_block(f"<ul>{items}</ul>")
                while children[i] is not run[-1]:
                    i += 1
                i += 1
                continue
            emit_node(node, em)
            i += 1

    def emit_node(node: DomNode, em: _Emitter) -> None:
        if node.kind == TEXT:
            text = collapse_whitespace(node.text)
            if text:
                em.add_inline(escape_text(text))
            return
        if node.kind != ELEMENT:
            return
        tag = node.tag
        if tag in _DROPPED_CONTAINERS or is_markup_hidden(node):
            return
        if tag == "img":
            alt = collapse_whitespace(node.get_attr("alt") or "")
            if alt:
                em.add_inline(escape_text(alt))
            return
        if tag in HEADING_TAGS:
            inner = _inline_flatten(doc, node)
            if not inner:
                return
            level = state.renumber(node)
            em.add_block(f"<h{level}>{inner}</h{level}>")
            return
        if tag == "a" and node.has_attr("href"):
            em.add_inline(_render_anchor(doc, node))
            return
        if tag == "button":
            inner = _inline_flatten(doc, node)
            label = _derived_label(doc, node)
            if not inner and not label:
                return  # nameless control carries nothing a reader can use
            attrs = f' aria-label="{escape_attr(label)}"' if label else ""
            em.add_inline(f"<button{attrs}>{inner}</button>")
            return
        if tag in ("input", "select", "textarea"):
            em.add_inline(_render_control(doc, node))
            return
        if tag == "label":
            attrs = ""
            if node.has_attr("for"):
                attrs = f' for="{escape_attr(node.get_attr("for") or "")}"'
            sub = _Emitter()
            emit_children(node, sub)
            sub.flush()
            inner = " ".join(s[3:-4] if s.startswith("<p>") else s for s in sub.blocks)
            em.add_inline(f"<label{attrs}>{inner}</label>")
            return
        if tag in ("ul", "ol"):
            items = []
            for cid in node.children:
                child = doc.node(cid)
                if child.kind == ELEMENT and child.tag == "li":
                    sub = _Emitter()
                    emit_children(child, sub)
                    content = sub.result()
                    if content:
                        items.append(f"<li>{content}</li>")
                else:
                    emit_node(child, em)
            if items:
                em.add_block(f"<{tag}>{''.join(items)}</{tag}>")
            return
        if tag == "nav":
            sub = _Emitter()
            emit_children(node, sub)
            content = sub.result()
            if content:
                em.add_block(f"<nav>{content}</nav>")
            return
        if tag == "form":
            attrs = "".join(
                f' {name}="{escape_attr(node.get_attr(name) or "")}"'
                for name in ("action", "method")
                if node.has_attr(name)
            )
            sub = _Emitter()
            emit_children(node, sub)
            content = sub.result()
            if content:
                em.add_block(f"<form{attrs}>{content}</form>")
            return
        if tag in _INLINE_TAGS:
            emit_children(node, em)
            return
        # any other container: block boundary, children carried through
        em.flush()
        emit_children(node, em)
        em.flush()

    if body is not None:
        emit_children(body, emitter)

    lang = collapse_whitespace(doc.html.get_attr("lang") or "") or "en"
    head = f"<title>{escape_text(title_text)}</title>" if title_text else ""
    return (
        "<!DOCTYPE html>"
        f'<html lang="{escape_attr(lang)}"><head>{head}</head>'
        f"<body><main>{emitter.result()}</main></body></html>"
    )


# ---------------------------------------------------------------------------
# Offline reorganization (deterministic fixer rules F1-F4)
# ---------------------------------------------------------------------------


def _body_headings(doc: DocumentModel) -> list[DomNode]:
    body = doc.body
    if body is None:
        return []
    return [
        n for n in doc.walk(body.id) if n.kind == ELEMENT and n.tag in HEADING_TAGS
    ]


def _has_list_ancestor(doc: DocumentModel, el: DomNode) -> bool:
    parent = el.parent
    while parent is not None:
        node = doc.node(parent)
        if node.kind == ELEMENT and node.tag in ("nav", "ul", "ol", "menu"):
            return True
        parent = node.parent
    return False


def _category_demotions(doc: DocumentModel) -> list[NodeId]:
    by_parent: dict[NodeId, list[NodeId]] = {}
    for el in _body_headings(doc):
        if el.parent is None or not _has_list_ancestor(doc, el):
            continue
        if _is_link_only_heading(doc, el):
            by_parent.setdefault(el.parent, []).append(el.id)
    demoted: list[NodeId] = []
    for ids in by_parent.values():
        if len(ids) >= 3:  # each heading has at least two such siblings
            demoted.extend(ids)
    return demoted


def _landmark_target(doc: DocumentModel) -> NodeId | None:
    body = doc.body
    if body is None:
        return None
    for el in doc.walk(body.id):
        if el.kind == ELEMENT and (
            el.tag == "main" or "main" in (el.get_attr("role") or "").split()
        ):
            return None  # landmark already present
    total = len(visible_text(doc, body.id))
    if total == 0:
        return None
    node = body
    while True:
        dominant = None
        for cid in node.children:
            child = doc.node(cid)
            if child.kind != ELEMENT:
                continue
            if len(visible_text(doc, child.id)) > 0.6 * total:
                dominant = child
                break
        if dominant is None:
            return node.id
        node = dominant


def offline_reorganize(doc: DocumentModel) -> list[TagPatch]:
    """Deterministic tag/attribute fixes, in a fixed rule order.

    F1 renumbers headings that skip levels; F2 demotes runs of link-only
    category headings inside list/nav containers; F3 makes title- or
    alt-derived control names explicit as aria-label; F4 marks the
    dominant content container as the main landmark when none exists.
    """
    patches: list[TagPatch] = []
    demotions = _category_demotions(doc)
    demoted = set(demotions)

    previous: int | None = None
    for el in _body_headings(doc):
        if el.id in demoted:
            continue
        level = int(el.tag[1])
        if previous is not None and level > previous + 1:
            level = previous + 1
            patches.append(TagPatch(node=el.id, new_tag=f"h{level}"))
        previous = level

    for node_id in demotions:
        patches.append(
            TagPatch(
                node=node_id,
                new_tag="div",
                set_attributes=[("role", "presentation")],
            )
        )

    body = doc.body
    if body is not None:
        for el in doc.walk(body.id):
            if el.kind != ELEMENT:
                continue
            is_link = el.tag == "a" and el.has_attr("href")
            if el.tag != "button" and not is_link:
                continue
            if collapse_whitespace(el.get_attr("aria-label") or ""):
                continue
            if collapse_whitespace(labelledby_text(doc, el)):
                continue
            if visible_text(doc, el.id):
                continue
            name = sole_img_alt(doc, el) or collapse_whitespace(
                el.get_attr("title") or ""
            )
            if name:
                patches.append(
                    TagPatch(node=el.id, set_attributes=[("aria-label", name)])
                )

    target = _landmark_target(doc)
    if target is not None:
        patches.append(TagPatch(node=target, set_attributes=[("role", "main")]))
    return patches


# ---------------------------------------------------------------------------
# Pipeline drivers
# ---------------------------------------------------------------------------


def _sanitize_regenerated(doc: DocumentModel) -> DocumentModel:
    """Scripts, styles, and inline event handlers never survive regeneration."""
    doomed = [
        el.id
        for el in doc.elements()
        if el.tag in ("script", "style")
    ]
    for node_id in doomed:
        doc.detach(node_id)
    for el in doc.elements():
        if any(name.startswith("on") for name, _ in el.attrs):
            el.attrs = [(k, v) for k, v in el.attrs if not k.startswith("on")]
    return doc


def _regenerate_candidate(
    doc: DocumentModel, opts: TransformOptions, llm_provider, params: ModelParams
) -> tuple[DocumentModel, int]:
    if opts.provider == "offline":
        return parse(offline_regenerate(doc)), 0
    chunks = chunk_document(doc, opts.budget)
    template = load_template("regenerate")
    responses = run_sequence(
        chunks, template, llm_provider, params, budget=opts.budget
    )
    html = stitch([extract_html_payload(r) for r in responses])
    return parse(html), len(chunks)


def _require_provider(opts: TransformOptions, llm_provider) -> None:
    if opts.provider in ("mock", "remote") and llm_provider is None:
        raise ValueError(f"provider {opts.provider!r} requires an llm_provider instance")


def regenerate(
    doc: DocumentModel,
    opts: TransformOptions,
    *,
    llm_provider=None,
    embed_provider=None,
    params: ModelParams | None = None,
) -> TransformResult:
    """Full-document rebuild behind the content-integrity gate."""
    if opts.mode != "regenerate":
        raise ValueError("options mode must be 'regenerate'")
    _require_provider(opts, llm_provider)
    embed = embed_provider or LexicalProvider()
    params = params or ModelParams()
    original_content = extract_accessible(doc)
    audit_before = run_audit(doc)

    best = 0.0
    candidate = None
    chunk_count = 0
    attempts = 0
    for attempts in range(1, opts.max_attempts + 1):
        candidate_doc, chunk_count = _regenerate_candidate(doc, opts, llm_provider, params)
        candidate_doc = _sanitize_regenerated(candidate_doc)
        score = aggregated_similarity(
            original_content, extract_accessible(candidate_doc), embed
        )
        best = max(best, score)
        if gate(score, opts.threshold):
            candidate = candidate_doc
            break
    if candidate is None:
        raise GateFailure(best, opts.threshold, attempts)

    missing = find_missing_links(doc, candidate)
    final = reinsert_links(candidate, missing)
    report = SimilarityReport(
        score=score,
        threshold=opts.threshold,
        passed=True,
        provider=embed.name,
        missing_anchors=missing,
    )
    return TransformResult(
        html=serialize(final),
        patches=None,
        similarity=report,
        audit_before=audit_before,
        audit_after=run_audit(final),
        attempts=attempts,
        chunk_count=chunk_count,
    )


def _reorganize_candidate(
    doc: DocumentModel, opts: TransformOptions, llm_provider, params: ModelParams
) -> tuple[list[TagPatch], int]:
    if opts.provider == "offline":
        return offline_reorganize(doc), 0
    records = tag_records(doc)
    chunks = _record_chunks(records, opts.budget)
    template = load_template("reorganize")
    responses = run_sequence(chunks, template, llm_provider, params, budget=opts.budget)
    patches: list[TagPatch] = []
    for response in responses:
        parsed = parse_patches(response, doc)
        for reason in parsed.rejected:
            log.warning("rejected patch entry: %s", reason)
        patches.extend(parsed.patches)
    return patches, len(chunks)


def reorganize(
    doc: DocumentModel,
    opts: TransformOptions,
    *,
    llm_provider=None,
    embed_provider=None,
    params: ModelParams | None = None,
) -> TransformResult:
    """In-place tag reorganization behind the same gate as regeneration."""
    if opts.mode != "reorganize":
        raise ValueError("options mode must be 'reorganize'")
    _require_provider(opts, llm_provider)
    embed = embed_provider or LexicalProvider()
    params = params or ModelParams()
    original_content = extract_accessible(doc)
    audit_before = run_audit(doc)

    best = 0.0
    final = None
    patches: list[TagPatch] = []
    chunk_count = 0
    attempts = 0
    last_patch_error: PatchError | None = None
    for attempts in range(1, opts.max_attempts + 1):
        try:
            patches, chunk_count = _reorganize_candidate(doc, opts, llm_provider, params)
        except PatchError as exc:
            last_patch_error = exc
            log.warning("attempt %d: %s", attempts, exc)
            continue
        candidate = apply_patches(doc, patches)
        score = aggregated_similarity(
            original_content, extract_accessible(candidate), embed
        )
        best = max(best, score)
        if gate(score, opts.threshold):
            final = candidate
            break
    if final is None:
        if last_patch_error is not None and best == 0.0:
            raise last_patch_error
        raise GateFailure(best, opts.threshold, attempts)

    for patch in patches:
        patch.path = node_path(doc, patch.node)
    report = SimilarityReport(
        score=score,
        threshold=opts.threshold,
        passed=True,
        provider=embed.name,
        missing_anchors=[],
    )
    return TransformResult(
        html=serialize(final),
        patches=patches,
        similarity=report,
        audit_before=audit_before,
        audit_after=run_audit(final),
        attempts=attempts,
        chunk_count=chunk_count,
    )


def transform(
    doc: DocumentModel,
    opts: TransformOptions,
    *,
    llm_provider=None,
    embed_provider=None,
    params: ModelParams | None = None,
) -> TransformResult:
    """Dispatch on the options mode."""
    runner = regenerate if opts.mode == "regenerate" else reorganize
    return runner(
        doc,
        opts,
        llm_provider=llm_provider,
        embed_provider=embed_provider,
        params=params,
    )
