"""Rule-based accessibility checker.

A fixed set of twelve Level-A-flavoured machine checks over the document
model. The set is deliberately small, closed, and deterministic so that
before/after reports stay comparable across versions; it is not a WCAG
conformance claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dom import ELEMENT, DocumentModel, DomNode, node_path
from .extract import accessible_name, collapse_whitespace, visible_text

HEADING_TAGS = ("h1", "h2", "h3", "h4", "h5", "h6")

# Concrete WAI-ARIA 1.2 roles; abstract roles are intentionally absent.
ALLOWED_ROLES = frozenset(
    {
        "alert", "alertdialog", "application", "article", "banner",
        "blockquote", "button", "caption", "cell", "checkbox", "code",
        "columnheader", "combobox", "complementary", "contentinfo",
        "definition", "deletion", "dialog", "directory", "document",
        "emphasis", "feed", "figure", "form", "generic", "grid", "gridcell",
        "group", "heading", "img", "insertion", "link", "list", "listbox",
        "listitem", "log", "main", "marquee", "math", "menu", "menubar",
        "menuitem", "menuitemcheckbox", "menuitemradio", "meter",
        "navigation", "none", "note", "option", "paragraph", "presentation",
        "progressbar", "radio", "radiogroup", "region", "row", "rowgroup",
        "rowheader", "scrollbar", "search", "searchbox", "separator",
        "slider", "spinbutton", "status", "strong", "subscript",
        "superscript", "switch", "tab", "table", "tablist", "tabpanel",
        "term", "textbox", "time", "timer", "toolbar", "tooltip", "tree",
        "treegrid", "treeitem",
    }
)

# input types that do not take typed text and therefore skip LABEL-CTRL.
_NON_TEXT_INPUT_TYPES = frozenset(
    {"hidden", "submit", "button", "reset", "checkbox", "radio", "range",
     "color", "file", "image"}
)


@dataclass(frozen=True)
class Rule:
    rule_id: str
    description: str
    wcag_ref: str


RULES: tuple[Rule, ...] = (
    Rule("H-ORDER", "Heading levels must not skip downward by more than one", "1.3.1"),
    Rule("H-EMPTY", "Headings must have accessible text", "2.4.6"),
    Rule("IMG-ALT", "Images must have an alt attribute", "1.1.1"),
    Rule("CTRL-NAME", "Buttons must have an accessible name", "4.1.2"),
    Rule("LINK-NAME", "Links must have an accessible name", "2.4.4"),
    Rule("DOC-TITLE", "Documents must have a non-empty title", "2.4.2"),
    Rule("HTML-LANG", "The html element must declare a language", "3.1.1"),
    Rule("DUP-ID", "id attribute values must be unique", "4.1.1"),
    Rule("LABEL-CTRL", "Text-entry controls must be labelled", "1.3.1"),
    Rule("ARIA-ROLE", "role values must be valid ARIA roles", "4.1.2"),
    Rule("ARIA-REF", "ARIA id references must resolve", "4.1.2"),
    Rule("LANDMARK-MAIN", "Pages must expose a main landmark", "1.3.1"),
)

RULES_BY_ID = {rule.rule_id: rule for rule in RULES}


@dataclass(frozen=True)
class Violation:
    rule_id: str
    path: str
    message: str


@dataclass
class AuditReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def instance_count(self) -> int:
        return len(self.violations)

    @property
    def distinct_rule_count(self) -> int:
        return len({v.rule_id for v in self.violations})

    def count_for(self, rule_id: str) -> int:
        return sum(1 for v in self.violations if v.rule_id == rule_id)

    def to_json_dict(self) -> dict:
        return {
            "violations": [
                {"rule": v.rule_id, "path": v.path, "message": v.message}
                for v in self.violations
            ],
            "instances": self.instance_count,
            "distinct_rules": self.distinct_rule_count,
        }


def heading_level(tag: str) -> int:
    return int(tag[1])


def _body_elements(doc: DocumentModel) -> list[DomNode]:
    body = doc.body
    if body is None:
        return []
    return [n for n in doc.walk(body.id) if n.kind == ELEMENT]


def _check_headings(doc: DocumentModel, out: list[Violation]) -> None:
    headings = [el for el in _body_elements(doc) if el.tag in HEADING_TAGS]
    previous: int | None = None
    for el in headings:
        level = heading_level(el.tag)
        if previous is not None and level - previous > 1:
            out.append(
                Violation(
                    "H-ORDER",
                    node_path(doc, el.id),
                    f"heading level jumps from h{previous} to h{level}",
                )
            )
        previous = level
    for el in headings:
        if accessible_name(doc, el.id) is None:
            out.append(
                Violation("H-EMPTY", node_path(doc, el.id), f"<{el.tag}> has no accessible text")
            )


def _check_images(doc: DocumentModel, out: list[Violation]) -> None:
    for el in _body_elements(doc):
        if el.tag == "img" and not el.has_attr("alt"):
            out.append(
                Violation("IMG-ALT", node_path(doc, el.id), "img element lacks an alt attribute")
            )


def _role_tokens(el: DomNode) -> list[str]:
    return (el.get_attr("role") or "").split()


def _check_names(doc: DocumentModel, out: list[Violation]) -> None:
    for el in _body_elements(doc):
        is_button = el.tag == "button" or "button" in _role_tokens(el)
        if is_button and accessible_name(doc, el.id) is None:
            out.append(
                Violation("CTRL-NAME", node_path(doc, el.id), "button has no accessible name")
            )
        if el.tag == "a" and el.has_attr("href") and accessible_name(doc, el.id) is None:
            out.append(
                Violation("LINK-NAME", node_path(doc, el.id), "link has no accessible name")
            )


def _check_document_scope(doc: DocumentModel, out: list[Violation]) -> None:
    titles = [el for el in doc.elements("title")]
    if not titles or not visible_text(doc, titles[0].id):
        out.append(Violation("DOC-TITLE", "html", "document has no non-empty <title>"))
    lang = collapse_whitespace(doc.html.get_attr("lang") or "")
    if not lang:
        out.append(Violation("HTML-LANG", "html", "html element lacks a lang attribute"))
    has_main = any(
        el.tag == "main" or "main" in _role_tokens(el) for el in _body_elements(doc)
    )
    if not has_main:
        out.append(
            Violation("LANDMARK-MAIN", "html", "no <main> element and no role=\"main\"")
        )


def _check_duplicate_ids(doc: DocumentModel, out: list[Violation]) -> None:
    seen: set[str] = set()
    for el in doc.elements():
        value = el.get_attr("id")
        if not value:
            continue
        if value in seen:
            out.append(
                Violation("DUP-ID", node_path(doc, el.id), f'id "{value}" is already used')
            )
        else:
            seen.add(value)


def _is_text_entry(el: DomNode) -> bool:
    if el.tag in ("select", "textarea"):
        return True
    if el.tag != "input":
        return False
    return (el.get_attr("type") or "text").lower() not in _NON_TEXT_INPUT_TYPES


def _has_label_association(doc: DocumentModel, el: DomNode) -> bool:
    if collapse_whitespace(el.get_attr("aria-label") or ""):
        return True
    ids = {e.get_attr("id") for e in doc.elements() if e.get_attr("id")}
    if any(token in ids for token in (el.get_attr("aria-labelledby") or "").split()):
        return True
    el_id = el.get_attr("id")
    if el_id:
        for label in doc.elements("label"):
            if label.get_attr("for") == el_id:
                return True
    parent = el.parent
    while parent is not None:
        node = doc.node(parent)
        if node.kind == ELEMENT and node.tag == "label":
            return True
        parent = node.parent
    return False


def _check_labels(doc: DocumentModel, out: list[Violation]) -> None:
    for el in _body_elements(doc):
        if _is_text_entry(el) and not _has_label_association(doc, el):
            out.append(
                Violation(
                    "LABEL-CTRL", node_path(doc, el.id), f"<{el.tag}> has no label association"
                )
            )


def _check_aria(doc: DocumentModel, out: list[Violation]) -> None:
    ids = {el.get_attr("id") for el in doc.elements() if el.get_attr("id")}
    for el in _body_elements(doc):
        bad = [t for t in _role_tokens(el) if t.lower() not in ALLOWED_ROLES]
        if bad:
            out.append(
                Violation(
                    "ARIA-ROLE",
                    node_path(doc, el.id),
                    f'role "{" ".join(bad)}" is not a valid ARIA role',
                )
            )
        for attr in ("aria-labelledby", "aria-describedby"):
            for token in (el.get_attr(attr) or "").split():
                if token not in ids:
                    out.append(
                        Violation(
                            "ARIA-REF",
                            node_path(doc, el.id),
                            f'{attr} references missing id "{token}"',
                        )
                    )


def run_audit(doc: DocumentModel) -> AuditReport:
    """Evaluate the full rule set in document order."""
    violations: list[Violation] = []
    _check_headings(doc, violations)
    _check_images(doc, violations)
    _check_names(doc, violations)
    _check_document_scope(doc, violations)
    _check_duplicate_ids(doc, violations)
    _check_labels(doc, violations)
    _check_aria(doc, violations)
    return AuditReport(violations=violations)


@dataclass(frozen=True)
class RuleDelta:
    before: int
    after: int

    @property
    def delta(self) -> int:
        return self.after - self.before


@dataclass
class AuditDiff:
    per_rule: dict[str, RuleDelta]
    total_before: int
    total_after: int

    @property
    def total_delta(self) -> int:
        return self.total_after - self.total_before

    def to_json_dict(self) -> dict:
        return {
            "rules": {
                rule_id: {"before": d.before, "after": d.after, "delta": d.delta}
                for rule_id, d in sorted(self.per_rule.items())
            },
            "total_before": self.total_before,
            "total_after": self.total_after,
            "total_delta": self.total_delta,
        }


def diff_reports(before: AuditReport, after: AuditReport) -> AuditDiff:
    """Per-rule instance deltas; negative means improvement."""
    rule_ids = {v.rule_id for v in before.violations} | {
        v.rule_id for v in after.violations
    }
    per_rule = {
        rule_id: RuleDelta(before.count_for(rule_id), after.count_for(rule_id))
        for rule_id in sorted(rule_ids)
    }
    return AuditDiff(
        per_rule=per_rule,
        total_before=before.instance_count,
        total_after=after.instance_count,
    )
