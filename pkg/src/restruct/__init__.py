"""Screen-reader-oriented HTML restructuring toolkit.

Two pipelines over a lenient document model: full regeneration into
text-only accessible HTML, and in-place tag reorganization that leaves
layout and content untouched. Both are guarded by a content-integrity
similarity gate and measured by a rule-based accessibility audit.
"""

from .audit import AuditReport, diff_reports, run_audit
from .dom import DocumentModel, node_path, parse, serialize
from .extract import extract_accessible
from .pipeline import (
    TransformOptions,
    TransformResult,
    regenerate,
    reorganize,
    transform,
)
from .similarity import aggregated_similarity, gate

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "DocumentModel",
    "TransformOptions",
    "TransformResult",
    "aggregated_similarity",
    "diff_reports",
    "extract_accessible",
    "gate",
    "node_path",
    "parse",
    "regenerate",
    "reorganize",
    "run_audit",
    "serialize",
    "transform",
]
