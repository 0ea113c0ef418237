"""Command-line front end: audit, regenerate, reorganize, compare, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audit import diff_reports, run_audit
from .dom import parse
from .errors import GateFailure, RestructError
from .extract import extract_accessible
from .llm import ModelParams
from .pipeline import TransformOptions, transform
from .service import ServiceConfig, build_providers, run_service
from .similarity import DEFAULT_THRESHOLD, LexicalProvider, aggregated_similarity

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="restruct",
        description="Restructure shopping-page HTML for screen reader navigation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    audit = sub.add_parser("audit", help="run the accessibility rule set on a page")
    audit.add_argument("input", help='HTML file path, or "-" for stdin')
    audit.add_argument("--format", choices=("json", "text"), default="text")
    audit.add_argument(
        "--fail-on-violations",
        action="store_true",
        help="exit nonzero when any violation is found (CI gating)",
    )

    for mode in ("regenerate", "reorganize"):
        cmd = sub.add_parser(mode, help=f"run the {mode} pipeline on a page")
        cmd.add_argument("input", help='HTML file path, or "-" for stdin')
        cmd.add_argument("--provider", choices=("offline", "remote"), default="offline")
        cmd.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
        cmd.add_argument("--budget", type=int, default=TransformOptions().budget)
        cmd.add_argument("--attempts", type=int, default=TransformOptions().max_attempts)
        cmd.add_argument("--out", help="write transformed HTML here (default stdout)")
        cmd.add_argument("--report", help="write the full transform report JSON here")
        cmd.add_argument("--format", choices=("json", "text"), default="text")

    compare = sub.add_parser("compare", help="similarity and audit delta of two pages")
    compare.add_argument("original")
    compare.add_argument("candidate")
    compare.add_argument("--format", choices=("json", "text"), default="text")

    serve = sub.add_parser("serve", help="run the local HTTP service")
    serve.add_argument("--port", type=int, default=None)
    return parser


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _audit_text(report) -> str:
    lines = [f"{v.rule_id:14} {v.path}  {v.message}" for v in report.violations]
    lines.append(
        f"{report.instance_count} violation instance(s) across "
        f"{report.distinct_rule_count} rule(s)"
    )
    return "\n".join(lines)


def _run_audit(args) -> int:
    report = run_audit(parse(_read_input(args.input)))
    if args.format == "json":
        print(json.dumps(report.to_json_dict(), indent=2, ensure_ascii=False))
    else:
        print(_audit_text(report))
    if args.fail_on_violations and report.instance_count > 0:
        return EXIT_FAILURE
    return EXIT_OK


def _run_transform(args, mode: str) -> int:
    html = _read_input(args.input)
    opts = TransformOptions(
        mode=mode,
        provider=args.provider,
        threshold=args.threshold,
        budget=args.budget,
        max_attempts=args.attempts,
    )
    config = ServiceConfig.from_env()
    llm, embed = build_providers(config, opts.provider)
    params = ModelParams(model=config.model)
    try:
        result = transform(
            parse(html), opts, llm_provider=llm, embed_provider=embed, params=params
        )
    except GateFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except RestructError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    if args.out:
        Path(args.out).write_text(result.html, encoding="utf-8")
    else:
        print(result.html)
    if args.report:
        Path(args.report).write_text(
            json.dumps(result.to_json_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    if args.format == "json":
        summary = result.to_json_dict()
        del summary["html"]  # already written; keep stdout/report compact
        print(json.dumps(summary, indent=2, ensure_ascii=False), file=sys.stderr)
    else:
        delta = (
            result.audit_after.instance_count - result.audit_before.instance_count
        )
        print(
            f"similarity {result.similarity.score:.4f} "
            f"(threshold {result.similarity.threshold:.2f}), "
            f"violations {result.audit_before.instance_count} -> "
            f"{result.audit_after.instance_count} ({delta:+d}), "
            f"attempts {result.attempts}",
            file=sys.stderr,
        )
    return EXIT_OK


def _run_compare(args) -> int:
    original = parse(_read_input(args.original))
    candidate = parse(_read_input(args.candidate))
    score = aggregated_similarity(
        extract_accessible(original), extract_accessible(candidate), LexicalProvider()
    )
    diff = diff_reports(run_audit(original), run_audit(candidate))
    if args.format == "json":
        print(
            json.dumps(
                {"similarity": score, "audit_diff": diff.to_json_dict()},
                indent=2,
                ensure_ascii=False,
            )
        )
    else:
        print(f"similarity {score:.4f}")
        for rule_id, d in sorted(diff.per_rule.items()):
            print(f"{rule_id:14} {d.before:3d} -> {d.after:3d} ({d.delta:+d})")
        print(
            f"total {diff.total_before} -> {diff.total_after} ({diff.total_delta:+d})"
        )
    return EXIT_OK


def _run_serve(args) -> int:
    config = ServiceConfig.from_env()
    if args.port is not None:
        config.port = args.port
    run_service(config)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "audit":
            return _run_audit(args)
        if args.command in ("regenerate", "reorganize"):
            return _run_transform(args, args.command)
        if args.command == "compare":
            return _run_compare(args)
        if args.command == "serve":
            return _run_serve(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
