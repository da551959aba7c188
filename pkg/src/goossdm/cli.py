"""Command-line entry point wiring the whole pipeline.

Exit codes: 0 success, 1 validation/conformance failures, 2 usage or IO
errors. ``--format json`` switches machine-readable output onto stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .correspondence import check_correspondence
from .diagnostics import Diagnostic
from .dsl import format_tree, lower, parse
from .errors import SourceError, TransformError, XsdError
from .instances import GenConfig, generate, read_xml, validate_instance, write_xml
from .transform import transform
from .validator import validate
from .xsd import emit, read


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _IoFailure(f"cannot read {path}: {exc.strerror or exc}") from None


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _IoFailure(f"cannot write {path}: {exc.strerror or exc}") from None


class _IoFailure(Exception):
    pass


def _print_diagnostics(diagnostics, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps([d.to_json() for d in diagnostics], indent=2))
    else:
        for diag in diagnostics:
            print(str(diag), file=sys.stderr)


def _compile_schema(path: str, fmt: str):
    """parse -> lower -> validate; returns (schema, warnings) or exits 1."""
    source = _read_text(path)
    try:
        tree = parse(source, path)
        schema = lower(tree, path)
    except SourceError as exc:
        _print_diagnostics(exc.diagnostics, fmt)
        raise _Failed() from None
    report = validate(schema)
    if not report.ok:
        _print_diagnostics(report.diagnostics, fmt)
        raise _Failed() from None
    return schema, report.diagnostics


class _Failed(Exception):
    pass


def cmd_compile(args) -> int:
    schema, warnings = _compile_schema(args.input, args.format)
    try:
        result = transform(schema)
    except TransformError as exc:
        _print_diagnostics([Diagnostic(exc.code, str(exc))], args.format)
        return 1
    text = emit(result.document)
    if args.output:
        _write_text(args.output, text)
    else:
        print(text, end="")
    if args.emit_plan:
        plan_path = str(Path(args.output).with_suffix(".plan.json"))
        _write_text(plan_path, json.dumps(result.plan.to_json(), indent=2) + "\n")
    notes = [*warnings, *result.warnings]
    if notes and args.format != "json":
        _print_diagnostics(notes, args.format)
    return 0


def cmd_check(args) -> int:
    source = _read_text(args.input)
    try:
        schema = lower(parse(source, args.input), args.input)
    except SourceError as exc:
        _print_diagnostics(exc.diagnostics, args.format)
        return 1
    report = validate(schema)
    _print_diagnostics(report.diagnostics, args.format)
    return 0 if report.ok else 1


def cmd_correspond(args) -> int:
    schema, _warnings = _compile_schema(args.schema, args.format)
    doc = read(_read_text(args.xsd))
    report = check_correspondence(schema, doc)
    if args.format == "json":
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.to_table())
    return 0 if report.ok else 1


def cmd_generate(args) -> int:
    doc = read(_read_text(args.xsd))
    cfg = GenConfig(seed=args.seed, count=args.count, max_repeat=args.max_repeat)
    documents = generate(doc, cfg)
    out_dir = Path(args.output or ".")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _IoFailure(f"cannot create {out_dir}: {exc.strerror or exc}") from None
    stem = Path(args.xsd).stem
    for index, document in enumerate(documents):
        path = out_dir / f"{stem}.{args.seed}.{index:04d}.xml"
        _write_text(str(path), write_xml(document))
        print(path)
    return 0


def cmd_validate(args) -> int:
    doc = read(_read_text(args.xsd))
    xml = read_xml(_read_text(args.xml))
    report = validate_instance(doc, xml)
    if args.format == "json":
        print(json.dumps(report.to_json(), indent=2))
    else:
        for violation in report.violations:
            print(f"{violation.code} {violation.path}: {violation.message}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_fmt(args) -> int:
    source = _read_text(args.input)
    try:
        formatted = format_tree(parse(source, args.input))
    except SourceError as exc:
        _print_diagnostics(exc.diagnostics, args.format)
        return 1
    if args.check:
        return 0 if formatted == source else 1
    if args.output:
        _write_text(args.output, formatted)
    else:
        print(formatted, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goossdm",
        description="Compile layered conceptual schemas to XSD, check the "
        "structural correspondence, and generate/validate XML instances.",
    )
    parser.add_argument("--version", action="version", version=f"goossdm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p) -> None:
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("compile", help="compile a schema to an .xsd file")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--emit-plan", action="store_true", help="also write <output>.plan.json")
    add_format(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("check", help="run the schema validator")
    p.add_argument("input")
    add_format(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("correspond", help="check schema/XSD structural correspondence")
    p.add_argument("schema")
    p.add_argument("xsd")
    add_format(p)
    p.set_defaults(func=cmd_correspond)

    p = sub.add_parser("generate", help="generate conforming XML instances")
    p.add_argument("xsd")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--max-repeat", type=int, default=3)
    p.add_argument("-o", "--output", help="output directory (default: current)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="validate an XML instance against an .xsd file")
    p.add_argument("xsd")
    p.add_argument("xml")
    add_format(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fmt", help="canonically format a schema file")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--check", action="store_true", help="exit 1 when not canonical")
    add_format(p)
    p.set_defaults(func=cmd_fmt)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "emit_plan", False) and not args.output:
        print("--emit-plan requires -o/--output", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except _Failed:
        return 1
    except (XsdError, TransformError) as exc:
        fmt = getattr(args, "format", "text")
        _print_diagnostics([Diagnostic(exc.code, str(exc))], fmt)
        return 1
    except _IoFailure as exc:
        print(str(exc), file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
