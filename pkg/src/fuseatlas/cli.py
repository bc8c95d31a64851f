"""Command-line front door: validate, build, query, fuse, export, stats.

Exit codes are a stable contract: 0 success, 1 validation errors, 2 usage
error, 3 I/O error. Diagnostics go to stderr; machine output goes to stdout
or the -o target.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from typing import Sequence

from . import fusion, index, query
from .errors import FuseAtlasError
from .harmonize import build_catalog, read_overlap_hints
from .schema import ValidationReport, parse_annotations, parse_dataset_meta, validate_catalog

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

_GENERATED_AT_RE = re.compile(r"^\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # keep argparse's code-2 contract explicit
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_lines(path: str) -> list[str]:
    # undecodable bytes become replacement chars and surface as parse
    # diagnostics instead of crashing the command
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        return fh.read().splitlines()


def _print_report(report: ValidationReport, n_records: int, stream) -> None:
    for d in report.diagnostics:
        print(f"{d.severity}: line {d.line_no}: {d.field}: {d.message}", file=stream)
    status = "OK" if report.ok else "FAILED"
    print(f"{status}: {n_records} records, {len(report.errors())} errors, "
          f"{len(report.warnings())} warnings", file=stream)


def _facet_args(pairs: list[str]) -> dict[str, list[str]]:
    facets: dict[str, list[str]] = {}
    for pair in pairs:
        if "=" not in pair:
            raise FuseAtlasError(f"--facet expects axis=value, got {pair!r}")
        axis, value = pair.split("=", 1)
        facets.setdefault(axis.strip(), []).append(value.strip())
    return facets


def build_arg_parser() -> _Parser:
    parser = _Parser(prog="fuseatlas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate metadata files and print a report")
    p.add_argument("meta", help="data-meta.jsonl path")
    p.add_argument("annotations", nargs="*", help="annotation jsonl paths")

    p = sub.add_parser("build", help="build the canonical catalog manifest")
    p.add_argument("meta")
    p.add_argument("--annotations", action="append", default=[],
                   help="annotation jsonl path (repeatable)")
    p.add_argument("--hints", help="overlap hints TSV (name_a<TAB>name_b per line)")
    p.add_argument("--generated-at", dest="generated_at",
                   help="ISO-8601 timestamp for reproducible builds")
    p.add_argument("--strict", action="store_true",
                   help="fail the build on any error-severity diagnostic")
    p.add_argument("-o", "--output", required=True, help="manifest.json path")

    p = sub.add_parser("query", help="select datasets by recipe or facets")
    p.add_argument("-m", "--manifest", required=True)
    p.add_argument("--recipe", help="recipe JSON file")
    p.add_argument("--facet", action="append", default=[], metavar="AXIS=VALUE")
    p.add_argument("--text", help="free-text query (facet mode)")

    p = sub.add_parser("fuse", help="build a fusion blueprint for a recipe")
    p.add_argument("-m", "--manifest", required=True)
    p.add_argument("--recipe", required=True)
    p.add_argument("--group-by", dest="group_by", default="modality",
                   choices=fusion.GROUP_AXES)
    p.add_argument("-o", "--output", help="blueprint.json path")

    p = sub.add_parser("export", help="export the audit table for a recipe")
    p.add_argument("-m", "--manifest", required=True)
    p.add_argument("--recipe", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("-o", "--output", help="output path (stdout when omitted)")

    p = sub.add_parser("stats", help="distribution or yearly statistics")
    p.add_argument("-m", "--manifest", required=True)
    p.add_argument("--recipe", help="restrict to a recipe selection")
    p.add_argument("--axis", required=True,
                   choices=("modality", "task", "dimension", "anatomy_root",
                            "label_presence", "year"))
    return parser


def _cmd_validate(args) -> int:
    records, report = parse_dataset_meta(_read_lines(args.meta))
    annotations = []
    for path in args.annotations:
        entries, ann_report = parse_annotations(_read_lines(path))
        annotations.extend(entries)
        report.extend(ann_report.diagnostics)
    report.extend(validate_catalog(records, annotations).diagnostics)
    _print_report(report, len(records), sys.stdout)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _cmd_build(args) -> int:
    if args.generated_at and not _GENERATED_AT_RE.match(args.generated_at):
        print(f"fuseatlas: error: --generated-at must be ISO-8601, got {args.generated_at!r}",
              file=sys.stderr)
        return EXIT_USAGE
    hints = read_overlap_hints(_read_lines(args.hints)) if args.hints else []
    annotation_lines: list[str] = []
    for path in args.annotations:
        annotation_lines.extend(_read_lines(path))
    manifest, report = build_catalog(
        _read_lines(args.meta),
        annotation_lines,
        overlap_hints=hints,
        generated_at=args.generated_at,
        strict=args.strict,
    )
    _print_report(report, len(manifest.datasets) if manifest else 0, sys.stderr)
    if manifest is None:
        return EXIT_VALIDATION
    index.export_manifest(manifest, args.output)
    print(f"wrote {args.output} ({len(manifest.datasets)} datasets)", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _selection_for(args, manifest):
    if args.recipe:
        recipe = query.recipe_from_file(args.recipe)
        return query.evaluate_recipe(recipe, manifest), recipe
    facets = _facet_args(args.facet) if getattr(args, "facet", None) else {}
    text = getattr(args, "text", None)
    return query.facet_filter(facets, text, manifest), None


def _cmd_query(args) -> int:
    manifest = index.load_manifest(args.manifest)
    if args.recipe and (args.facet or args.text):
        print("fuseatlas: error: --recipe and --facet/--text are mutually exclusive",
              file=sys.stderr)
        return EXIT_USAGE
    selection, _ = _selection_for(args, manifest)
    for name in selection.names:
        print(name)
    print(f"{len(selection.names)} datasets selected", file=sys.stderr)
    return EXIT_OK


def _cmd_fuse(args) -> int:
    manifest = index.load_manifest(args.manifest)
    recipe = query.recipe_from_file(args.recipe)
    bp = fusion.build_blueprint(recipe, manifest, group_axis=args.group_by)
    print(fusion.render_blueprint_table(bp))
    if args.output:
        doc = fusion.blueprint_to_doc(bp)
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        print(f"wrote {args.output}", file=sys.stderr)
    return EXIT_OK


def _cmd_export(args) -> int:
    manifest = index.load_manifest(args.manifest)
    recipe = query.recipe_from_file(args.recipe)
    selection = query.evaluate_recipe(recipe, manifest)
    data = index.export_audit(selection, manifest, format=args.format)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
        print(f"wrote {args.output} ({len(selection.names)} rows)", file=sys.stderr)
    else:
        sys.stdout.write(data.decode("utf-8"))
    return EXIT_OK


def _cmd_stats(args) -> int:
    manifest = index.load_manifest(args.manifest)
    if args.recipe:
        recipe = query.recipe_from_file(args.recipe)
        selection = query.evaluate_recipe(recipe, manifest)
    else:
        selection = query.SelectionSet(names=manifest.names())
    if args.axis == "year":
        years, unknown = index.yearly_totals(selection, manifest)
        print("year  dataset_count  image_sum")
        for b in years:
            print(f"{b.year}  {b.dataset_count}  {b.image_sum}")
        print(f"unknown  {unknown.dataset_count}  {unknown.image_sum}")
        return EXIT_OK
    hist = index.distribution(selection, manifest, args.axis)
    print(f"{hist.axis}  dataset_count  image_sum")
    for b in hist.bins:
        print(f"{b.value}  {b.dataset_count}  {b.image_sum}")
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "build": _cmd_build,
    "query": _cmd_query,
    "fuse": _cmd_fuse,
    "export": _cmd_export,
    "stats": _cmd_stats,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except OSError as exc:
        print(f"fuseatlas: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FuseAtlasError as exc:
        print(f"fuseatlas: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
