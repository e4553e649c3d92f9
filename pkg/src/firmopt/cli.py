"""Command line entry point: ``firmopt fold|select|validate|pipeline``.

Exit codes: 0 success, 1 validation violations (``validate`` only),
2 unreadable or invalid input, 3 the fold did not reach a fixed point.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .driver import (
    PipelineConfig,
    emit_validation_report,
    format_stats,
    run_to_fixpoint,
)
from .errors import FirmoptError, GxlError, NonConvergence
from .gxl import load_gxl, save_gxl
from .instr_sel import SelConfig, run_instruction_selection
from .local_opt import FoldConfig
from .model import validate

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3

OPS_CONFIG_ENV = "FIRMOPT_OPS_CONFIG"

log = logging.getLogger("firmopt")


class InputError(Exception):
    pass


def _load_valid(path):
    try:
        doc = load_gxl(path)
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc.strerror or exc)) from None
    except GxlError as exc:
        raise InputError("%s: %s" % (path, exc)) from None
    report = validate(doc)
    if not report.ok:
        for v in report.violations:
            print("%s: %s %s: %s" % (path, v.rule_id, v.element_id, v.message), file=sys.stderr)
        raise InputError("%s: %d validation violation(s)" % (path, len(report)))
    return doc


def _sel_config(path):
    path = path or os.environ.get(OPS_CONFIG_ENV)
    if not path:
        return SelConfig()
    try:
        return SelConfig.load(path)
    except (OSError, ValueError) as exc:
        raise InputError("bad ops config %s: %s" % (path, exc)) from None


def _write_stats(path, summary, title):
    path = Path(path)
    path.write_text(format_stats(summary), encoding="utf-8")
    Path(str(path) + ".json").write_text(json.dumps(summary.as_dict(), indent=2) + "\n",
                                         encoding="utf-8")
    from .plotting import plot_run_summary

    plot_run_summary(summary, str(path) + ".png", title=title)


def _fold(args):
    doc = _load_valid(args.input)
    pipe = PipelineConfig(max_iterations=args.max_iters, emit_stats=bool(args.stats))
    try:
        out, summary = run_to_fixpoint(doc, FoldConfig(), pipe, in_place=True)
    except NonConvergence as exc:
        if args.stats and exc.summary is not None:
            _write_stats(args.stats, exc.summary, doc.source_name)
        raise
    if args.stats:
        _write_stats(args.stats, summary, doc.source_name)
    return out, summary


def cmd_fold(args):
    out, summary = _fold(args)
    save_gxl(out, args.output)
    log.info("fold: %d iterations", summary.iterations)
    return EXIT_OK


def cmd_select(args):
    doc = _load_valid(args.input)
    out = run_instruction_selection(doc, _sel_config(args.ops_config))
    save_gxl(out, args.output)
    return EXIT_OK


def cmd_pipeline(args):
    cfg = _sel_config(args.ops_config)
    folded, _ = _fold(args)
    save_gxl(run_instruction_selection(folded, cfg), args.output)
    return EXIT_OK


def cmd_validate(args):
    try:
        doc = load_gxl(args.input, strict=False)
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (args.input, exc.strerror or exc)) from None
    except GxlError as exc:
        raise InputError("%s: %s" % (args.input, exc)) from None
    report = validate(doc)
    data = emit_validation_report(report, args.format, title=doc.source_name)
    if args.output:
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    print("%s: %d violations" % (args.input, len(report)), file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_VIOLATIONS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="firmopt", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log pass decisions")
    sub = p.add_subparsers(dest="command", required=True)

    def fold_opts(sp):
        sp.add_argument("--max-iters", type=int, default=1000, metavar="N")
        sp.add_argument("--stats", metavar="PATH",
                        help="write key=value stats to PATH, plus PATH.json and a PATH.png figure")

    sp = sub.add_parser("fold", help="constant folding and control-flow cleanup to a fixed point")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", required=True)
    fold_opts(sp)
    sp.set_defaults(func=cmd_fold)

    sp = sub.add_parser("select", help="instruction selection")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--ops-config", metavar="PATH",
                    help="JSON op tables (default: $%s or built-in)" % OPS_CONFIG_ENV)
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("validate", help="check well-formedness rules R1-R6")
    sp.add_argument("input")
    sp.add_argument("--format", choices=("text", "json", "html"), default="text")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("pipeline", help="fold to a fixed point, then select")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--ops-config", metavar="PATH")
    fold_opts(sp)
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "max_iters", 1) < 1:
        print("firmopt: --max-iters must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print("firmopt: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except NonConvergence as exc:
        print("firmopt: %s" % exc, file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except FirmoptError as exc:
        print("firmopt: %s" % exc, file=sys.stderr)
        return EXIT_INPUT


cli_main = main
