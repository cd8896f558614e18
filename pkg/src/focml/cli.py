"""Command line driver.

Exit codes: 0 success, 1 compile or evaluation error, 2 usage error.
`FOCML_COLOR=0|1` overrides the tty detection for diagnostic coloring.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .driver import CompiledUnit, compile_files, doc_text, render_deps_report
from .emit import emit_comp, emit_logical
from .errors import CompileError, Diagnostic, EvalFailure
from .evaluator import eval_call


def _use_color() -> bool:
    flag = os.environ.get("FOCML_COLOR")
    if flag == "0":
        return False
    if flag == "1":
        return True
    return sys.stderr.isatty()


def _report(diag: Diagnostic) -> None:
    print(diag.format(color=_use_color()), file=sys.stderr)


def _write(target: str, text: str) -> None:
    if target == "-":
        sys.stdout.write(text)
    else:
        Path(target).write_text(text)


def _compile(files: list[str]) -> CompiledUnit:
    cu = compile_files(files)
    for w in cu.warnings:
        _report(w)
    return cu


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="focml", description="compiler for the focml species language"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse, flatten, type and analyze")
    p.add_argument("files", nargs="+")

    p = sub.add_parser("deps", help="write the dependency report as JSON")
    p.add_argument("files", nargs="+")
    p.add_argument("--json", default="-", metavar="OUT", help="output path, - for stdout")

    p = sub.add_parser("emit", help="generate checkable and executable code")
    p.add_argument("files", nargs="+")
    p.add_argument("--logical", metavar="OUT", help="logical target output path")
    p.add_argument("--comp", metavar="OUT", help="computational target output path")

    p = sub.add_parser("eval", help="evaluate a collection method call")
    p.add_argument("files", nargs="+")
    p.add_argument("--call", required=True, metavar="EXPR", help='e.g. "In_5_10!filter(12)"')

    p = sub.add_parser("doc", help="write the documentation summary")
    p.add_argument("files", nargs="+")
    p.add_argument("--out", default="-", metavar="OUT", help="output path, - for stdout")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cu = _compile(args.files)
    except CompileError as err:
        _report(err.to_diagnostic(args.files[0]))
        return 1
    except OSError as err:
        print(f"focml: {err}", file=sys.stderr)
        return 2

    match args.command:
        case "check":
            return 0
        case "deps":
            _write(args.json, render_deps_report(cu))
            return 0
        case "emit":
            if args.logical is None and args.comp is None:
                parser.error("emit needs --logical and/or --comp")
            if args.logical is not None:
                _write(args.logical, emit_logical(cu))
            if args.comp is not None:
                _write(args.comp, emit_comp(cu))
            return 0
        case "eval":
            try:
                print(eval_call(cu, args.call))
            except (CompileError, EvalFailure) as err:
                _report(Diagnostic(err.kind, err.message, file="<call>"))
                return 1
            return 0
        case "doc":
            _write(args.out, doc_text(cu))
            return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
