"""``qdbg`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Sequence, TextIO

from qdbg.diagnosis import cone_of_influence, diagnose, interaction_graph
from qdbg.engine import run
from qdbg.errors import BaselineError, FrontendError, NumericalError, ResourceLimitError
from qdbg.frontend import FlatInstruction, FlatProgram, flatten, parse
from qdbg.frontend.ast import SourceSpan
from qdbg.mutation import run_experiment
from qdbg.report import build_report, render_json, render_text

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    seed: int = 0
    format: str = "text"
    max_qubits: int | None = None
    color: str = "auto"

    def __post_init__(self) -> None:
        if self.format not in ("text", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.color not in ("auto", "always", "never"):
            raise ValueError(f"unknown color mode {self.color!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


def render_caret(source: str, span: SourceSpan | None, message: str, path: str, code: str = "error") -> str:
    """Compiler-style error with the offending columns underlined."""
    head = f"error[{code}]: {message}"
    if span is None:
        return f"{head}\n --> {path}\n"
    lines = source.splitlines()
    text = lines[span.line - 1] if 0 < span.line <= len(lines) else ""
    gutter = len(str(span.line))
    width = span.column_end - span.column_start + 1
    return (
        f"{head}\n"
        f"{'':>{gutter}}--> {path}:{span.line}:{span.column_start}\n"
        f"{'':>{gutter}} |\n"
        f"{span.line} | {text}\n"
        f"{'':>{gutter}} | {' ' * (span.column_start - 1)}{'^' * width}\n"
    )


class _InputError(Exception):
    """Already rendered; carries the text to print on stderr."""


def _load(path: str) -> tuple[str, FlatProgram]:
    try:
        with open(path, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        raise _InputError(f"error: cannot read {path}: {exc.strerror or exc}\n") from exc
    try:
        return source, flatten(parse(source))
    except FrontendError as exc:
        raise _InputError(render_caret(source, exc.span, exc.message, path, exc.code)) from exc


def _use_color(mode: str, stream: TextIO) -> bool:
    if mode == "always":
        return True
    if mode == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty() and "NO_COLOR" not in os.environ


def cmd_run(config: RunConfig, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        source, flat = _load(config.input_path)
    except _InputError as exc:
        err.write(str(exc))
        return EXIT_INPUT
    try:
        trace = run(flat, seed=config.seed, max_qubits=config.max_qubits)
    except (ResourceLimitError, NumericalError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_RESOURCE
    report = build_report(config.input_path, source, flat, trace, diagnose(flat, trace))
    if config.format == "json":
        out.write(render_json(report))
    else:
        out.write(render_text(report, source, color=_use_color(config.color, out)))
    return report.summary.exit_code


def _nearest_assertions(flat: FlatProgram, line: int) -> list[int]:
    lines = sorted({a.line for a in flat.assertions})
    if not lines:
        return []
    best = min(abs(n - line) for n in lines)
    return [n for n in lines if abs(n - line) == best]


def cmd_slice(path: str, line: int, as_json: bool = False, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        source, flat = _load(path)
    except _InputError as exc:
        err.write(str(exc))
        return EXIT_INPUT
    target = next((a for a in flat.assertions if a.line == line), None)
    if target is None:
        near = _nearest_assertions(flat, line)
        hint = f"; nearest assertion line(s): {', '.join(map(str, near))}" if near else "; the program has no assertions"
        err.write(f"error: line {line} holds no assertion{hint}\n")
        return EXIT_INPUT
    cone = cone_of_influence(flat, target.index)
    if as_json:
        out.write(json.dumps({"line": line, "cone": sorted(cone.source_lines)}) + "\n")
        return EXIT_OK
    for n, text in enumerate(source.splitlines(), start=1):
        out.write(f"{'+' if n in cone.source_lines else '.'} {n:>4} {text}".rstrip() + "\n")
    return EXIT_OK


def graph_prefix(flat: FlatProgram, fraction: float) -> list[FlatInstruction]:
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    instrs = flat.gates
    return instrs[: math.ceil(fraction * len(instrs))]


def cmd_graph(path: str, fraction: float = 1.0, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        _, flat = _load(path)
    except _InputError as exc:
        err.write(str(exc))
        return EXIT_INPUT
    try:
        prefix = graph_prefix(flat, fraction)
    except ValueError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    out.write(interaction_graph(prefix).to_dot())
    return EXIT_OK


def cmd_mutate(args: argparse.Namespace, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        source, _ = _load(args.file)
    except _InputError as exc:
        err.write(str(exc))
        return EXIT_INPUT
    try:
        report = run_experiment(
            parse(source), trials=args.trials, seed=args.seed,
            line_threshold=args.line_threshold, waive_baseline=args.waive_baseline,
        )
    except BaselineError as exc:
        err.write(f"error: {exc}; pass --waive-baseline to continue anyway\n")
        return EXIT_FAILED
    except (ResourceLimitError, NumericalError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_RESOURCE
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
    if args.json:
        out.write(json.dumps(report.to_dict(), indent=2) + "\n")
    else:
        out.write(f"{report.detected}/{report.trials} mutations located\n")
        for kind, rate in report.rates.items():
            out.write(f"  {kind:<6} {rate:6.1%}\n")
        out.write(f"  before line {report.line_threshold}: {report.buckets['early']:6.1%}\n")
        out.write(f"  from line {report.line_threshold} on: {report.buckets['late']:6.1%}\n")
    return EXIT_OK


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("fraction must lie in (0, 1]")
    return value


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdbg", description="Assertion-driven debugger for OpenQASM 2 programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a program and diagnose failed assertions")
    p.add_argument("file")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--max-qubits", type=int, default=None)
    p.add_argument("--color", choices=("auto", "always", "never"), default="auto")

    p = sub.add_parser("slice", help="show the cone of influence of an assertion")
    p.add_argument("file")
    p.add_argument("--line", type=int, required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("graph", help="export the interaction graph as DOT")
    p.add_argument("file")
    p.add_argument("--at-fraction", type=_fraction, default=1.0)

    p = sub.add_parser("mutate", help="inject single faults and measure how often diagnosis finds them")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--line-threshold", type=int, default=100)
    p.add_argument("--json", action="store_true")
    p.add_argument("--csv", metavar="PATH")
    p.add_argument("--waive-baseline", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        config = RunConfig(args.file, args.seed, args.format, args.max_qubits, args.color)
        return cmd_run(config)
    if args.command == "slice":
        return cmd_slice(args.file, args.line, args.json)
    if args.command == "graph":
        return cmd_graph(args.file, args.at_fraction)
    return cmd_mutate(args)


if __name__ == "__main__":
    sys.exit(main())
