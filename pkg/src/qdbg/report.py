"""Wire form of a run and its JSON and text renderings."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

from qdbg.diagnosis import Diagnostic
from qdbg.engine import AssertionOutcome, ExecutionTrace
from qdbg.frontend.ast import FlatProgram

REPORT_VERSION = 1

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "program", "assertions", "diagnostics", "summary"],
    "properties": {
        "version": {"type": "integer"},
        "program": {
            "type": "object",
            "additionalProperties": False,
            "required": ["path", "lines", "qubits"],
            "properties": {
                "path": {"type": "string"},
                "lines": {"type": "integer", "minimum": 0},
                "qubits": {"type": "integer", "minimum": 0},
            },
        },
        "assertions": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["line", "kind", "occurrence", "passed", "metrics"],
                "properties": {
                    "line": {"type": "integer", "minimum": 1},
                    "kind": {"enum": ["assert-ent", "assert-sup", "assert-eq"]},
                    "occurrence": {"type": "integer", "minimum": 1},
                    "passed": {"type": "boolean"},
                    "metrics": {"type": "object"},
                },
            },
        },
        "diagnostics": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind", "line", "col_start", "col_end", "message", "related"],
                "properties": {
                    "kind": {
                        "enum": [
                            "MissingInteraction",
                            "MissingControlHypothesis",
                            "ControlAlwaysZero",
                            "MissingGateHypothesis",
                            "ConeReport",
                        ]
                    },
                    "line": {"type": "integer", "minimum": 1},
                    "col_start": {"type": "integer", "minimum": 1},
                    "col_end": {"type": "integer", "minimum": 1},
                    "message": {"type": "string"},
                    "related": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["line", "note"],
                            "properties": {"line": {"type": "integer"}, "note": {"type": "string"}},
                        },
                    },
                },
            },
        },
        "summary": {
            "type": "object",
            "additionalProperties": False,
            "required": ["checked", "failed", "exit_code"],
            "properties": {
                "checked": {"type": "integer", "minimum": 0},
                "failed": {"type": "integer", "minimum": 0},
                "exit_code": {"type": "integer"},
            },
        },
    },
}


@dataclass(frozen=True)
class ProgramDigest:
    path: str
    lines: int
    qubits: int


@dataclass(frozen=True)
class AssertionRecord:
    line: int
    kind: str
    occurrence: int
    passed: bool
    metrics: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RelatedRecord:
    line: int
    note: str


@dataclass(frozen=True)
class DiagnosticRecord:
    kind: str
    line: int
    col_start: int
    col_end: int
    message: str
    related: tuple[RelatedRecord, ...] = ()


@dataclass(frozen=True)
class Summary:
    checked: int
    failed: int
    exit_code: int

    @property
    def passed(self) -> int:
        return self.checked - self.failed


@dataclass(frozen=True)
class DiagnosticsReport:
    program: ProgramDigest
    assertions: tuple[AssertionRecord, ...]
    diagnostics: tuple[DiagnosticRecord, ...]
    summary: Summary
    version: int = REPORT_VERSION

    def to_dict(self) -> dict[str, Any]:
        # key order here is the order in the JSON output
        return {
            "version": self.version,
            "program": asdict(self.program),
            "assertions": [asdict(a) for a in self.assertions],
            "diagnostics": [
                {
                    "kind": d.kind,
                    "line": d.line,
                    "col_start": d.col_start,
                    "col_end": d.col_end,
                    "message": d.message,
                    "related": [asdict(r) for r in d.related],
                }
                for d in self.diagnostics
            ],
            "summary": asdict(self.summary),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DiagnosticsReport:
        return cls(
            program=ProgramDigest(**data["program"]),
            assertions=tuple(AssertionRecord(**a) for a in data["assertions"]),
            diagnostics=tuple(
                DiagnosticRecord(
                    d["kind"], d["line"], d["col_start"], d["col_end"], d["message"],
                    tuple(RelatedRecord(**r) for r in d["related"]),
                )
                for d in data["diagnostics"]
            ),
            summary=Summary(**data["summary"]),
            version=data["version"],
        )


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if hasattr(value, "item"):  # numpy scalar
        return value.item()
    return value


def outcome_record(outcome: AssertionOutcome) -> AssertionRecord:
    assert outcome.assertion is not None
    return AssertionRecord(
        outcome.assertion.line,
        outcome.assertion.kind.value,
        outcome.occurrence,
        bool(outcome.passed),
        _json_safe(outcome.metrics),
    )


def diagnostic_record(diag: Diagnostic) -> DiagnosticRecord:
    span = diag.primary_span
    return DiagnosticRecord(
        diag.kind.value,
        span.line,
        span.column_start,
        span.column_end,
        diag.message,
        tuple(RelatedRecord(r.span.line, r.note) for r in diag.related_spans),
    )


def exit_code_for(trace: ExecutionTrace) -> int:
    return 1 if trace.failed else 0


def build_report(
    path: str, source: str, flat: FlatProgram, trace: ExecutionTrace, diagnostics: list[Diagnostic]
) -> DiagnosticsReport:
    failed = len(trace.failed)
    return DiagnosticsReport(
        program=ProgramDigest(path, len(source.splitlines()), flat.num_qubits),
        assertions=tuple(outcome_record(o) for o in trace.outcomes),
        diagnostics=tuple(diagnostic_record(d) for d in diagnostics),
        summary=Summary(len(trace.outcomes), failed, exit_code_for(trace)),
    )


def render_json(report: DiagnosticsReport) -> str:
    return json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n"


_COLORS = {"fail": "\033[31m", "pass": "\033[32m", "note": "\033[33m", "dim": "\033[2m"}
_RESET = "\033[0m"


def _paint(text: str, style: str, color: bool) -> str:
    return f"{_COLORS[style]}{text}{_RESET}" if color else text


def describe_outcome(record: AssertionRecord) -> str:
    m = record.metrics
    if record.kind == "assert-eq":
        return f"fidelity {m['fidelity']:.4f} (threshold {m['threshold']:g})"
    if record.kind == "assert-sup":
        if record.passed:
            return f"{m['nonzero_outcomes']} outcomes with nonzero probability"
        return f"only outcome |{m['dominant']}> has nonzero probability"
    cuts = m.get("product_cuts", [])
    if not cuts:
        return "no qubit factors out"
    return "separable at " + ", ".join(f"q{c['qubit']}" for c in cuts)


def render_text(report: DiagnosticsReport, source: str | None = None, color: bool = False) -> str:
    """Source listing with outcome and diagnostic notes under the lines they concern.

    Without ``source`` only the annotated line numbers are shown.
    """
    by_line: dict[int, list[str]] = {}
    for a in report.assertions:
        status = _paint("ok", "pass", color) if a.passed else _paint("FAILED", "fail", color)
        text = f"{a.kind} #{a.occurrence} {status}: {describe_outcome(a)}"
        by_line.setdefault(a.line, []).append(text)
    for d in report.diagnostics:
        label = _paint(d.kind, "dim" if d.kind == "ConeReport" else "note", color)
        by_line.setdefault(d.line, []).append(f"{label}: {d.message}")
        if d.kind != "ConeReport":
            for r in d.related:
                by_line[d.line].append(f"  see line {r.line}: {r.note}")

    src_lines = source.splitlines() if source is not None else None
    width = len(str(max([report.program.lines, *by_line.keys(), 1])))
    out = [f"{report.program.path}: {report.program.qubits} qubit(s)"]
    numbers = range(1, len(src_lines) + 1) if src_lines is not None else sorted(by_line)
    for n in numbers:
        text = src_lines[n - 1] if src_lines is not None else ""
        out.append(f"{n:>{width}} | {text}".rstrip())
        for note in by_line.get(n, []):
            out.append(f"{'':>{width}} = {note}")
    s = report.summary
    out.append("")
    out.append(f"{s.checked} assertions checked, {s.passed} passed, {s.failed} failed")
    return "\n".join(out) + "\n"
