import json
import re

import jsonschema
import pytest

from conftest import load_corpus
from qdbg import corpus
from qdbg.diagnosis import diagnose
from qdbg.engine import run
from qdbg.report import REPORT_SCHEMA, DiagnosticsReport, build_report, render_json, render_text


def report_for(name: str) -> tuple[DiagnosticsReport, str]:
    source = corpus.read(name)
    flat = load_corpus(name)
    trace = run(flat)
    return build_report(name, source, flat, trace, diagnose(flat, trace)), source


class TestJson:
    @pytest.mark.parametrize("name", corpus.CORPUS_FILES)
    def test_schema_valid(self, name):
        report, _ = report_for(name)
        jsonschema.validate(json.loads(render_json(report)), REPORT_SCHEMA)

    def test_top_level_key_order(self):
        report, _ = report_for("grover_buggy.qasm")
        keys = list(json.loads(render_json(report)))
        assert keys == ["version", "program", "assertions", "diagnostics", "summary"]

    def test_round_trip(self):
        report, _ = report_for("grover_buggy.qasm")
        again = DiagnosticsReport.from_dict(json.loads(render_json(report)))
        assert again.to_dict() == report.to_dict()
        assert render_json(again) == render_json(report)

    def test_empty_diagnostics(self):
        report, _ = report_for("bell.qasm")
        assert json.loads(render_json(report))["diagnostics"] == []

    def test_summary(self):
        report, _ = report_for("grover_buggy.qasm")
        data = json.loads(render_json(report))
        assert data["summary"] == {"checked": 6, "failed": 4, "exit_code": 1}
        assert data["program"] == {"path": "grover_buggy.qasm", "lines": 27, "qubits": 4}

    def test_byte_stable(self):
        assert render_json(report_for("random_12.qasm")[0]) == render_json(report_for("random_12.qasm")[0])


class TestText:
    def test_failed_equality_shows_fidelity(self):
        report, source = report_for("grover_buggy.qasm")
        text = render_text(report, source)
        assert "assert-eq #1 FAILED: fidelity 0.0625 (threshold 0.8)" in text

    def test_summary_line(self):
        report, source = report_for("grover_buggy.qasm")
        assert render_text(report, source).rstrip().endswith("6 assertions checked, 2 passed, 4 failed")

    def test_same_diagnostics_as_json(self):
        report, source = report_for("grover_buggy.qasm")
        text = render_text(report, source)
        kinds = re.findall(r"^\s+= (\w+): ", text, flags=re.M)
        listed = [k for k in kinds if k[0].isupper()]
        assert sorted(listed) == sorted(d.kind for d in report.diagnostics)

    def test_notes_follow_their_line(self):
        report, source = report_for("grover_buggy.qasm")
        lines = render_text(report, source).splitlines()
        at = next(i for i, l in enumerate(lines) if l.startswith("19 |"))
        assert "before Line 19" in lines[at + 1]

    def test_without_source(self):
        report, _ = report_for("grover_buggy.qasm")
        text = render_text(report)
        assert "21 |" in text and "17 |" not in text

    def test_color(self):
        report, source = report_for("grover_buggy.qasm")
        assert "\033[31mFAILED" in render_text(report, source, color=True)
        assert "\033[" not in render_text(report, source)
