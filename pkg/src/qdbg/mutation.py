"""Single-fault injection and detection-rate statistics.

A controlled gate is mutated by swapping its target with its first control;
any other instruction is removed. Mutations edit the source-level Program,
so a statement inside a gate definition mutates once for every call.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field, replace

import numpy as np

from qdbg.diagnosis import Diagnostic, DiagnosticKind, diagnose
from qdbg.engine import run
from qdbg.errors import BaselineError
from qdbg.frontend import FlatInstruction, FlatProgram, Program, flatten
from qdbg.frontend.ast import GateCall


class MutationKind(enum.Enum):
    FLIP_CONTROL_TARGET = "flip"
    REMOVE_INSTRUCTION = "remove"


@dataclass(frozen=True)
class MutationSpec:
    site: int  # origin_index of the first flattened copy
    kind: MutationKind
    source_line: int
    owner: str = ""  # gate definition name, "" for top level
    statement: int = 0


@dataclass(frozen=True)
class TrialRecord:
    spec: MutationSpec
    detected: bool
    diagnostic_lines: tuple[int, ...]


@dataclass
class ExperimentReport:
    trials: int
    detected: int
    rates: dict[str, float]
    buckets: dict[str, float]
    line_threshold: int
    records: list[TrialRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "detected": self.detected,
            "rates": self.rates,
            "line_threshold": self.line_threshold,
            "buckets": self.buckets,
            "records": [
                {
                    "line": r.spec.source_line,
                    "kind": r.spec.kind.value,
                    "detected": r.detected,
                    "diagnostic_lines": list(r.diagnostic_lines),
                }
                for r in self.records
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["line", "kind", "detected", "diagnostic_lines"])
        for r in self.records:
            writer.writerow(
                [r.spec.source_line, r.spec.kind.value, int(r.detected), " ".join(map(str, r.diagnostic_lines))]
            )
        return buf.getvalue()


def enumerate_sites(flat: FlatProgram) -> list[MutationSpec]:
    """One mutation per source statement, in order of first execution.

    Custom-gate call statements are removal sites; so is every builtin
    statement without controls. Controlled builtins are flip sites.
    """
    sites: list[MutationSpec] = []
    seen: set[tuple[str, int]] = set()
    for item in flat.instructions:
        if not isinstance(item, FlatInstruction):
            continue
        owner, stmt, _ = item.static_id
        # outermost call first so sites follow source order
        chain = [
            (key, item.call_stack[depth + 1].line, MutationKind.REMOVE_INSTRUCTION)
            for depth, key in enumerate(item.call_ids)
        ][::-1]
        kind = MutationKind.FLIP_CONTROL_TARGET if item.controls else MutationKind.REMOVE_INSTRUCTION
        chain.append(((owner, stmt), item.line, kind))
        for key, line, kind in chain:
            if key in seen:
                continue
            seen.add(key)
            sites.append(MutationSpec(item.origin_index, kind, line, key[0], key[1]))
    return sites


def apply_mutation(program: Program, spec: MutationSpec) -> Program:
    def mutate(body: tuple) -> tuple:
        stmt = body[spec.statement]
        if spec.kind is MutationKind.REMOVE_INSTRUCTION:
            return body[: spec.statement] + body[spec.statement + 1:]
        assert isinstance(stmt, GateCall)
        ops = list(stmt.operands)
        ops[0], ops[-1] = ops[-1], ops[0]
        return body[: spec.statement] + (replace(stmt, operands=tuple(ops)),) + body[spec.statement + 1:]

    if spec.owner == "":
        return replace(program, statements=mutate(program.statements))
    defs = tuple(
        replace(gd, body=mutate(gd.body)) if gd.name == spec.owner else gd for gd in program.gate_defs
    )
    return replace(program, gate_defs=defs)


def is_detected(spec: MutationSpec, diagnostics: list[Diagnostic]) -> tuple[bool, tuple[int, ...]]:
    """Line-level match between pointing diagnostics and the mutated line.

    Any primary or related line equal to the mutated line counts. For a
    removal, a missing-gate hypothesis on a neighbouring line counts too,
    since the removed line is gone from the mutant. Cone reports list whole
    slices rather than point at a location, so they never count.
    """
    lines: set[int] = set()
    hit = False
    for d in diagnostics:
        if d.kind is DiagnosticKind.CONE_REPORT:
            continue
        lines |= d.lines()
        if spec.source_line in d.lines():
            hit = True
        elif (
            spec.kind is MutationKind.REMOVE_INSTRUCTION
            and d.kind is DiagnosticKind.MISSING_GATE_HYPOTHESIS
            and abs(d.line - spec.source_line) <= 1
        ):
            hit = True
    return hit, tuple(sorted(lines))


def run_experiment(
    program: Program,
    trials: int = 100,
    seed: int = 0,
    line_threshold: int = 100,
    waive_baseline: bool = False,
    run_seed: int = 0,
) -> ExperimentReport:
    baseline = run(flatten(program), seed=run_seed)
    if baseline.failed and not waive_baseline:
        lines = sorted({o.assertion.line for o in baseline.failed if o.assertion is not None})
        raise BaselineError(f"unmutated program fails assertion(s) on line(s) {lines}")
    sites = enumerate_sites(flatten(program))
    if not sites:
        return ExperimentReport(0, 0, {"flip": 0.0, "remove": 0.0}, {"early": 0.0, "late": 0.0}, line_threshold)
    rng = np.random.default_rng(seed)
    records: list[TrialRecord] = []
    for _ in range(trials):
        spec = sites[int(rng.integers(len(sites)))]
        mutant = flatten(apply_mutation(program, spec))
        trace = run(mutant, seed=run_seed)
        detected, lines = is_detected(spec, diagnose(mutant, trace))
        records.append(TrialRecord(spec, detected, lines))

    def rate(selected: list[TrialRecord]) -> float:
        return sum(r.detected for r in selected) / len(selected) if selected else 0.0

    rates = {k.value: rate([r for r in records if r.spec.kind is k]) for k in MutationKind}
    buckets = {
        "early": rate([r for r in records if r.spec.source_line < line_threshold]),
        "late": rate([r for r in records if r.spec.source_line >= line_threshold]),
    }
    return ExperimentReport(trials, sum(r.detected for r in records), rates, buckets, line_threshold, records)
