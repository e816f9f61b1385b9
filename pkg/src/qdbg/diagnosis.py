"""Diagnosis passes run on failed assertions.

* cone of influence: backward data-flow slice from an assertion
* interaction analysis: connectivity of asserted qubits over the cone
* control value analysis: controlled gates whose control was always zero
* superposition-failure rule: no basis-changing gate reached the qubits
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from qdbg.engine import AssertionOutcome, ControlMarkTable, ExecutionTrace
from qdbg.frontend.ast import Assertion, AssertionKind, FlatInstruction, FlatProgram, SourceSpan, StaticId
from qdbg.gates import BUILTIN_GATES, DIAGONAL_BASES


class DiagnosticKind(enum.Enum):
    # declaration order is the tie-break when sorting diagnostics on one line
    MISSING_INTERACTION = "MissingInteraction"
    MISSING_CONTROL_HYPOTHESIS = "MissingControlHypothesis"
    CONTROL_ALWAYS_ZERO = "ControlAlwaysZero"
    MISSING_GATE_HYPOTHESIS = "MissingGateHypothesis"
    CONE_REPORT = "ConeReport"

    @property
    def rank(self) -> int:
        return list(DiagnosticKind).index(self)


@dataclass(frozen=True)
class RelatedSpan:
    span: SourceSpan
    note: str


@dataclass(frozen=True)
class Diagnostic:
    kind: DiagnosticKind
    primary_span: SourceSpan
    message: str
    related_spans: tuple[RelatedSpan, ...] = ()
    assertion_ref: int = 0
    qubits: tuple[int, ...] = ()

    @property
    def line(self) -> int:
        return self.primary_span.line

    def lines(self) -> set[int]:
        return {self.primary_span.line} | {r.span.line for r in self.related_spans}


@dataclass(frozen=True)
class ConeOfInfluence:
    assertion_ref: int
    instruction_indices: frozenset[int]
    source_lines: frozenset[int]
    qubits: frozenset[int] = field(default_factory=frozenset)


@dataclass
class InteractionGraph:
    nodes: set[int] = field(default_factory=set)
    # unordered pair -> origin_index of the earliest instruction creating it
    edges: dict[frozenset[int], int] = field(default_factory=dict)

    def neighbors(self, q: int) -> set[int]:
        out = set()
        for pair in self.edges:
            if q in pair:
                out |= pair - {q}
        return out

    def component(self, start: int) -> set[int]:
        seen = {start}
        queue = deque([start])
        while queue:
            q = queue.popleft()
            for nb in self.neighbors(q):
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return seen

    def connected(self, a: int, b: int) -> bool:
        return b in self.component(a)

    def to_dot(self, name: str = "interactions") -> str:
        lines = [f"graph {name} {{"]
        lines.extend(f"  q{q};" for q in sorted(self.nodes))
        for a, b in sorted(tuple(sorted(pair)) for pair in self.edges):
            lines.append(f"  q{a} -- q{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _assertion_at(flat: FlatProgram, ref: int | AssertionOutcome) -> Assertion:
    position = ref.position if isinstance(ref, AssertionOutcome) else ref
    item = flat.instructions[position]
    if not isinstance(item, Assertion):
        raise ValueError(f"instruction {position} is not an assertion")
    return item


def cone_of_influence(flat: FlatProgram, ref: int | AssertionOutcome) -> ConeOfInfluence:
    """Backward slice of the instructions that can affect the asserted qubits.

    ``ref`` is the assertion's position in the instruction stream (or its
    outcome). Source lines cover the call stacks of every included
    instruction and of the assertion itself, the signature lines of the
    definitions those come from, and declarations of every relevant register.
    """
    assertion = _assertion_at(flat, ref)
    relevant = set(assertion.qubits)
    touched = set(relevant)
    included: set[int] = set()
    for item in reversed(flat.instructions[: assertion.index]):
        if not isinstance(item, FlatInstruction) or item.op == "barrier":
            continue
        qubits = set(item.qubits)
        if not qubits & relevant:
            continue
        included.add(item.origin_index)
        if item.op == "reset":
            relevant -= qubits
        else:
            relevant |= qubits
            touched |= qubits

    lines: set[int] = set()
    for span in assertion.call_stack + assertion.definition_spans:
        lines.add(span.line)
    for idx in included:
        instr = flat.instructions[idx]
        lines.update(s.line for s in instr.call_stack + instr.definition_spans)
    for q in touched:
        found = flat.register_of(q)
        if found is not None and found[1].span is not None:
            lines.add(found[1].span.line)
    return ConeOfInfluence(assertion.index, frozenset(included), frozenset(lines), frozenset(touched))


def interaction_graph(instructions: Iterable[FlatInstruction]) -> InteractionGraph:
    graph = InteractionGraph()
    for instr in instructions:
        if instr.op == "barrier":
            continue
        qubits = instr.qubits
        graph.nodes.update(qubits)
        if len(qubits) < 2:
            continue
        for i, a in enumerate(qubits):
            for b in qubits[i + 1:]:
                graph.edges.setdefault(frozenset((a, b)), instr.origin_index)
    return graph


def cone_instructions(flat: FlatProgram, cone: ConeOfInfluence) -> list[FlatInstruction]:
    return [flat.instructions[i] for i in sorted(cone.instruction_indices)]  # type: ignore[misc]


def _names(flat: FlatProgram, qubits: Iterable[int]) -> str:
    return ", ".join(flat.qubit_name(q) for q in qubits)


def analyze_interactions(
    graph: InteractionGraph,
    assertion: Assertion,
    instructions: list[FlatInstruction],
    flat: FlatProgram,
    assertion_ref: int = 0,
) -> list[Diagnostic]:
    """Report asserted qubits that never interact with the others.

    Components are taken over the full graph, so paths through qubits outside
    the assertion count as interaction.
    """
    asserted = list(assertion.qubits)
    groups: list[list[int]] = []
    for q in asserted:
        reach = graph.component(q) if q in graph.nodes else {q}
        for g in groups:
            if g[0] in reach:
                g.append(q)
                break
        else:
            groups.append([q])
    if len(groups) < 2:
        return []
    main = max(groups, key=len)
    outside = tuple(q for q in asserted if q not in main)
    assert assertion.span is not None
    message = (
        f"Qubits are not entangled: {_names(flat, outside)} "
        f"{'does' if len(outside) == 1 else 'do'} not interact with {_names(flat, main)}."
    )
    out = [
        Diagnostic(
            DiagnosticKind.MISSING_INTERACTION, assertion.span, message,
            assertion_ref=assertion_ref, qubits=outside,
        )
    ]
    asserted_set = set(asserted)
    candidate = None
    for instr in instructions:
        hit = set(instr.qubits) & asserted_set
        if len(instr.qubits) >= 2 and hit and hit != asserted_set:
            candidate = instr  # latest in execution order wins
    if candidate is not None:
        line = candidate.line
        out.append(
            Diagnostic(
                DiagnosticKind.MISSING_CONTROL_HYPOTHESIS,
                candidate.span,
                f"Is there a control qubit missing on Line {line}?",
                (RelatedSpan(assertion.span, "failed entanglement assertion"),),
                assertion_ref=assertion_ref,
                qubits=outside,
            )
        )
    return out


def analyze_control_values(
    marks: ControlMarkTable | Mapping[StaticId, tuple[int, ...]],
    cone: ConeOfInfluence,
    flat: FlatProgram,
    assertion_ref: int = 0,
) -> list[Diagnostic]:
    """Report marked controlled instructions that sit inside the cone.

    ``marks`` is a live table or the snapshot stored on an outcome.
    """
    marked = marks.snapshot() if isinstance(marks, ControlMarkTable) else marks
    assertion = _assertion_at(flat, cone.assertion_ref)
    assert assertion.span is not None
    out: list[Diagnostic] = []
    reported: set[SourceSpan] = set()
    for instr in cone_instructions(flat, cone):
        if instr.static_id not in marked or instr.span in reported:
            continue
        reported.add(instr.span)
        zero = marked[instr.static_id]
        line = instr.line
        related = (RelatedSpan(assertion.span, "failed assertion"),)
        out.append(
            Diagnostic(
                DiagnosticKind.CONTROL_ALWAYS_ZERO,
                instr.span,
                f"Control {_names(flat, zero)} of {instr.op} on Line {line} is always zero; "
                "the gate only acts as the identity.",
                related,
                assertion_ref=assertion_ref,
                qubits=zero,
            )
        )
        out.append(
            Diagnostic(
                DiagnosticKind.MISSING_GATE_HYPOTHESIS,
                instr.span,
                f"Are you missing a gate before Line {line}?",
                related,
                assertion_ref=assertion_ref,
            )
        )
    return out


def _basis_changing(instr: FlatInstruction, qubits: set[int]) -> bool:
    spec = BUILTIN_GATES.get(instr.op)
    if spec is None or spec.base in DIAGONAL_BASES:
        return False
    return bool(set(instr.targets) & qubits)


def analyze_superposition_failure(
    outcome: AssertionOutcome, cone: ConeOfInfluence, flat: FlatProgram, assertion_ref: int = 0
) -> list[Diagnostic]:
    """Suggest a missing gate when nothing could have put the qubits in superposition."""
    assertion = outcome.assertion
    if assertion is None or outcome.passed or assertion.kind is not AssertionKind.SUPERPOSITION:
        return []
    if outcome.metrics.get("nonzero_outcomes", 0) != 1:
        return []
    asserted = set(assertion.qubits)
    if any(_basis_changing(instr, asserted) for instr in cone_instructions(flat, cone)):
        return []
    boundary = assertion.call_stack[-1]
    return [
        Diagnostic(
            DiagnosticKind.MISSING_GATE_HYPOTHESIS,
            boundary,
            f"Qubits are not in a superposition. Are you missing a gate before Line {boundary.line}?",
            (RelatedSpan(assertion.span, "failed superposition assertion"),) if assertion.span else (),
            assertion_ref=assertion_ref,
        )
    ]


def _cone_report(cone: ConeOfInfluence, assertion: Assertion, assertion_ref: int) -> Diagnostic:
    assert assertion.span is not None
    file_id = assertion.span.file_id
    related = tuple(
        RelatedSpan(SourceSpan(line, 1, 1, file_id), "in cone of influence")
        for line in sorted(cone.source_lines)
        if line != assertion.span.line
    )
    return Diagnostic(
        DiagnosticKind.CONE_REPORT,
        assertion.span,
        f"{len(cone.source_lines)} line(s) can influence the assertion on Line {assertion.span.line}.",
        related,
        assertion_ref=assertion_ref,
    )


def diagnose(flat: FlatProgram, trace: ExecutionTrace) -> list[Diagnostic]:
    """Run every applicable pass on each failed outcome and merge the results.

    ``assertion_ref`` on each diagnostic is the index of its outcome in
    ``trace.outcomes``. Duplicates by (kind, primary span) keep the earliest
    reference; the list is ordered by line, then kind.
    """
    found: dict[tuple[DiagnosticKind, SourceSpan], Diagnostic] = {}
    for ref, outcome in enumerate(trace.outcomes):
        if outcome.passed or outcome.assertion is None:
            continue
        assertion = outcome.assertion
        cone = cone_of_influence(flat, outcome)
        results = [_cone_report(cone, assertion, ref)]
        if assertion.kind is AssertionKind.ENTANGLEMENT:
            instrs = cone_instructions(flat, cone)
            results += analyze_interactions(interaction_graph(instrs), assertion, instrs, flat, ref)
        if assertion.kind is AssertionKind.SUPERPOSITION:
            results += analyze_superposition_failure(outcome, cone, flat, ref)
        results += analyze_control_values(outcome.marked, cone, flat, ref)
        for diag in results:
            found.setdefault((diag.kind, diag.primary_span), diag)
    return sorted(
        found.values(),
        key=lambda d: (d.primary_span.line, d.kind.rank, d.primary_span.column_start),
    )
