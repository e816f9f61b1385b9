"""Execute a flat program, evaluating assertions against the live state.

Failed assertions never abort execution. Alongside the outcomes the engine
tracks, per controlled source instruction, whether a control qubit has been
certainly zero at every execution so far.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from qdbg.frontend.ast import Assertion, AssertionKind, FlatInstruction, FlatProgram, StaticId
from qdbg.sim import (
    MAX_SUBSYSTEM_QUBITS,
    RngState,
    Statevector,
    apply_instruction,
    check_finite,
    fidelity_with_pure,
    init_state,
    is_product_across,
    marginal_probabilities,
    probability_one,
    reduced_density_matrix,
)
from qdbg.errors import ResourceLimitError

EPS_SUPERPOSITION = 1e-9
EPS_ZERO_CONTROL = 1e-8


@dataclass(frozen=True)
class AssertionOutcome:
    """Result of one executed assertion.

    ``occurrence`` counts executions of the same source assertion (1-based);
    ``position`` is the assertion's index in the flat instruction stream and
    ``marked`` maps each controlled instruction flagged when it ran to its
    zero-valued controls.
    """

    assertion: Assertion | None
    passed: bool
    occurrence: int = 1
    metrics: dict[str, Any] = field(default_factory=dict)
    position: int = -1
    marked: dict[StaticId, tuple[int, ...]] = field(default_factory=dict)

    @property
    def kind(self) -> AssertionKind | None:
        return self.assertion.kind if self.assertion is not None else None


@dataclass
class MarkRecord:
    marked: bool
    zero_controls: tuple[int, ...]
    first_marked_occurrence: int
    cleared: bool = False


@dataclass
class ControlMarkTable:
    """Mark records keyed by the static id of a controlled source instruction."""

    records: dict[StaticId, MarkRecord] = field(default_factory=dict)
    executions: Counter = field(default_factory=Counter)

    def snapshot(self) -> dict[StaticId, tuple[int, ...]]:
        return {k: rec.zero_controls for k, rec in self.records.items() if rec.marked}

    def is_marked(self, instr: FlatInstruction) -> bool:
        rec = self.records.get(instr.static_id)
        return rec is not None and rec.marked


@dataclass
class ExecutionTrace:
    outcomes: list[AssertionOutcome]
    marks: ControlMarkTable
    classical_bits: list[int]
    final_state: Statevector

    @property
    def failed(self) -> list[AssertionOutcome]:
        return [o for o in self.outcomes if not o.passed]


def _basis_string(index: int, width: int) -> str:
    return format(index, f"0{width}b")


def check_superposition(state: Statevector, qubits: tuple[int, ...]) -> AssertionOutcome:
    probs = marginal_probabilities(state, tuple(qubits))
    count = int(np.count_nonzero(probs > EPS_SUPERPOSITION))
    metrics: dict[str, Any] = {"nonzero_outcomes": count}
    passed = count >= 2
    if not passed:
        metrics["dominant"] = _basis_string(int(np.argmax(probs)), len(qubits))
    return AssertionOutcome(None, passed, metrics=metrics)


def check_entanglement(state: Statevector, qubits: tuple[int, ...]) -> AssertionOutcome:
    """Pass iff no single-qubit cut of the asserted set factorizes."""
    qubits = tuple(qubits)
    if len(qubits) < 2:
        raise ValueError("an entanglement check needs at least two qubits")
    rdm = reduced_density_matrix(state, qubits)
    product_cuts = []
    for q in qubits:
        rest = tuple(p for p in qubits if p != q)
        is_product, deviation = is_product_across(rdm, ((q,), rest))
        if is_product:
            product_cuts.append({"qubit": q, "deviation": deviation})
    return AssertionOutcome(None, not product_cuts, metrics={"product_cuts": product_cuts})


def check_equality(
    state: Statevector, qubits: tuple[int, ...], reference: np.ndarray, threshold: float
) -> AssertionOutcome:
    rdm = reduced_density_matrix(state, tuple(qubits))
    fidelity = fidelity_with_pure(rdm, reference)
    return AssertionOutcome(
        None, fidelity >= threshold, metrics={"fidelity": fidelity, "threshold": threshold}
    )


def evaluate(state: Statevector, assertion: Assertion) -> AssertionOutcome:
    if assertion.kind is AssertionKind.SUPERPOSITION:
        outcome = check_superposition(state, assertion.qubits)
    elif assertion.kind is AssertionKind.ENTANGLEMENT:
        outcome = check_entanglement(state, assertion.qubits)
    else:
        assert assertion.reference is not None and assertion.threshold is not None
        outcome = check_equality(state, assertion.qubits, assertion.reference, assertion.threshold)
    return replace(outcome, assertion=assertion, position=assertion.index)


def update_control_marks(
    table: ControlMarkTable, instr: FlatInstruction, state: Statevector
) -> ControlMarkTable:
    """Record whether ``instr`` is about to run with a control that is certainly 0.

    Must be called before the instruction is applied. A cleared mark is
    never set again.
    """
    if not instr.controls:
        raise ValueError("instruction has no controls")
    key = instr.static_id
    table.executions[key] += 1
    zero = tuple(c for c in instr.controls if probability_one(state, c) <= EPS_ZERO_CONTROL)
    rec = table.records.get(key)
    if zero:
        if rec is None:
            table.records[key] = MarkRecord(True, zero, table.executions[key])
        elif not rec.cleared:
            rec.zero_controls = zero
    elif rec is None:
        table.records[key] = MarkRecord(False, (), 0, cleared=True)
    else:
        rec.marked = False
        rec.cleared = True
    return table


def run(flat: FlatProgram, seed: int = 0, max_qubits: int | None = None) -> ExecutionTrace:
    """Simulate ``flat`` from |0...0>, evaluating assertions in place."""
    if flat.num_qubits == 0:
        state = Statevector(np.ones(1, dtype=complex))
    else:
        state = init_state(flat.num_qubits, max_qubits)
    rng = RngState(seed)
    clbits = [0] * flat.num_clbits
    marks = ControlMarkTable()
    seen: Counter = Counter()
    outcomes: list[AssertionOutcome] = []
    for item in flat.instructions:
        if isinstance(item, Assertion):
            if len(item.qubits) > MAX_SUBSYSTEM_QUBITS:
                raise ResourceLimitError(
                    f"assertion on line {item.line} covers {len(item.qubits)} qubits; "
                    f"the limit is {MAX_SUBSYSTEM_QUBITS}"
                )
            check_finite(state)
            seen[item.static_id] += 1
            outcome = evaluate(state, item)
            outcomes.append(
                replace(outcome, occurrence=seen[item.static_id], marked=marks.snapshot())
            )
            continue
        if item.controls:
            update_control_marks(marks, item, state)
        apply_instruction(state, item, rng, clbits)
    check_finite(state)
    return ExecutionTrace(outcomes, marks, clbits, state)
