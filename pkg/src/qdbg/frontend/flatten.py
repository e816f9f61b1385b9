"""Inline custom gates and expand register broadcasts into a linear stream."""

from __future__ import annotations

from dataclasses import replace

from qdbg.frontend.ast import (
    Assertion,
    AssertStmt,
    Barrier,
    FlatInstruction,
    FlatItem,
    FlatProgram,
    GateCall,
    GateDef,
    Measure,
    Program,
    RegisterDecl,
    RegisterInfo,
    Reset,
    SourceSpan,
    Statement,
)
from qdbg.frontend.parser import build_assertion, resolve_qubits
from qdbg.gates import BUILTIN_GATES


def register_table(program: Program) -> dict[str, RegisterInfo]:
    table: dict[str, RegisterInfo] = {}
    offsets = {"qreg": 0, "creg": 0}
    for stmt in program.statements:
        if isinstance(stmt, RegisterDecl):
            table[stmt.name] = RegisterInfo(stmt.kind, offsets[stmt.kind], stmt.size, stmt.span)
            offsets[stmt.kind] += stmt.size
    return table


class _Flattener:
    def __init__(self, program: Program) -> None:
        self.program = program
        self.gates = {gd.name: gd for gd in program.gate_defs}
        self.items: list[FlatItem] = []

    def emit(self, item: FlatItem) -> None:
        if isinstance(item, FlatInstruction):
            item = replace(item, origin_index=len(self.items))
        else:
            item = replace(item, index=len(self.items))
        self.items.append(item)

    def statement(
        self,
        stmt: Statement,
        table: dict[str, RegisterInfo],
        stack: tuple[SourceSpan, ...],
        defs: tuple[SourceSpan, ...],
        owner: str,
        stmt_index: int,
        calls: tuple[tuple[str, int], ...] = (),
    ) -> None:
        assert stmt.span is not None
        call_stack = (stmt.span,) + stack
        if isinstance(stmt, RegisterDecl):
            return
        if isinstance(stmt, AssertStmt):
            base = build_assertion(stmt, table)
            self.emit(
                replace(base, call_stack=call_stack, definition_spans=defs, static_id=(owner, stmt_index, 0))
            )
            return
        if isinstance(stmt, Measure):
            qubits = resolve_qubits(stmt.qubit, table)
            clbits = resolve_qubits(stmt.target, table)
            for k, (q, c) in enumerate(zip(qubits, clbits)):
                self.emit(
                    FlatInstruction(
                        "measure", (q,), classical_targets=(c,), call_stack=call_stack,
                        definition_spans=defs, static_id=(owner, stmt_index, k), call_ids=calls,
                    )
                )
            return
        if isinstance(stmt, Reset):
            for k, q in enumerate(resolve_qubits(stmt.qubit, table)):
                self.emit(
                    FlatInstruction(
                        "reset", (q,), call_stack=call_stack, definition_spans=defs,
                        static_id=(owner, stmt_index, k), call_ids=calls,
                    )
                )
            return
        if isinstance(stmt, Barrier):
            qubits: list[int] = []
            for op in stmt.operands:
                qubits.extend(q for q in resolve_qubits(op, table) if q not in qubits)
            self.emit(
                FlatInstruction(
                    "barrier", tuple(qubits), call_stack=call_stack, definition_spans=defs,
                    static_id=(owner, stmt_index, 0), call_ids=calls,
                )
            )
            return
        assert isinstance(stmt, GateCall)
        for k, qubits in enumerate(_broadcast([resolve_qubits(op, table) for op in stmt.operands])):
            if stmt.name in BUILTIN_GATES:
                spec = BUILTIN_GATES[stmt.name]
                self.emit(
                    FlatInstruction(
                        stmt.name,
                        targets=tuple(qubits[spec.num_controls:]),
                        controls=tuple(qubits[: spec.num_controls]),
                        params=stmt.params,
                        call_stack=call_stack,
                        definition_spans=defs,
                        static_id=(owner, stmt_index, k),
                        call_ids=calls,
                    )
                )
            else:
                self.inline(self.gates[stmt.name], qubits, call_stack, defs, ((owner, stmt_index),) + calls)

    def inline(
        self,
        gd: GateDef,
        qubits: list[int],
        stack: tuple[SourceSpan, ...],
        defs: tuple[SourceSpan, ...],
        calls: tuple[tuple[str, int], ...],
    ) -> None:
        assert gd.span is not None
        table = {name: RegisterInfo("qreg", q, 1) for name, q in zip(gd.params, qubits)}
        for i, stmt in enumerate(gd.body):
            self.statement(stmt, table, stack, (gd.span,) + defs, gd.name, i, calls)


def _broadcast(groups: list[list[int]]) -> list[list[int]]:
    width = max((len(g) for g in groups), default=1)
    return [[g[0] if len(g) == 1 else g[k] for g in groups] for k in range(width)]


def flatten(program: Program) -> FlatProgram:
    """Inline every custom gate call and expand broadcasts.

    Each emitted item records the chain of source spans it came from
    (innermost first) and a static id shared by all inlined copies of the
    same source statement.
    """
    table = register_table(program)
    flattener = _Flattener(program)
    for i, stmt in enumerate(program.statements):
        flattener.statement(stmt, table, (), (), "", i)
    num_qubits = sum(info.width for info in table.values() if info.kind == "qreg")
    num_clbits = sum(info.width for info in table.values() if info.kind == "creg")
    return FlatProgram(num_qubits, num_clbits, tuple(flattener.items), table)
