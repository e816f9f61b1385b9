"""Syntax tree and flattened-program types.

Source spans are excluded from equality on every statement node, so two
programs compare equal when they are structurally identical regardless of
where their text lives.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np


@dataclass(frozen=True, order=True)
class SourceSpan:
    """1-based line and inclusive 1-based column range."""

    line: int
    column_start: int
    column_end: int
    file_id: str = "<input>"

    def __post_init__(self) -> None:
        if self.line < 1:
            raise ValueError(f"line must be >= 1, got {self.line}")
        if self.column_start > self.column_end:
            raise ValueError("column_start must not exceed column_end")


class AssertionKind(enum.Enum):
    ENTANGLEMENT = "assert-ent"
    SUPERPOSITION = "assert-sup"
    EQUALITY = "assert-eq"

    @property
    def keyword(self) -> str:
        return self.value


@dataclass(frozen=True)
class Operand:
    """``name`` or ``name[index]``."""

    name: str
    index: int | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return self.name if self.index is None else f"{self.name}[{self.index}]"


@dataclass(frozen=True)
class RegisterDecl:
    kind: str  # "qreg" or "creg"
    name: str
    size: int
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class GateCall:
    """Application of a builtin gate or a call of a custom gate."""

    name: str
    operands: tuple[Operand, ...]
    params: tuple[float, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Measure:
    qubit: Operand
    target: Operand
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Reset:
    qubit: Operand
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Barrier:
    operands: tuple[Operand, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AssertStmt:
    kind: AssertionKind
    operands: tuple[Operand, ...]
    threshold: float | None = None
    reference: tuple[complex, ...] | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


Statement = Union[RegisterDecl, GateCall, Measure, Reset, Barrier, AssertStmt]


@dataclass(frozen=True)
class GateDef:
    name: str
    params: tuple[str, ...]
    body: tuple[Statement, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    gate_defs: tuple[GateDef, ...] = ()
    statements: tuple[Statement, ...] = ()

    def gate(self, name: str) -> GateDef | None:
        for gd in self.gate_defs:
            if gd.name == name:
                return gd
        return None


@dataclass(frozen=True)
class RegisterInfo:
    kind: str
    offset: int
    width: int
    span: SourceSpan | None = None


# (definition name or "" for top level, statement index, broadcast index).
# Identical for every inlined copy of the same source statement.
StaticId = tuple[str, int, int]


@dataclass(frozen=True)
class Assertion:
    """An assertion with qubit operands resolved to global indices.

    Inside a flat program ``call_stack`` lists the assertion statement span
    followed by the call sites it was inlined through (innermost first), and
    ``index`` is its position in the instruction stream.
    """

    kind: AssertionKind
    qubits: tuple[int, ...]
    threshold: float | None = None
    reference: np.ndarray | None = field(default=None, compare=False, repr=False)
    span: SourceSpan | None = field(default=None, compare=False)
    call_stack: tuple[SourceSpan, ...] = field(default=(), compare=False, repr=False)
    definition_spans: tuple[SourceSpan, ...] = field(default=(), compare=False, repr=False)
    static_id: StaticId = ("", -1, 0)
    index: int = -1

    @property
    def line(self) -> int:
        return self.span.line if self.span is not None else 0


@dataclass(frozen=True)
class FlatInstruction:
    op: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    classical_targets: tuple[int, ...] = ()
    call_stack: tuple[SourceSpan, ...] = field(default=(), compare=False, repr=False)
    definition_spans: tuple[SourceSpan, ...] = field(default=(), compare=False, repr=False)
    static_id: StaticId = ("", -1, 0)
    origin_index: int = -1
    # (owner, statement index) of each enclosing custom-gate call, innermost first
    call_ids: tuple[tuple[str, int], ...] = field(default=(), compare=False, repr=False)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    @property
    def span(self) -> SourceSpan:
        return self.call_stack[0]

    @property
    def line(self) -> int:
        return self.call_stack[0].line


FlatItem = Union[FlatInstruction, Assertion]


@dataclass(frozen=True)
class FlatProgram:
    num_qubits: int
    num_clbits: int
    instructions: tuple[FlatItem, ...]
    register_table: dict[str, RegisterInfo] = field(default_factory=dict, compare=False)

    @property
    def gates(self) -> list[FlatInstruction]:
        return [it for it in self.instructions if isinstance(it, FlatInstruction)]

    @property
    def assertions(self) -> list[Assertion]:
        return [it for it in self.instructions if isinstance(it, Assertion)]

    def register_of(self, qubit: int) -> tuple[str, RegisterInfo] | None:
        for name, info in self.register_table.items():
            if info.kind == "qreg" and info.offset <= qubit < info.offset + info.width:
                return name, info
        return None

    def qubit_name(self, qubit: int) -> str:
        found = self.register_of(qubit)
        if found is None:
            return f"q{qubit}"
        name, info = found
        return f"{name}[{qubit - info.offset}]"
