"""Render a Program back to source text."""

from __future__ import annotations

from qdbg.frontend.ast import (
    AssertionKind,
    AssertStmt,
    Barrier,
    GateCall,
    Measure,
    Program,
    RegisterDecl,
    Reset,
    Statement,
)


def _amp(a: complex) -> str:
    if a.imag == 0:
        return repr(a.real)
    sign = "+" if a.imag >= 0 else "-"
    return f"{a.real!r}{sign}{abs(a.imag)!r}i"


def format_statement(stmt: Statement) -> str:
    if isinstance(stmt, RegisterDecl):
        return f"{stmt.kind} {stmt.name}[{stmt.size}];"
    if isinstance(stmt, GateCall):
        params = f"({', '.join(repr(p) for p in stmt.params)})" if stmt.params else ""
        return f"{stmt.name}{params} {', '.join(map(str, stmt.operands))};"
    if isinstance(stmt, Measure):
        return f"measure {stmt.qubit} -> {stmt.target};"
    if isinstance(stmt, Reset):
        return f"reset {stmt.qubit};"
    if isinstance(stmt, Barrier):
        return f"barrier {', '.join(map(str, stmt.operands))};"
    if isinstance(stmt, AssertStmt):
        operands = ", ".join(map(str, stmt.operands))
        if stmt.kind is AssertionKind.EQUALITY:
            assert stmt.reference is not None
            ref = ", ".join(_amp(a) for a in stmt.reference)
            return f"assert-eq {stmt.threshold!r}, {operands} {{ {ref} }}"
        return f"{stmt.kind.keyword} {operands};"
    raise TypeError(f"unknown statement {stmt!r}")


def format_program(program: Program) -> str:
    out: list[str] = []
    for gd in program.gate_defs:
        out.append(f"gate {gd.name} {', '.join(gd.params)} {{")
        out.extend(f"    {format_statement(s)}" for s in gd.body)
        out.append("}")
        out.append("")
    out.extend(format_statement(s) for s in program.statements)
    return "\n".join(out) + "\n"
