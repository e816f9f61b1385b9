from qdbg.frontend.ast import (
    Assertion,
    AssertionKind,
    FlatInstruction,
    FlatProgram,
    GateDef,
    Program,
    RegisterInfo,
    SourceSpan,
)
from qdbg.frontend.flatten import flatten, register_table
from qdbg.frontend.parser import parse, parse_assertion
from qdbg.frontend.printer import format_program

__all__ = [
    "Assertion",
    "AssertionKind",
    "FlatInstruction",
    "FlatProgram",
    "GateDef",
    "Program",
    "RegisterInfo",
    "SourceSpan",
    "flatten",
    "format_program",
    "parse",
    "parse_assertion",
    "register_table",
]
