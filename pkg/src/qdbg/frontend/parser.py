"""Lexer and recursive-descent parser for the OpenQASM-2 subset with assertions.

Validation (declare-before-use, arity, register bounds, recursion, assertion
reference vectors) happens while parsing, so a returned Program is always
well formed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from qdbg.errors import (
    ArityError,
    AssertionSpecError,
    DuplicateDeclarationError,
    QasmSyntaxError,
    RecursiveGateError,
    RegisterIndexError,
    UndeclaredIdentifierError,
)
from qdbg.frontend.ast import (
    Assertion,
    AssertionKind,
    AssertStmt,
    Barrier,
    GateCall,
    GateDef,
    Measure,
    Operand,
    Program,
    RegisterDecl,
    RegisterInfo,
    Reset,
    SourceSpan,
    Statement,
)
from qdbg.gates import BUILTIN_GATES

NORM_TOLERANCE = 1e-6

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<assert>assert-(?:ent|sup|eq)(?![A-Za-z0-9_]))
  | (?P<imag>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?i(?![A-Za-z0-9_]))
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<punct>[{}()\[\],;+\-*/])
    """,
    re.VERBOSE,
)

_COMMENT_RE = re.compile(r"//[^\n]*")


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    col: int  # 1-based
    end_col: int  # 1-based, inclusive


def strip_comments(source: str) -> str:
    """Blank out ``//`` comments, keeping columns and line numbers intact."""
    return _COMMENT_RE.sub(lambda m: " " * len(m.group()), source)


def tokenize(source: str, file_id: str = "<input>") -> list[Token]:
    text = strip_comments(source)
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise QasmSyntaxError(
                f"unexpected character {text[pos]!r}", SourceSpan(line, col, col, file_id)
            )
        kind = m.lastgroup
        assert kind is not None
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            col = pos - line_start + 1
            tokens.append(Token(kind, m.group(), line, col, col + len(m.group()) - 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, pos - line_start + 1))
    return tokens


@dataclass
class _GateScope:
    name: str
    formals: tuple[str, ...]


class Parser:
    def __init__(
        self,
        source: str,
        file_id: str = "<input>",
        registers: Mapping[str, RegisterInfo] | None = None,
    ) -> None:
        self.source = source
        self.file_id = file_id
        self.lines = source.split("\n")
        self.tokens = tokenize(source, file_id)
        self.pos = 0
        self.registers: dict[str, RegisterDecl] = {}
        for name, info in (registers or {}).items():
            self.registers[name] = RegisterDecl(info.kind, name, info.width, info.span)
        self.gates: dict[str, GateDef] = {}

    # -- token helpers -------------------------------------------------

    def _peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def _tok_span(self, tok: Token) -> SourceSpan:
        return SourceSpan(tok.line, tok.col, max(tok.col, tok.end_col), self.file_id)

    def _span(self, first: Token, last: Token) -> SourceSpan:
        if last.line == first.line:
            end = last.end_col
        else:
            end = max(first.end_col, len(self.lines[first.line - 1]))
        return SourceSpan(first.line, first.col, end, self.file_id)

    def _error(self, tok: Token, message: str) -> QasmSyntaxError:
        return QasmSyntaxError(message, self._tok_span(tok))

    def _expect(self, text: str) -> Token:
        tok = self._peek()
        if tok.text != text or tok.kind in ("string", "eof"):
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self._error(tok, f"expected {text!r}, found {found}")
        return self._advance()

    def _expect_kind(self, kind: str, what: str) -> Token:
        tok = self._peek()
        if tok.kind != kind:
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self._error(tok, f"expected {what}, found {found}")
        return self._advance()

    def _accept(self, text: str) -> Token | None:
        tok = self._peek()
        if tok.text == text and tok.kind not in ("string", "eof"):
            return self._advance()
        return None

    # -- program -------------------------------------------------------

    def parse_program(self) -> Program:
        statements: list[Statement] = []
        while self._peek().kind != "eof":
            tok = self._peek()
            if tok.kind == "ident" and tok.text == "OPENQASM":
                self._advance()
                self._expect_kind("number", "version number")
                self._expect(";")
            elif tok.kind == "ident" and tok.text == "include":
                self._advance()
                name = self._expect_kind("string", "file name")
                if name.text.strip('"') != "qelib1.inc":
                    raise self._error(name, "include files are not supported")
                self._expect(";")
            elif tok.kind == "ident" and tok.text == "gate":
                gd = self._gate_def()
                self.gates[gd.name] = gd
            elif tok.kind == "ident" and tok.text in ("qreg", "creg"):
                statements.append(self._register_decl())
            else:
                statements.append(self._statement(None))
        return Program(tuple(self.gates.values()), tuple(statements))

    def _register_decl(self) -> RegisterDecl:
        kw = self._advance()
        name = self._expect_kind("ident", "register name")
        self._expect("[")
        size_tok = self._expect_kind("number", "register size")
        self._expect("]")
        end = self._expect(";")
        if not size_tok.text.isdigit() or int(size_tok.text) < 1:
            raise self._error(size_tok, "register size must be a positive integer")
        if name.text in self.registers or name.text in self.gates or name.text in BUILTIN_GATES:
            raise DuplicateDeclarationError(f"{name.text!r} is already declared", self._tok_span(name))
        decl = RegisterDecl(kw.text, name.text, int(size_tok.text), self._span(kw, end))
        self.registers[name.text] = decl
        return decl

    def _gate_def(self) -> GateDef:
        kw = self._advance()
        name = self._expect_kind("ident", "gate name")
        if self._peek().text == "(":
            raise self._error(self._peek(), "gate definitions with angle parameters are not supported")
        if name.text in BUILTIN_GATES or name.text in self.gates or name.text in self.registers:
            raise DuplicateDeclarationError(f"gate {name.text!r} is already declared", self._tok_span(name))
        formals: list[str] = []
        while True:
            ft = self._expect_kind("ident", "qubit parameter")
            if ft.text in formals:
                raise DuplicateDeclarationError(f"duplicate parameter {ft.text!r}", self._tok_span(ft))
            formals.append(ft.text)
            if not self._accept(","):
                break
        brace = self._expect("{")
        scope = _GateScope(name.text, tuple(formals))
        body: list[Statement] = []
        while not self._accept("}"):
            if self._peek().kind == "eof":
                raise self._error(self._peek(), f"unterminated body of gate {name.text!r}")
            body.append(self._statement(scope))
        return GateDef(name.text, tuple(formals), tuple(body), self._span(kw, brace))

    # -- statements ----------------------------------------------------

    def _statement(self, scope: _GateScope | None) -> Statement:
        tok = self._peek()
        if tok.kind == "assert":
            return self._assertion(scope)
        if tok.kind != "ident":
            raise self._error(tok, f"unexpected {tok.text!r}")
        if tok.text in ("measure", "reset") and scope is not None:
            raise self._error(tok, f"{tok.text} is not allowed inside a gate body")
        if tok.text == "measure":
            return self._measure()
        if tok.text == "reset":
            start = self._advance()
            operand = self._operand(scope, "qreg")
            end = self._expect(";")
            return Reset(operand, self._span(start, end))
        if tok.text == "barrier":
            start = self._advance()
            operands = self._operand_list(scope, "qreg")
            end = self._expect(";")
            self._check_broadcast(operands, scope, start)
            return Barrier(tuple(operands), self._span(start, end))
        if tok.text in ("if", "opaque", "gate", "qreg", "creg", "U", "CX"):
            raise self._error(tok, f"{tok.text!r} is not supported here")
        return self._gate_call(scope)

    def _measure(self) -> Measure:
        start = self._advance()
        qubit = self._operand(None, "qreg")
        self._expect_kind("arrow", "'->'")
        target = self._operand(None, "creg")
        end = self._expect(";")
        qw, cw = self._width(qubit, None), self._width(target, None)
        if qw != cw:
            raise ArityError(
                f"cannot measure {qw} qubit(s) into {cw} classical bit(s)", self._span(start, end)
            )
        return Measure(qubit, target, self._span(start, end))

    def _gate_call(self, scope: _GateScope | None) -> GateCall:
        name = self._advance()
        params: list[float] = []
        if self._accept("("):
            if self._peek().text != ")":
                params.append(self._expr())
                while self._accept(","):
                    params.append(self._expr())
            self._expect(")")
        operands = self._operand_list(scope, "qreg")
        end = self._expect(";")
        span = self._span(name, end)

        if name.text in BUILTIN_GATES:
            spec = BUILTIN_GATES[name.text]
            n_params, arity = spec.num_params, spec.arity
        elif name.text in self.gates:
            n_params, arity = 0, len(self.gates[name.text].params)
        elif scope is not None and name.text == scope.name:
            raise RecursiveGateError(f"gate {name.text!r} calls itself", span)
        else:
            raise UndeclaredIdentifierError(f"unknown gate {name.text!r}", self._tok_span(name))
        if len(params) != n_params:
            raise ArityError(f"{name.text} takes {n_params} parameter(s), got {len(params)}", span)
        if len(operands) != arity:
            raise ArityError(f"{name.text} acts on {arity} qubit(s), got {len(operands)}", span)
        self._check_broadcast(operands, scope, name)
        return GateCall(name.text, tuple(operands), tuple(params), span)

    def _assertion(self, scope: _GateScope | None) -> AssertStmt:
        kw = self._advance()
        kind = AssertionKind(kw.text)
        threshold = None
        if kind is AssertionKind.EQUALITY:
            neg = self._accept("-")
            th = self._expect_kind("number", "similarity threshold")
            threshold = -float(th.text) if neg else float(th.text)
            if not 0.0 <= threshold <= 1.0:
                raise AssertionSpecError(f"threshold {threshold} is outside [0, 1]", self._tok_span(th))
            self._expect(",")
        operands = self._operand_list(scope, "qreg")
        reference = None
        if kind is AssertionKind.EQUALITY:
            self._expect("{")
            amps = [self._amplitude()]
            while self._accept(","):
                amps.append(self._amplitude())
            end = self._expect("}")
            end = self._accept(";") or end
            reference = tuple(amps)
        else:
            end = self._expect(";")
        stmt = AssertStmt(kind, tuple(operands), threshold, reference, self._span(kw, end))
        self._validate_assertion(stmt, scope)
        return stmt

    def _validate_assertion(self, stmt: AssertStmt, scope: _GateScope | None) -> None:
        resolved: list[tuple[str, int]] = []
        for op in stmt.operands:
            width = self._width(op, scope)
            if op.index is None and width > 1:
                resolved.extend((op.name, i) for i in range(width))
            else:
                resolved.append((op.name, op.index if op.index is not None else 0))
        if len(set(resolved)) != len(resolved):
            raise AssertionSpecError("assertion operands must be distinct qubits", stmt.span)
        n = len(resolved)
        if stmt.kind is AssertionKind.ENTANGLEMENT and n < 2:
            raise AssertionSpecError("assert-ent needs at least two qubits", stmt.span)
        if stmt.reference is not None:
            if len(stmt.reference) != 2**n:
                raise AssertionSpecError(
                    f"reference has {len(stmt.reference)} amplitudes, expected {2**n} for {n} qubit(s)",
                    stmt.span,
                )
            norm = math.sqrt(sum(abs(a) ** 2 for a in stmt.reference))
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise AssertionSpecError(f"reference vector is not normalized (norm {norm:.9g})", stmt.span)

    # -- operands ------------------------------------------------------

    def _operand_list(self, scope: _GateScope | None, kind: str) -> list[Operand]:
        operands = [self._operand(scope, kind)]
        while self._accept(","):
            operands.append(self._operand(scope, kind))
        return operands

    def _operand(self, scope: _GateScope | None, kind: str) -> Operand:
        name = self._expect_kind("ident", "operand")
        index = None
        last = name
        if self._accept("["):
            idx = self._expect_kind("number", "index")
            last = self._expect("]")
            if not idx.text.isdigit():
                raise self._error(idx, "register index must be a non-negative integer")
            index = int(idx.text)
        operand = Operand(name.text, index, self._span(name, last))
        if scope is not None:
            if name.text not in scope.formals:
                raise UndeclaredIdentifierError(
                    f"{name.text!r} is not a parameter of gate {scope.name!r}", operand.span
                )
            if index is not None:
                raise self._error(name, "gate parameters cannot be indexed")
            return operand
        decl = self.registers.get(name.text)
        if decl is None:
            raise UndeclaredIdentifierError(f"undeclared register {name.text!r}", operand.span)
        if decl.kind != kind:
            expected = "quantum" if kind == "qreg" else "classical"
            raise UndeclaredIdentifierError(f"{name.text!r} is not a {expected} register", operand.span)
        if index is not None and index >= decl.size:
            raise RegisterIndexError(
                f"index {index} is out of range for {name.text}[{decl.size}]", operand.span
            )
        return operand

    def _width(self, op: Operand, scope: _GateScope | None) -> int:
        if scope is not None or op.index is not None:
            return 1
        return self.registers[op.name].size

    def _check_broadcast(self, operands: list[Operand], scope: _GateScope | None, at: Token) -> None:
        widths = {self._width(op, scope) for op in operands} - {1}
        if len(widths) > 1:
            raise ArityError(f"register operands have mismatched sizes {sorted(widths)}", self._tok_span(at))
        width = widths.pop() if widths else 1
        for k in range(width):
            seen = set()
            for op in operands:
                key = (op.name, op.index if op.index is not None else (k if self._width(op, scope) > 1 else 0))
                if key in seen:
                    raise ArityError(f"qubit {op} is used more than once", op.span)
                seen.add(key)

    # -- expressions ---------------------------------------------------

    def _expr(self) -> float:
        value = self._term()
        while self._peek().text in ("+", "-") and self._peek().kind == "punct":
            op = self._advance().text
            rhs = self._term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def _term(self) -> float:
        value = self._factor()
        while self._peek().text in ("*", "/") and self._peek().kind == "punct":
            op = self._advance()
            rhs = self._factor()
            if op.text == "/":
                if rhs == 0:
                    raise self._error(op, "division by zero")
                value /= rhs
            else:
                value *= rhs
        return value

    def _factor(self) -> float:
        tok = self._peek()
        if tok.text in ("-", "+") and tok.kind == "punct":
            self._advance()
            value = self._factor()
            return -value if tok.text == "-" else value
        if tok.kind == "number":
            self._advance()
            return float(tok.text)
        if tok.kind == "ident" and tok.text == "pi":
            self._advance()
            return math.pi
        if tok.text == "(":
            self._advance()
            value = self._expr()
            self._expect(")")
            return value
        raise self._error(tok, f"expected an angle expression, found {tok.text!r}")

    def _amplitude(self) -> complex:
        total = self._signed_term()
        while self._peek().kind == "punct" and self._peek().text in ("+", "-") and (
            self._peek(1).kind in ("number", "imag") or self._peek(1).text == "i"
        ):
            total += self._signed_term()
        return total

    def _signed_term(self) -> complex:
        sign = 1.0
        if self._peek().kind == "punct" and self._peek().text in ("+", "-"):
            sign = -1.0 if self._advance().text == "-" else 1.0
        tok = self._advance()
        if tok.kind == "number":
            return complex(sign * float(tok.text))
        if tok.kind == "imag":
            return complex(0.0, sign * float(tok.text[:-1]))
        if tok.kind == "ident" and tok.text == "i":
            return complex(0.0, sign)
        raise self._error(tok, f"expected an amplitude, found {tok.text!r}")


def parse(source: str, file_id: str = "<input>") -> Program:
    """Parse and validate a program."""
    return Parser(source, file_id).parse_program()


def resolve_qubits(operand: Operand, table: Mapping[str, RegisterInfo]) -> list[int]:
    info = table[operand.name]
    if operand.index is not None:
        return [info.offset + operand.index]
    return list(range(info.offset, info.offset + info.width))


def parse_assertion(text: str, register_table: Mapping[str, RegisterInfo], file_id: str = "<input>") -> Assertion:
    """Parse a single assertion statement and resolve its operands.

    Entries of ``register_table`` with ``kind == "qreg"`` are usable as
    operands; a gate formal can be passed as a width-1 register whose offset
    is the bound qubit.
    """
    parser = Parser(text, file_id, registers=register_table)
    tok = parser._peek()
    if tok.kind != "assert":
        raise parser._error(tok, "statement is not an assertion")
    stmt = parser._assertion(None)
    if parser._peek().kind != "eof":
        raise parser._error(parser._peek(), "unexpected text after assertion")
    return build_assertion(stmt, register_table)


def build_assertion(stmt: AssertStmt, table: Mapping[str, RegisterInfo]) -> Assertion:
    qubits: list[int] = []
    for op in stmt.operands:
        qubits.extend(resolve_qubits(op, table))
    reference = None
    if stmt.reference is not None:
        reference = np.asarray(stmt.reference, dtype=complex)
    return Assertion(
        kind=stmt.kind,
        qubits=tuple(qubits),
        threshold=stmt.threshold,
        reference=reference,
        span=stmt.span,
        call_stack=(stmt.span,) if stmt.span is not None else (),
    )
