"""Shared fixtures plus an independent brute-force reference simulator.

The reference builds the full 2^n x 2^n unitary of every gate by walking
basis states bit by bit, so it shares no code with the tensor simulator.
"""

from __future__ import annotations

import cmath
import math
from pathlib import Path

import numpy as np
import pytest

from qdbg import corpus
from qdbg.frontend import FlatInstruction, FlatProgram, flatten, parse

_R2 = 1 / math.sqrt(2)


_CONTROLLED_BASE = {"cx": "x", "ccx": "x", "cccx": "x", "cz": "z", "ccz": "z", "cccz": "z"}
_ARITY = {"cx": 2, "cz": 2, "swap": 2, "ccx": 3, "ccz": 3, "cccx": 4, "cccz": 4}


def oracle_matrix(op: str, params: tuple[float, ...]) -> np.ndarray:
    """Single-target base unitaries, written out independently of the package."""
    base = _CONTROLLED_BASE.get(op, op)
    table = {
        "x": [[0, 1], [1, 0]],
        "y": [[0, -1j], [1j, 0]],
        "z": [[1, 0], [0, -1]],
        "h": [[_R2, _R2], [_R2, -_R2]],
        "s": [[1, 0], [0, 1j]],
        "sdg": [[1, 0], [0, -1j]],
        "t": [[1, 0], [0, cmath.exp(1j * math.pi / 4)]],
        "tdg": [[1, 0], [0, cmath.exp(-1j * math.pi / 4)]],
    }
    if base in table:
        return np.array(table[base], dtype=complex)
    (theta,) = params
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if base == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if base == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if base == "rz":
        return np.diag([cmath.exp(-1j * theta / 2), cmath.exp(1j * theta / 2)])
    raise KeyError(op)


def full_unitary(instr: FlatInstruction, n: int) -> np.ndarray:
    dim = 2**n
    u = np.zeros((dim, dim), dtype=complex)
    if instr.op == "swap":
        a, b = instr.targets
        for i in range(dim):
            ba, bb = (i >> a) & 1, (i >> b) & 1
            j = i & ~(1 << a) & ~(1 << b) | (bb << a) | (ba << b)
            u[j, i] = 1
        return u
    (t,) = instr.targets
    m = oracle_matrix(instr.op, instr.params)
    for i in range(dim):
        if not all((i >> c) & 1 for c in instr.controls):
            u[i, i] = 1
            continue
        bit = (i >> t) & 1
        for out in (0, 1):
            j = (i & ~(1 << t)) | (out << t)
            u[j, i] += m[out, bit]
    return u


def brute_force_state(flat: FlatProgram) -> np.ndarray:
    """Final state of a unitary-only program by dense matrix products."""
    n = flat.num_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for item in flat.gates:
        if item.op == "barrier":
            continue
        if item.op in ("measure", "reset"):
            raise ValueError("reference simulator handles unitary programs only")
        psi = full_unitary(item, n) @ psi
    return psi


def brute_force_rdm(psi: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    """Reduced density matrix with qubits[0] as the least significant index bit."""
    n = int(psi.size).bit_length() - 1
    k = len(qubits)
    rho = np.zeros((2**k, 2**k), dtype=complex)
    rest = [q for q in range(n) if q not in qubits]
    for i in range(psi.size):
        for j in range(psi.size):
            # the traced-out bits must agree
            if any(((i >> q) & 1) != ((j >> q) & 1) for q in rest):
                continue
            a = sum(((i >> q) & 1) << pos for pos, q in enumerate(qubits))
            b = sum(((j >> q) & 1) << pos for pos, q in enumerate(qubits))
            rho[a, b] += psi[i] * np.conj(psi[j])
    return rho


class UnionFind:
    """Path-halving disjoint sets, the reference for graph connectivity."""

    def __init__(self):
        self.parent: dict[int, int] = {}

    def find(self, x: int) -> int:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        self.parent[self.find(a)] = self.find(b)


_ONE = ("h", "x", "y", "z", "s", "sdg", "t", "tdg", "rx", "ry", "rz")
_TWO = ("cx", "cz", "swap")
_THREE = ("ccx", "ccz")
_FOUR = ("cccx", "cccz")


def random_program_source(
    rng: np.random.Generator, num_qubits: int, num_gates: int, asserted: tuple[int, ...] | None = None
) -> str:
    """Random unitary program over one register, optionally ending in an assertion."""
    lines = ["OPENQASM 2.0;", f"qreg q[{num_qubits}];"]
    for _ in range(num_gates):
        pools = [_ONE] + [p for p, k in ((_TWO, 2), (_THREE, 3), (_FOUR, 4)) if num_qubits >= k]
        pool = pools[int(rng.integers(len(pools)))]
        name = pool[int(rng.integers(len(pool)))]
        arity = _ARITY.get(name, 1)
        qubits = rng.choice(num_qubits, arity, replace=False)
        params = f"({rng.uniform(-math.pi, math.pi):.6f})" if name in ("rx", "ry", "rz") else ""
        lines.append(f"{name}{params} {', '.join(f'q[{int(q)}]' for q in qubits)};")
    if asserted is not None:
        lines.append(f"assert-sup {', '.join(f'q[{q}]' for q in asserted)};")
    return "\n".join(lines) + "\n"


def load_corpus(name: str) -> FlatProgram:
    return flatten(parse(corpus.read(name), file_id=name))


@pytest.fixture
def buggy_flat() -> FlatProgram:
    return load_corpus("grover_buggy.qasm")


@pytest.fixture
def fixed_flat() -> FlatProgram:
    return load_corpus("grover_fixed.qasm")


@pytest.fixture
def corpus_path():
    def _path(name: str) -> Path:
        return Path(str(corpus.path(name)))

    return _path


# lines appended by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
