"""Builtin gate catalog.

Every builtin is a base gate (1 or 2 target qubits) plus zero or more
controls. Operand order in source is controls first, then targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin, sqrt

import numpy as np


@dataclass(frozen=True)
class GateSpec:
    name: str
    base: str
    num_controls: int
    num_targets: int
    num_params: int = 0

    @property
    def arity(self) -> int:
        return self.num_controls + self.num_targets


_SPECS = [
    GateSpec("x", "x", 0, 1),
    GateSpec("y", "y", 0, 1),
    GateSpec("z", "z", 0, 1),
    GateSpec("h", "h", 0, 1),
    GateSpec("s", "s", 0, 1),
    GateSpec("sdg", "sdg", 0, 1),
    GateSpec("t", "t", 0, 1),
    GateSpec("tdg", "tdg", 0, 1),
    GateSpec("rx", "rx", 0, 1, 1),
    GateSpec("ry", "ry", 0, 1, 1),
    GateSpec("rz", "rz", 0, 1, 1),
    GateSpec("cx", "x", 1, 1),
    GateSpec("cz", "z", 1, 1),
    GateSpec("swap", "swap", 0, 2),
    GateSpec("ccx", "x", 2, 1),
    GateSpec("ccz", "z", 2, 1),
    GateSpec("cccx", "x", 3, 1),
    GateSpec("cccz", "z", 3, 1),
]

BUILTIN_GATES: dict[str, GateSpec] = {spec.name: spec for spec in _SPECS}

# Bases whose matrix is diagonal in the computational basis.
DIAGONAL_BASES = frozenset({"z", "s", "sdg", "t", "tdg", "rz"})

_R2 = 1 / sqrt(2)
_FIXED = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "h": np.array([[_R2, _R2], [_R2, -_R2]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "tdg": np.array([[1, 0], [0, np.exp(-1j * np.pi / 4)]], dtype=complex),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def base_matrix(base: str, params: tuple[float, ...] = ()) -> np.ndarray:
    """Unitary of a base gate. Two-target matrices index the first target as the high bit."""
    if base in _FIXED:
        return _FIXED[base]
    (theta,) = params
    c, s = cos(theta / 2), sin(theta / 2)
    if base == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if base == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if base == "rz":
        return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=complex)
    raise KeyError(base)


def is_diagonal(op: str) -> bool:
    spec = BUILTIN_GATES.get(op)
    return spec is not None and spec.base in DIAGONAL_BASES
