"""Bundled example programs and generators for the scaled fixtures.

The checked-in ``dj_16.qasm`` and ``random_12.qasm`` are the output of
:func:`deutsch_jozsa` and :func:`random_circuit` with their default
arguments.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

CORPUS_FILES = (
    "grover_buggy.qasm",
    "grover_fixed.qasm",
    "grover_clean.qasm",
    "bell.qasm",
    "dj_16.qasm",
    "random_12.qasm",
)


def path(name: str):
    return resources.files(__name__).joinpath(name)


def read(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def _fmt_amp(a: complex) -> str:
    re, im = round(a.real, 10), round(a.imag, 10)
    if im == 0:
        return f"{re:.10f}"
    sign = "+" if im >= 0 else "-"
    return f"{re:.10f}{sign}{abs(im):.10f}i"


def deutsch_jozsa(num_inputs: int = 16, seed: int = 7, asserted: int = 3) -> str:
    """Balanced Deutsch-Jozsa with an ancilla register and a final 3-qubit check.

    The oracle is f(x) = b . x for a seeded bitstring ``b`` that is zero on
    the last ``asserted`` inputs, so those inputs end in |0> and the final
    equality assertion holds.
    """
    rng = np.random.default_rng(seed)
    free = num_inputs - asserted
    mask = [i for i in range(free) if rng.random() < 0.5] or [0]
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"qreg q[{num_inputs}];",
        "qreg anc[1];",
        f"creg c[{num_inputs}];",
        "x anc[0];",
        "h anc[0];",
    ]
    lines += [f"h q[{i}];" for i in range(num_inputs)]
    lines += [f"cx q[{i}], anc[0];" for i in mask]
    lines += [f"h q[{i}];" for i in range(num_inputs)]
    checked = ", ".join(f"q[{i}]" for i in range(free, num_inputs))
    ref = ", ".join(["1"] + ["0"] * (2**asserted - 1))
    lines.append(f"assert-eq 0.99, {checked} {{ {ref} }}")
    lines += [f"measure q[{i}] -> c[{i}];" for i in range(num_inputs)]
    return "\n".join(lines) + "\n"


_ONE_QUBIT = ("h", "x", "y", "z", "s", "sdg", "t", "tdg", "rx", "ry", "rz")
_TWO_QUBIT = ("cx", "cz", "swap")
_THREE_QUBIT = ("ccx", "ccz")


def _random_body(num_qubits: int, num_gates: int, rng: np.random.Generator) -> list[str]:
    lines = []
    for _ in range(num_gates):
        r = rng.random()
        if r < 0.55:
            name = _ONE_QUBIT[rng.integers(len(_ONE_QUBIT))]
            qubits = rng.choice(num_qubits, 1, replace=False)
        elif r < 0.9:
            name = _TWO_QUBIT[rng.integers(len(_TWO_QUBIT))]
            qubits = rng.choice(num_qubits, 2, replace=False)
        else:
            name = _THREE_QUBIT[rng.integers(len(_THREE_QUBIT))]
            qubits = rng.choice(num_qubits, 3, replace=False)
        params = f"({rng.uniform(0, 2 * math.pi):.6f})" if name in ("rx", "ry", "rz") else ""
        lines.append(f"{name}{params} {', '.join(f'q[{int(q)}]' for q in qubits)};")
    return lines


def random_circuit(
    num_qubits: int = 12,
    num_gates: int = 400,
    seed: int = 13,
    asserted: tuple[int, ...] = (0, 1, 2),
    margin: float = 0.01,
) -> str:
    """Seeded random circuit ending in an equality assertion that holds.

    The reference is the dominant eigenvector of the asserted qubits'
    reduced state at the end of the circuit; the threshold sits ``margin``
    below the fidelity it achieves, rounded down to three decimals.
    """
    from qdbg.frontend import flatten, parse
    from qdbg.engine import run
    from qdbg.sim import reduced_density_matrix

    rng = np.random.default_rng(seed)
    header = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"qreg q[{num_qubits}];",
        f"creg c[{num_qubits}];",
    ]
    body = _random_body(num_qubits, num_gates, rng)
    state = run(flatten(parse("\n".join(header + body)))).final_state
    rdm = reduced_density_matrix(state, asserted)
    values, vectors = np.linalg.eigh(rdm.matrix)
    phi = vectors[:, int(np.argmax(values))]
    pivot = int(np.argmax(np.abs(phi)))
    phi = phi * (abs(phi[pivot]) / phi[pivot])
    phi = np.round(phi, 10)
    phi = phi / np.linalg.norm(phi)
    fidelity = float(np.real(np.vdot(phi, rdm.matrix @ phi)))
    threshold = math.floor((fidelity - margin) * 1000) / 1000
    checked = ", ".join(f"q[{i}]" for i in asserted)
    amps = ", ".join(_fmt_amp(complex(a)) for a in phi)
    footer = [f"assert-eq {threshold:.3f}, {checked} {{ {amps} }}", "measure q -> c;"]
    return "\n".join(header + body + footer) + "\n"
