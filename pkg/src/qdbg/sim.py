"""Dense statevector simulation and the subsystem linear algebra built on it.

Basis ordering: qubit 0 is the least significant bit of a basis index. The
same convention applies inside reduced density matrices and reference
vectors, where the first listed qubit is the least significant bit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from qdbg.errors import NumericalError, ResourceLimitError
from qdbg.frontend.ast import FlatInstruction
from qdbg.gates import BUILTIN_GATES, base_matrix

DEFAULT_MAX_QUBITS = 24
MAX_SUBSYSTEM_QUBITS = 12
NORM_TOLERANCE = 1e-10
PRODUCT_TOLERANCE = 1e-6


def default_max_qubits() -> int:
    value = os.environ.get("QDBG_MAX_QUBITS")
    return int(value) if value else DEFAULT_MAX_QUBITS


class Statevector:
    """Amplitudes of an n-qubit pure state, mutated in place by gates."""

    def __init__(self, amplitudes: np.ndarray) -> None:
        amplitudes = np.asarray(amplitudes, dtype=complex)
        n = int(amplitudes.size).bit_length() - 1
        if amplitudes.ndim != 1 or amplitudes.size != 1 << n:
            raise ValueError("amplitude vector length must be a power of two")
        self.num_qubits = n
        self.amplitudes = amplitudes

    def copy(self) -> Statevector:
        return Statevector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """View with one axis per qubit; axis ``n - 1 - q`` belongs to qubit ``q``."""
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def __repr__(self) -> str:
        return f"Statevector(num_qubits={self.num_qubits})"


@dataclass
class RngState:
    """Seeded source of measurement randomness; ``counter`` counts draws."""

    seed: int = 0
    counter: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._gen = np.random.default_rng(self.seed)

    def uniform(self) -> float:
        self.counter += 1
        return float(self._gen.random())


@dataclass(frozen=True)
class ReducedDensityMatrix:
    qubits: tuple[int, ...]
    matrix: np.ndarray


def init_state(num_qubits: int, max_qubits: int | None = None) -> Statevector:
    limit = default_max_qubits() if max_qubits is None else max_qubits
    if num_qubits < 1:
        raise ValueError("a state needs at least one qubit")
    if num_qubits > limit:
        raise ResourceLimitError(
            f"{num_qubits} qubits exceed the simulation limit of {limit} (raise --max-qubits to allow more)"
        )
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[0] = 1.0
    return Statevector(amps)


def apply_gate(
    state: Statevector,
    matrix: np.ndarray,
    targets: tuple[int, ...],
    controls: tuple[int, ...] = (),
) -> Statevector:
    """Apply ``matrix`` to ``targets`` on the subspace where every control is 1."""
    n = state.num_qubits
    psi = state.tensor()
    index: list[int | slice] = [slice(None)] * n
    for c in controls:
        index[n - 1 - c] = 1
    sub = psi[tuple(index)]
    # axes left in ``sub`` after dropping control axes
    remaining = [ax for ax in range(n) if ax not in {n - 1 - c for c in controls}]
    t_axes = [remaining.index(n - 1 - t) for t in targets]
    k = len(targets)
    gate = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(gate, sub, axes=(list(range(k, 2 * k)), t_axes))
    out = np.moveaxis(out, list(range(k)), t_axes)
    psi[tuple(index)] = out
    return state


def probability_one(state: Statevector, qubit: int) -> float:
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    view = state.amplitudes.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
    return float(np.sum(np.abs(view[:, 1, :]) ** 2))


def measure(state: Statevector, qubit: int, rng: RngState) -> int:
    """Born-rule measurement that collapses ``state`` in place."""
    p1 = probability_one(state, qubit)
    outcome = 1 if rng.uniform() < p1 else 0
    n = state.num_qubits
    view = state.amplitudes.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
    view[:, 1 - outcome, :] = 0.0
    p = p1 if outcome else 1.0 - p1
    state.amplitudes /= np.sqrt(p)
    return outcome


def apply_instruction(
    state: Statevector,
    instr: FlatInstruction,
    rng: RngState | None = None,
    clbits: list[int] | None = None,
) -> Statevector:
    n = state.num_qubits
    for q in instr.qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")
    if instr.op == "barrier":
        return state
    if instr.op in ("measure", "reset"):
        if rng is None:
            raise ValueError(f"{instr.op} needs a random number source")
        (q,) = instr.targets
        outcome = measure(state, q, rng)
        if instr.op == "measure" and clbits is not None:
            for c in instr.classical_targets:
                clbits[c] = outcome
        if instr.op == "reset" and outcome == 1:
            apply_gate(state, base_matrix("x"), (q,))
        return state
    spec = BUILTIN_GATES[instr.op]
    return apply_gate(state, base_matrix(spec.base, instr.params), instr.targets, instr.controls)


def check_finite(state: Statevector) -> None:
    if not np.all(np.isfinite(state.amplitudes)):
        raise NumericalError("state vector contains non-finite amplitudes")


def _subsystem_matrix(state: Statevector, qubits: tuple[int, ...]) -> np.ndarray:
    """Reshape amplitudes to (2**k, rest) with ``qubits[0]`` as the lowest row bit."""
    n = state.num_qubits
    row_axes = [n - 1 - q for q in reversed(qubits)]
    rest = [ax for ax in range(n) if ax not in row_axes]
    k = len(qubits)
    return state.tensor().transpose(row_axes + rest).reshape(1 << k, -1)


def _check_subset(state: Statevector, qubits: tuple[int, ...]) -> None:
    if len(set(qubits)) != len(qubits):
        raise ValueError("qubits must be distinct")
    if len(qubits) > MAX_SUBSYSTEM_QUBITS:
        raise ResourceLimitError(
            f"subsystem of {len(qubits)} qubits exceeds the limit of {MAX_SUBSYSTEM_QUBITS}"
        )
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range for {state.num_qubits} qubits")


def marginal_probabilities(state: Statevector, qubits: tuple[int, ...]) -> np.ndarray:
    """Diagonal of the reduced density matrix, without building the matrix."""
    qubits = tuple(qubits)
    _check_subset(state, qubits)
    m = _subsystem_matrix(state, qubits)
    return np.sum(np.abs(m) ** 2, axis=1)


def reduced_density_matrix(state: Statevector, qubits: tuple[int, ...]) -> ReducedDensityMatrix:
    qubits = tuple(qubits)
    _check_subset(state, qubits)
    m = _subsystem_matrix(state, qubits)
    return ReducedDensityMatrix(qubits, m @ m.conj().T)


def fidelity_with_pure(rdm: ReducedDensityMatrix, reference: np.ndarray) -> float:
    """Overlap <phi|rho|phi> of a subsystem with a pure reference state."""
    phi = np.asarray(reference, dtype=complex)
    if phi.shape != (rdm.matrix.shape[0],):
        raise ValueError(
            f"reference has {phi.size} amplitudes, subsystem dimension is {rdm.matrix.shape[0]}"
        )
    value = float(np.real(np.vdot(phi, rdm.matrix @ phi)))
    return min(max(value, 0.0), 1.0)


def _permute(rho: np.ndarray, order: list[int]) -> np.ndarray:
    """Reorder qubit positions of a density matrix; new position p holds old ``order[p]``."""
    k = len(order)
    tensor = rho.reshape((2,) * (2 * k))
    axes = [k - 1 - order[k - 1 - j] for j in range(k)]
    return tensor.transpose(axes + [a + k for a in axes]).reshape(1 << k, 1 << k)


def is_product_across(
    rdm: ReducedDensityMatrix, cut: tuple[tuple[int, ...], tuple[int, ...]]
) -> tuple[bool, float]:
    """Whether ``rdm`` factorizes as rho_A (x) rho_B across ``cut = (A, B)``.

    Returns the verdict and the largest absolute entry of rho - rho_A (x) rho_B.
    """
    part_a, part_b = tuple(cut[0]), tuple(cut[1])
    if not part_a or not part_b:
        raise ValueError("both sides of a cut must be non-empty")
    if sorted(part_a + part_b) != sorted(rdm.qubits) or len(set(part_a + part_b)) != len(rdm.qubits):
        raise ValueError("cut must partition the subsystem qubits")
    pos = {q: i for i, q in enumerate(rdm.qubits)}
    order = [pos[q] for q in part_a + part_b]
    rho = _permute(rdm.matrix, order)
    da, db = 1 << len(part_a), 1 << len(part_b)
    t = rho.reshape(db, da, db, da)
    rho_a = np.einsum("iaib->ab", t)
    rho_b = np.einsum("aibi->ab", t)
    deviation = float(np.max(np.abs(rho - np.kron(rho_b, rho_a))))
    return deviation < PRODUCT_TOLERANCE, deviation
