import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_rdm, brute_force_state, random_program_source
from qdbg.errors import NumericalError, ResourceLimitError
from qdbg.frontend import FlatInstruction, flatten, parse
from qdbg.gates import base_matrix
from qdbg.sim import (
    ReducedDensityMatrix,
    RngState,
    Statevector,
    apply_gate,
    apply_instruction,
    check_finite,
    fidelity_with_pure,
    init_state,
    is_product_across,
    marginal_probabilities,
    measure,
    probability_one,
    reduced_density_matrix,
)


def simulate(source: str, seed: int = 0) -> Statevector:
    flat = flatten(parse(source))
    state = init_state(flat.num_qubits)
    rng = RngState(seed)
    for instr in flat.gates:
        apply_instruction(state, instr, rng)
    return state


def random_state(rng: np.random.Generator, n: int) -> Statevector:
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return Statevector(amps / np.linalg.norm(amps))


class TestInit:
    def test_ground_state(self):
        state = init_state(3)
        expected = np.zeros(8)
        expected[0] = 1
        np.testing.assert_allclose(state.amplitudes, expected)

    def test_qubit_limit(self):
        with pytest.raises(ResourceLimitError):
            init_state(5, max_qubits=4)

    def test_limit_from_environment(self, monkeypatch):
        monkeypatch.setenv("QDBG_MAX_QUBITS", "2")
        with pytest.raises(ResourceLimitError):
            init_state(3)

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            Statevector(np.ones(3))


class TestGates:
    def test_qubit_zero_is_least_significant(self):
        state = simulate("qreg q[3];\nx q[0];\n")
        assert np.argmax(np.abs(state.amplitudes)) == 1
        state = simulate("qreg q[3];\nx q[2];\n")
        assert np.argmax(np.abs(state.amplitudes)) == 4

    @pytest.mark.parametrize("c, t, expected", [(0, 0, 0), (1, 0, 3), (0, 1, 2), (1, 1, 1)])
    def test_cx_truth_table(self, c, t, expected):
        prep = "".join(f"x q[{q}];\n" for q, bit in ((0, c), (1, t)) if bit)
        state = simulate(f"qreg q[2];\n{prep}cx q[0], q[1];\n")
        # index bit 0 is the control, bit 1 the target
        assert np.argmax(np.abs(state.amplitudes)) == expected

    def test_swap(self):
        state = simulate("qreg q[3];\nx q[0];\nswap q[0], q[2];\n")
        assert np.argmax(np.abs(state.amplitudes)) == 4

    def test_cccz_phase_only_on_all_ones(self):
        state = simulate("qreg q[4];\nh q;\ncccz q[0], q[1], q[2], q[3];\n")
        signs = np.sign(state.amplitudes.real)
        assert signs[15] == -1
        assert np.all(signs[:15] == 1)

    def test_ghz(self):
        state = simulate("qreg q[3];\nh q[0];\ncx q[0], q[1];\ncx q[1], q[2];\n")
        expected = np.zeros(8)
        expected[[0, 7]] = 1 / np.sqrt(2)
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-12)

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 6))
        flat = flatten(parse(random_program_source(rng, n, 20)))
        state = init_state(n)
        for instr in flat.gates:
            apply_instruction(state, instr)
        np.testing.assert_allclose(state.amplitudes, brute_force_state(flat), atol=1e-9)
        assert state.norm() == pytest.approx(1.0, abs=1e-10)

    def test_apply_gate_returns_same_object(self):
        state = init_state(1)
        assert apply_gate(state, base_matrix("h"), (0,)) is state


class TestMeasurement:
    def test_collapse_and_record(self):
        state = simulate("qreg q[2];\nh q[0];\ncx q[0], q[1];\n")
        outcome = measure(state, 0, RngState(3))
        assert probability_one(state, 1) == pytest.approx(outcome)
        assert state.norm() == pytest.approx(1.0)

    def test_seed_determines_outcomes(self):
        source = "qreg q[4];\ncreg c[4];\nh q;\nmeasure q -> c;\n"
        a = simulate(source, seed=11).amplitudes
        b = simulate(source, seed=11).amplitudes
        np.testing.assert_array_equal(a, b)

    def test_born_rule_frequency(self):
        ones = 0
        for seed in range(2000):
            state = simulate("qreg q[1];\nry(2*pi/3) q[0];\n")
            ones += measure(state, 0, RngState(seed))
        # P(1) = sin^2(pi/3) = 0.75
        assert ones / 2000 == pytest.approx(0.75, abs=0.04)

    def test_reset_returns_to_zero(self):
        for seed in range(10):
            state = simulate("qreg q[2];\nh q;\ncx q[0], q[1];\nreset q[0];\n", seed=seed)
            assert probability_one(state, 0) == pytest.approx(0.0, abs=1e-12)

    def test_measure_writes_classical_bit(self):
        flat = flatten(parse("qreg q[1];\ncreg c[1];\nx q[0];\nmeasure q[0] -> c[0];\n"))
        state, bits = init_state(1), [0]
        for instr in flat.gates:
            apply_instruction(state, instr, RngState(0), bits)
        assert bits == [1]

    def test_measure_needs_rng(self):
        instr = FlatInstruction("measure", (0,))
        with pytest.raises(ValueError):
            apply_instruction(init_state(1), instr)


class TestReducedStates:
    @pytest.mark.parametrize("seed", range(10))
    def test_rdm_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        state = random_state(rng, n)
        k = int(rng.integers(1, n + 1))
        qubits = tuple(int(q) for q in rng.choice(n, k, replace=False))
        rdm = reduced_density_matrix(state, qubits)
        np.testing.assert_allclose(rdm.matrix, brute_force_rdm(state.amplitudes, qubits), atol=1e-12)
        np.testing.assert_allclose(
            marginal_probabilities(state, qubits), np.real(np.diag(rdm.matrix)), atol=1e-12
        )

    def test_rdm_trace_and_hermitian(self):
        state = random_state(np.random.default_rng(4), 4)
        rho = reduced_density_matrix(state, (3, 1)).matrix
        assert np.trace(rho) == pytest.approx(1.0)
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(rho)) > -1e-12

    def test_bell_half_is_maximally_mixed(self):
        state = simulate("qreg q[2];\nh q[0];\ncx q[0], q[1];\n")
        np.testing.assert_allclose(reduced_density_matrix(state, (1,)).matrix, np.eye(2) / 2, atol=1e-12)

    def test_subsystem_limit(self):
        with pytest.raises(ResourceLimitError):
            marginal_probabilities(init_state(13), tuple(range(13)))

    def test_duplicate_qubits_rejected(self):
        with pytest.raises(ValueError):
            reduced_density_matrix(init_state(2), (0, 0))


class TestFidelity:
    def test_ghz_reference(self):
        state = simulate("qreg q[3];\nh q[0];\ncx q[0], q[1];\ncx q[1], q[2];\n")
        phi = np.zeros(8)
        phi[[0, 7]] = 1 / np.sqrt(2)
        assert fidelity_with_pure(reduced_density_matrix(state, (0, 1, 2)), phi) == pytest.approx(1.0)

    def test_reference_ordering(self):
        # |q0 q1> = |1 0> is index 1 when q0 is listed first, index 2 when listed second
        state = simulate("qreg q[2];\nx q[0];\n")
        assert fidelity_with_pure(reduced_density_matrix(state, (0, 1)), np.eye(4)[1]) == pytest.approx(1.0)
        assert fidelity_with_pure(reduced_density_matrix(state, (1, 0)), np.eye(4)[2]) == pytest.approx(1.0)

    def test_mixed_subsystem(self):
        state = simulate("qreg q[2];\nh q[0];\ncx q[0], q[1];\n")
        rdm = reduced_density_matrix(state, (0,))
        assert fidelity_with_pure(rdm, np.array([1, 0])) == pytest.approx(0.5)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), phase=st.floats(0, 2 * np.pi))
    def test_global_phase_invariance(self, seed, phase):
        rng = np.random.default_rng(seed)
        rdm = reduced_density_matrix(random_state(rng, 3), (0, 2))
        phi = random_state(rng, 2).amplitudes
        assert fidelity_with_pure(rdm, phi * np.exp(1j * phase)) == pytest.approx(
            fidelity_with_pure(rdm, phi), abs=1e-12
        )

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fidelity_with_pure(ReducedDensityMatrix((0,), np.eye(2) / 2), np.ones(4) / 2)


class TestProductCuts:
    def test_product_state(self):
        state = simulate("qreg q[3];\nry(0.3) q[0];\nrx(1.1) q[1];\nh q[2];\nt q[2];\n")
        rdm = reduced_density_matrix(state, (0, 1, 2))
        for q in range(3):
            rest = tuple(p for p in range(3) if p != q)
            product, deviation = is_product_across(rdm, ((q,), rest))
            assert product and deviation < 1e-12

    def test_bell_pair_is_not_product(self):
        state = simulate("qreg q[2];\nh q[0];\ncx q[0], q[1];\n")
        product, deviation = is_product_across(reduced_density_matrix(state, (0, 1)), ((0,), (1,)))
        assert not product
        assert deviation == pytest.approx(0.5)  # the |00><11| coherence

    def test_partial_entanglement(self):
        # q0,q1 form a Bell pair, q2 is independent
        state = simulate("qreg q[3];\nh q[0];\ncx q[0], q[1];\nh q[2];\n")
        rdm = reduced_density_matrix(state, (2, 0, 1))
        assert is_product_across(rdm, ((2,), (0, 1)))[0]
        assert not is_product_across(rdm, ((0,), (2, 1)))[0]

    @pytest.mark.parametrize("seed", range(5))
    def test_kron_of_random_factors(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_state(rng, 1).amplitudes, random_state(rng, 2).amplitudes
        state = Statevector(np.kron(b, a))  # qubit 0 carries a
        rdm = reduced_density_matrix(state, (1, 0, 2))
        assert is_product_across(rdm, ((0,), (1, 2)))[0]

    def test_bad_cut(self):
        rdm = reduced_density_matrix(init_state(2), (0, 1))
        with pytest.raises(ValueError):
            is_product_across(rdm, ((0,), ()))
        with pytest.raises(ValueError):
            is_product_across(rdm, ((0,), (0,)))


def test_check_finite():
    state = init_state(1)
    state.amplitudes[1] = np.nan
    with pytest.raises(NumericalError):
        check_finite(state)
