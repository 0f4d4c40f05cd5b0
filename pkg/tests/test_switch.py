import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.models.circuit import DensityMatrix, StateVector, custom, rx, rz, u3
from app.models.switch import (
    BasisOrder,
    Mixture,
    Permutation,
    PreparationBlock,
    Superposition,
    SwitchLayout,
)
from app.simulation.qcore import (
    PAULI_Z,
    embed,
    expectation,
    gate_matrix,
    random_state,
    random_u3,
    unitarity_defect,
)
from app.simulation.switch import (
    all_orders,
    ancilla_operator,
    build_exunion,
    build_final,
    build_shift,
    build_slot,
    build_u1,
    build_ufinal,
    build_un,
    control_permutations,
    embedded_observable,
    field_probability,
    index_perm,
    initial_amplitudes,
    ordered_product,
    perm_index,
    run_switch,
    run_switch_batch,
    sector_expectation,
    slot_matrices,
    target_state,
)
from app.utils.error_handlers import ConfigurationError, PermutationRangeError, ValidationError

TWO = SwitchLayout(n_gates=2, include_history=True)
TWO_BARE = SwitchLayout(n_gates=2, include_history=False)
THREE = SwitchLayout(n_gates=3, include_history=False)
THREE_HISTORY = SwitchLayout(n_gates=3, include_history=True)


def target_fidelity_of(layout, final, expected):
    rho = target_state(layout, final).entries
    return float(np.real(np.vdot(expected, rho @ expected)))


class TestPermutationEncoding:
    """Lexicographic ranks of gate orders"""

    def test_three_gate_table(self):
        table = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
        for rank, slots in enumerate(table):
            assert perm_index(Permutation(slots=slots)) == rank
            assert index_perm(rank, 3).slots == slots

    def test_rank_out_of_range(self):
        with pytest.raises(PermutationRangeError):
            index_perm(6, 3)

    def test_range_error_is_value_error(self):
        with pytest.raises(ValueError):
            index_perm(-1, 2)

    def test_not_a_permutation(self):
        with pytest.raises(ValidationError):
            Permutation(slots=(0, 0, 1))

    def test_next_gate_wraps(self):
        order = Permutation.of(1, 2, 0)
        assert order.next_gate(1) == 2
        assert order.next_gate(0) == 1

    def test_inverse(self):
        order = Permutation.of(2, 0, 1)
        assert order.inverse().slots == (1, 2, 0)


class TestSwitchLayout:
    """Qubit allocation"""

    def test_qubit_counts(self):
        assert THREE_HISTORY.n_qubits == 12
        assert THREE.n_qubits == 9
        assert TWO.n_qubits == 7

    def test_three_switch_register_map(self):
        assert THREE.target_qubits == [0]
        assert [THREE.working_qubits(k)[0] for k in range(3)] == [1, 2, 3]
        assert THREE.control_qubits == [4, 5]
        assert THREE.ancilla_qubits == [6, 7, 8]

    def test_effective_and_redundant_sets(self):
        assert THREE.effective_orders == [0, 1, 2, 3, 4, 5]
        assert THREE.redundant_orders == [6, 7]
        assert THREE.effective_controls == [0, 1, 2]
        assert THREE.redundant_controls == [3]
        assert TWO.redundant_orders == []

    def test_too_many_qubits(self):
        with pytest.raises(ConfigurationError):
            SwitchLayout(n_gates=4, include_history=True)

    def test_four_gates_without_history_fit(self):
        assert SwitchLayout(n_gates=4, include_history=False).n_qubits == 12


class TestControlOperators:
    """ExUnion, SHIFT, FINAL and the control unitaries"""

    def test_exunion_requires_history(self):
        with pytest.raises(ConfigurationError):
            build_exunion(THREE)

    def test_exunion_is_an_involution(self):
        exunion = build_exunion(TWO)
        assert_allclose(exunion @ exunion, np.eye(exunion.shape[0]), atol=1e-12)

    def test_exunion_sets_history_bit_of_control(self):
        exunion = build_exunion(TWO)
        # sub-index c + 2 * K: control 1, empty history -> history bit 1 set
        assert exunion[1 + 2 * 0b10, 1] == 1

    def test_shift_advances_to_next_gate(self):
        shift = build_shift(TWO)
        # sub-index c + 2 * alpha; order [0, 1] sends control 0 to 1
        assert shift[1, 0] == 1
        # order [1, 0] sends control 1 to 0
        assert shift[2 + 0, 2 + 1] == 1

    def test_shift_identity_on_redundant_orders(self):
        shift = build_shift(THREE)
        for alpha in THREE.redundant_orders:
            for c in range(4):
                index = c + 4 * alpha
                assert shift[index, index] == 1

    def test_final_returns_last_gate_to_zero(self):
        final = build_final(THREE)
        for alpha in THREE.effective_orders:
            last = index_perm(alpha, 3).gate_at(2)
            assert final[0 + 4 * alpha, last + 4 * alpha] == 1

    def test_u1_writes_first_gate(self):
        u1, _, _ = control_permutations(TWO)
        start = 1 << TWO.ancilla_start  # ancilla |[1, 0]>
        assert u1.images[start] == start | (1 << TWO.control_start)

    def test_u1_identity_on_redundant_ancilla(self):
        u1, un, ufinal = control_permutations(THREE)
        index = 6 << THREE.ancilla_start
        assert u1.images[index] == index
        assert un.images[index] == index
        assert ufinal.images[index] == index

    @pytest.mark.parametrize("layout", [TWO, TWO_BARE, THREE])
    def test_dense_operators_unitary(self, layout):
        rng = np.random.default_rng(11)
        gates = [random_u3(rng) for _ in range(layout.n_gates)]
        for matrix in (build_u1(layout), build_un(layout), build_ufinal(layout), build_shift(layout),
                       build_final(layout), build_slot(layout, gates)):
            assert unitarity_defect(matrix) < 1e-10


class TestSlotOperator:
    """Controlled-SWAP sandwich around the working gates"""

    def test_gate_count_checked(self):
        with pytest.raises(ValidationError):
            slot_matrices(TWO, [rx(0.1)])

    def test_gate_must_fit_target(self):
        with pytest.raises(ValidationError):
            slot_matrices(TWO, [rx(0.1), rx(0.2, target=1)])

    def test_control_routes_target_through_gate(self):
        layout = TWO_BARE
        gates = [rx(0.4), rz(1.3)]
        slot = build_slot(layout, gates)
        target = random_state(1, np.random.default_rng(2)).amplitudes
        for k in range(2):
            ancilla = np.zeros(2, dtype=complex)
            ancilla[0] = 1.0
            psi = initial_amplitudes(layout, target, ancilla)
            # control |k>
            moved = np.zeros_like(psi)
            np.add.at(moved, np.arange(psi.size) | (k << layout.control_start), psi)
            psi = moved
            out = StateVector(n_qubits=layout.n_qubits, amplitudes=slot @ psi)
            expected = gate_matrix(gates[k]) @ target
            assert target_fidelity_of(layout, out, expected) == pytest.approx(1.0, abs=1e-10)


class TestRunSwitch:
    """Full pipeline on the register"""

    def setup_method(self):
        self.rng = np.random.default_rng(2024)

    def test_fixed_order_output_state(self):
        x, theta = 0.8, 1.9
        final = run_switch(TWO, [rx(x), rz(theta)], BasisOrder(order=Permutation.of(0, 1)), StateVector.zero(1))
        expected = gate_matrix(rz(theta)) @ gate_matrix(rx(x))[:, 0]
        assert target_fidelity_of(TWO, final, expected) == pytest.approx(1.0, abs=1e-10)

    def test_identity_gates_leave_target(self):
        identity = custom(np.eye(2), [0])
        target = random_state(1, self.rng)
        prep = Superposition(amplitudes=(np.sqrt(0.5), 1j * np.sqrt(0.5)))
        final = run_switch(TWO, [identity, identity], prep, target)
        assert target_fidelity_of(TWO, final, target.amplitudes) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("layout", [TWO, THREE, THREE_HISTORY])
    def test_permutation_faithfulness(self, layout):
        gates = [random_u3(self.rng) for _ in range(layout.n_gates)]
        matrices = [gate_matrix(g) for g in gates]
        target = random_state(1, self.rng)
        for order in all_orders(layout.n_gates):
            final = run_switch(layout, gates, BasisOrder(order=order), target)
            expected = ordered_product(matrices, order) @ target.amplitudes
            assert target_fidelity_of(layout, final, expected) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("layout", [TWO, THREE_HISTORY])
    def test_control_round_trip(self, layout):
        gates = [random_u3(self.rng) for _ in range(layout.n_gates)]
        for order in all_orders(layout.n_gates):
            final = run_switch(layout, gates, BasisOrder(order=order), StateVector.zero(1))
            assert field_probability(layout, final.amplitudes, layout.control_start, layout.n_c, 0)[0] == \
                pytest.approx(1.0, abs=1e-10)
            marked = field_probability(layout, final.amplitudes, layout.history_start, layout.n_history,
                                       2 ** layout.n_history - 1)
            assert marked[0] == pytest.approx(1.0, abs=1e-10)

    def test_redundant_ancilla_is_isolated(self):
        gates = [random_u3(self.rng) for _ in range(3)]
        target = random_state(1, self.rng)
        ancilla = np.zeros(8, dtype=complex)
        ancilla[6] = 1.0
        matrices = np.stack([gate_matrix(g) for g in gates])
        states = run_switch_batch(THREE, matrices[None], ancilla, target.amplitudes)
        final = StateVector(n_qubits=THREE.n_qubits, amplitudes=states[0])
        expected = np.linalg.matrix_power(matrices[0], 3) @ target.amplitudes
        assert target_fidelity_of(THREE, final, expected) == pytest.approx(1.0, abs=1e-10)
        assert field_probability(THREE, states, THREE.ancilla_start, THREE.n_alpha, 6)[0] == pytest.approx(1.0)
        readout = sector_expectation(THREE, states, ancilla_operator(THREE, coherent=True), PAULI_Z)
        assert abs(readout[0]) < 1e-12

    def test_superposition_is_linear(self):
        gates = [random_u3(self.rng) for _ in range(3)]
        amplitudes = self.rng.normal(size=6) + 1j * self.rng.normal(size=6)
        amplitudes /= np.linalg.norm(amplitudes)
        superposed = run_switch(THREE, gates, Superposition(amplitudes=tuple(amplitudes)), StateVector.zero(1))
        combined = sum(c * run_switch(THREE, gates, BasisOrder(order=index_perm(i, 3)), StateVector.zero(1)).amplitudes
                       for i, c in enumerate(amplitudes))
        assert_allclose(superposed.amplitudes, combined, atol=1e-10)

    def test_mixture_gives_density_matrix(self):
        gates = [rx(0.9), u3(0.4, 1.2, -0.3)]
        mixture = run_switch(TWO, gates, Mixture(probabilities=(0.3, 0.7)), StateVector.zero(1))
        assert isinstance(mixture, DensityMatrix)
        observable = embedded_observable(TWO, ancilla_operator(TWO), PAULI_Z)
        branches = [expectation(run_switch(TWO, gates, BasisOrder(order=index_perm(i, 2)), StateVector.zero(1)),
                                observable) for i in range(2)]
        assert expectation(mixture, observable) == pytest.approx(0.3 * branches[0] + 0.7 * branches[1], abs=1e-10)

    def test_sector_expectation_matches_dense(self):
        gates = [random_u3(self.rng) for _ in range(2)]
        final = run_switch(TWO, gates, Superposition(amplitudes=(0.6, 0.8j)), random_state(1, self.rng))
        ancilla_op = ancilla_operator(TWO, coherent=True)
        dense = expectation(final, embedded_observable(TWO, ancilla_op, PAULI_Z))
        assert sector_expectation(TWO, final.amplitudes, ancilla_op, PAULI_Z) == pytest.approx(dense, abs=1e-10)

    def test_batch_matches_single_runs(self):
        gates = [[random_u3(self.rng) for _ in range(3)] for _ in range(4)]
        matrices = np.array([[gate_matrix(g) for g in row] for row in gates])
        ancilla = np.zeros(8, dtype=complex)
        ancilla[3] = 1.0
        batch = run_switch_batch(THREE, matrices, ancilla)
        for row, amplitudes in zip(gates, batch):
            single = run_switch(THREE, row, BasisOrder(order=index_perm(3, 3)), StateVector.zero(1))
            assert_allclose(amplitudes, single.amplitudes, atol=1e-12)

    def test_dense_pipeline_matches(self):
        gates = [random_u3(self.rng) for _ in range(2)]
        ancilla = np.array([0.6, 0.8], dtype=complex)
        psi = initial_amplitudes(TWO, np.array([1, 0], dtype=complex), ancilla)
        slot = build_slot(TWO, gates)
        dense = build_ufinal(TWO) @ slot @ build_un(TWO) @ slot @ build_u1(TWO) @ psi
        fast = run_switch(TWO, gates, Superposition(amplitudes=(0.6, 0.8)), StateVector.zero(1))
        assert_allclose(dense, fast.amplitudes, atol=1e-12)

    def test_omitted_return_swap_breaks_faithfulness(self):
        gates = [rx(1.1), rz(0.7)]
        order = Permutation.of(0, 1)
        final = run_switch(TWO, gates, BasisOrder(order=order), StateVector.zero(1), omit_return_swap=True)
        expected = gate_matrix(rz(0.7)) @ gate_matrix(rx(1.1))[:, 0]
        assert target_fidelity_of(TWO, final, expected) < 1 - 1e-6


class TestControlPreparation:
    """Order-control preparations"""

    def test_superposition_support_limited_to_orders(self):
        amplitudes = tuple([1 / np.sqrt(7)] * 7)
        with pytest.raises(ValidationError):
            run_switch(THREE, [rx(0.1)] * 3, Superposition(amplitudes=amplitudes), StateVector.zero(1))

    def test_mixture_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            Mixture(probabilities=(0.5, 0.6))

    def test_preparation_block_stays_on_ancilla(self):
        block = PreparationBlock(gates=(rx(0.3, target=0),))
        with pytest.raises(ValidationError):
            run_switch(THREE, [rx(0.1)] * 3, block, StateVector.zero(1))

    def test_embedded_observable_is_hermitian(self):
        observable = embedded_observable(THREE, ancilla_operator(THREE, coherent=True), PAULI_Z)
        assert_allclose(observable, observable.conj().T, atol=1e-12)
        assert observable.shape == (512, 512)

    def test_embed_of_target_operator(self):
        assert_allclose(embedded_observable(TWO_BARE, np.eye(2), PAULI_Z), embed(PAULI_Z, [0], 5), atol=1e-12)
