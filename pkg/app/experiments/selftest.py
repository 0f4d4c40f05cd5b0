"""
Invariant suite over the simulator, the spectra helpers and the classifier.

Every check is run for 2- and 3-switches, with and without the history register where
that makes sense. Dense operators are only built for registers up to 9 qubits; the
12-qubit 3-switch with history is covered through the permutation pipeline.
"""
from typing import Dict, FrozenSet, List

import numpy as np
import pandas as pd

from app.analysis.spectra import (
    RX_GENERATOR,
    analytic_coefficients,
    two_switch_cross_term,
    two_switch_output,
)
from app.experiments.base.base_experiment import BaseExperiment, ExperimentOutcome
from app.learning import classifier
from app.models.experiment import ExperimentConfig, ExperimentName
from app.models.fourier import OrderMode
from app.models.learning import PARAM_COUNT, ModelKind
from app.models.switch import SwitchLayout
from app.simulation.qcore import PAULI_Z, gate_matrix, random_u3, unitarity_defect
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
    field_probability,
    index_perm,
    initial_amplitudes,
    ordered_product,
    propagate,
    run_switch_batch,
    sector_expectation,
    target_fidelity,
)

ATOL = 1e-10
ORACLE_TOL = 1e-9
BALANCE_BAND = 0.08
DENSE_QUBIT_LIMIT = 9

LAYOUTS = [
    SwitchLayout(n_gates=2, include_history=True),
    SwitchLayout(n_gates=2, include_history=False),
    SwitchLayout(n_gates=3, include_history=True),
    SwitchLayout(n_gates=3, include_history=False),
]


def layout_name(layout: SwitchLayout) -> str:
    return f"N{layout.n_gates}{'_history' if layout.include_history else ''}"


def random_gate_stack(rng: np.random.Generator, batch: int, n_gates: int) -> np.ndarray:
    return np.array([[gate_matrix(random_u3(rng)) for _ in range(n_gates)] for _ in range(batch)])


def random_targets(rng: np.random.Generator, batch: int, dim: int = 2) -> np.ndarray:
    states = rng.normal(size=(batch, dim)) + 1j * rng.normal(size=(batch, dim))
    return states / np.linalg.norm(states, axis=1, keepdims=True)


def basis_vector(dim: int, label: int) -> np.ndarray:
    vector = np.zeros(dim, dtype=complex)
    vector[label] = 1.0
    return vector


class SelfTestExperiment(BaseExperiment):
    """Property checks of the switch pipeline; --inject-fault must make target routing fail."""

    def get_experiment_name(self) -> str:
        return "selftest"

    def get_experiment_description(self) -> str:
        return "Invariant suite: unitarity, faithfulness, round-trip, isolation, oracles, spectra, data"

    def handles(self) -> FrozenSet[ExperimentName]:
        return frozenset({ExperimentName.SELFTEST})

    def execute(self, config: ExperimentConfig) -> ExperimentOutcome:
        self.outcome = ExperimentOutcome()
        self.rows: List[Dict] = []
        self.fault = config.inject_fault
        if self.fault:
            self.logger.warning("🧪 Fault injected: every slot skips its return controlled-SWAP")
        rng = np.random.default_rng(config.seed)

        for layout in LAYOUTS:
            self._unitarity(layout, rng)
            self._dense_agreement(layout, rng)
            self._pipeline(layout, rng, config.n_random_gates)
            self._linearity(layout, rng)
        self._redundancy(rng)
        self._oracles(rng, config.n_draws)
        self._decomposition(rng)
        self._reality(rng, config.n_draws)
        self._balance(config.dataset_seed)

        self.outcome.tables["selftest"] = pd.DataFrame(self.rows)
        self.outcome.metrics["n_checks"] = len(self.rows)
        self.outcome.metrics["n_failed"] = int(sum(not r["passed"] for r in self.rows))
        self.logger.info(f"🧾 {len(self.rows) - self.outcome.metrics['n_failed']}/{len(self.rows)} checks passed")
        return self.outcome

    def _record(self, prop: str, scope: str, deviation: float, tolerance: float) -> None:
        passed = self.outcome.check(f"{prop}_{scope}", deviation, tolerance)
        self.rows.append({"property": prop, "scope": scope, "deviation": float(deviation),
                          "tolerance": tolerance, "passed": passed})

    def _unitarity(self, layout: SwitchLayout, rng: np.random.Generator) -> None:
        name = layout_name(layout)
        operators = {}
        if layout.include_history:
            operators["exunion"] = build_exunion(layout)
        operators["shift"] = build_shift(layout)
        operators["final"] = build_final(layout)
        if layout.n_qubits <= DENSE_QUBIT_LIMIT:
            gates = [random_u3(rng) for _ in range(layout.n_gates)]
            operators.update(u1=build_u1(layout), un=build_un(layout), ufinal=build_ufinal(layout),
                             slot=build_slot(layout, gates, self.fault))
        worst = max(unitarity_defect(m) for m in operators.values())
        self._record("unitarity", name, worst, ATOL)

    def _dense_agreement(self, layout: SwitchLayout, rng: np.random.Generator) -> None:
        """Dense operator product against the index-permutation pipeline."""
        if layout.n_qubits > DENSE_QUBIT_LIMIT:
            return
        gates = [random_u3(rng) for _ in range(layout.n_gates)]
        matrices = np.stack([gate_matrix(g) for g in gates])
        ancilla = random_targets(rng, 1, 2 ** layout.n_alpha)[0]
        psi0 = initial_amplitudes(layout, random_targets(rng, 1)[0], ancilla)

        slot = build_slot(layout, gates, self.fault)
        dense = build_u1(layout) @ psi0
        for k in range(layout.n_gates):
            dense = slot @ dense
            dense = (build_un(layout) if k < layout.n_gates - 1 else build_ufinal(layout)) @ dense
        fast = propagate(layout, psi0, matrices, self.fault)
        self._record("dense_agreement", layout_name(layout), float(np.max(np.abs(dense - fast))), ATOL)

    def _pipeline(self, layout: SwitchLayout, rng: np.random.Generator, n_random: int) -> None:
        """Faithfulness, norm and control round-trip for every basis order."""
        name = layout_name(layout)
        dim_alpha = 2 ** layout.n_alpha
        deficit = norm = control = history = 0.0
        for label in layout.effective_orders:
            order = index_perm(label, layout.n_gates)
            stack = random_gate_stack(rng, n_random, layout.n_gates)
            targets = random_targets(rng, n_random)
            states = run_switch_batch(layout, stack, basis_vector(dim_alpha, label), targets, self.fault)

            expected = np.einsum('bij,bj->bi', np.array([ordered_product(s, order) for s in stack]), targets)
            deficit = max(deficit, float(np.max(1 - target_fidelity(layout, states, label, expected))))
            norm = max(norm, float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1))))
            at_zero = field_probability(layout, states, layout.control_start, layout.n_c, 0)
            control = max(control, float(np.max(1 - at_zero)))
            if layout.include_history:
                marked = field_probability(layout, states, layout.history_start, layout.n_history,
                                           2 ** layout.n_history - 1)
                history = max(history, float(np.max(1 - marked)))
        self._record("faithfulness", name, deficit, ATOL)
        self._record("norm", name, norm, ATOL)
        self._record("control_round_trip", name, control, ATOL)
        if layout.include_history:
            self._record("history_marked", name, history, ATOL)

    def _linearity(self, layout: SwitchLayout, rng: np.random.Generator) -> None:
        dim_alpha = 2 ** layout.n_alpha
        stack = random_gate_stack(rng, 4, layout.n_gates)
        targets = random_targets(rng, 4)
        coefficients = rng.normal(size=layout.n_orders) + 1j * rng.normal(size=layout.n_orders)
        coefficients /= np.linalg.norm(coefficients)
        ancilla = np.zeros(dim_alpha, dtype=complex)
        ancilla[:layout.n_orders] = coefficients

        superposed = run_switch_batch(layout, stack, ancilla, targets, self.fault)
        combined = sum(c * run_switch_batch(layout, stack, basis_vector(dim_alpha, label), targets, self.fault)
                       for label, c in zip(layout.effective_orders, coefficients))
        self._record("superposition_linearity", layout_name(layout), float(np.max(np.abs(superposed - combined))), ATOL)

    def _redundancy(self, rng: np.random.Generator) -> None:
        """An ancilla label in R keeps its label, leaves control at 0, applies A_0 per slot and reads zero on E."""
        for layout in (l for l in LAYOUTS if l.redundant_orders):
            name = layout_name(layout)
            worst = 0.0
            for label in layout.redundant_orders:
                stack = random_gate_stack(rng, 16, layout.n_gates)
                targets = random_targets(rng, 16)
                states = run_switch_batch(layout, stack, basis_vector(2 ** layout.n_alpha, label), targets, self.fault)
                repeated = np.array([np.linalg.matrix_power(s[0], layout.n_gates) for s in stack])
                expected = np.einsum('bij,bj->bi', repeated, targets)
                stayed = field_probability(layout, states, layout.ancilla_start, layout.n_alpha, label)
                control = field_probability(layout, states, layout.control_start, layout.n_c, 0)
                readout = sector_expectation(layout, states, ancilla_operator(layout, coherent=True), PAULI_Z)
                worst = max(worst,
                            float(np.max(1 - target_fidelity(layout, states, label, expected))),
                            float(np.max(1 - stayed)),
                            float(np.max(1 - control)),
                            float(np.max(np.abs(readout))))
            self._record("redundancy_isolation", name, worst, ATOL)

    def _oracles(self, rng: np.random.Generator, n_draws: int) -> None:
        mixture = coherence = scaling = 0.0
        for _ in range(n_draws):
            X = rng.uniform(-1.0, 1.0, size=(32, 2))
            params = rng.uniform(-np.pi, np.pi, size=PARAM_COUNT[ModelKind.CLASSICAL])
            classical = classifier.forward_batch(ModelKind.CLASSICAL, params, X)
            mixture = max(mixture, float(np.max(np.abs(classical - classifier.mixture_oracle(params, X)))))
            quantum = classifier.forward_batch(ModelKind.QUANTUM, params, X)
            coherence = max(coherence, float(np.max(np.abs(quantum - classifier.coherence_oracle(params, X)))))
            scaled = classifier.forward_batch(ModelKind.QUANTUM, params, X,
                                              classifier.build_observable(ModelKind.QUANTUM, scale=3.7))
            scaling = max(scaling, float(np.sum(classifier.classify_batch(scaled) != classifier.classify_batch(quantum))))
        self._record("mixture_oracle", "N3", mixture, ORACLE_TOL)
        self._record("coherence_oracle", "N3", coherence, ORACLE_TOL)
        self._record("label_scaling", "N3", scaling, 0.5)

    def _decomposition(self, rng: np.random.Generator) -> None:
        """Quantum 2-switch output = (f_01 + f_10 + cross) / 4."""
        x = np.linspace(0.0, 2 * np.pi, 33)
        worst = 0.0
        for _ in range(10):
            gate = gate_matrix(random_u3(rng))
            parts = (two_switch_output(x, gate, "fixed_01") + two_switch_output(x, gate, "fixed_10")
                     + two_switch_cross_term(x, gate)) / 4
            worst = max(worst, float(np.max(np.abs(two_switch_output(x, gate, "quantum") - parts))))
        self._record("decomposition_identity", "N2_history", worst, ATOL)

    def _reality(self, rng: np.random.Generator, n_draws: int) -> None:
        worst = 0.0
        for _ in range(n_draws):
            gates = [random_u3(rng) for _ in range(3)]
            for order in all_orders(3):
                series = analytic_coefficients(gates, RX_GENERATOR, PAULI_Z, OrderMode.fixed(order))
                for omega, c in series.terms.items():
                    worst = max(worst, abs(series.coefficient(-omega) - np.conj(c)))
        self._record("fourier_reality", "N3", worst, 1e-9)

    def _balance(self, dataset_seed: int) -> None:
        dataset = classifier.generate_dataset(200, dataset_seed)
        _, y = classifier.dataset_arrays(dataset)
        fraction = float(np.mean(y == 1))
        self.outcome.metrics["positive_fraction"] = fraction
        self._record("class_balance", "n200", abs(fraction - 0.5), BALANCE_BAND)
