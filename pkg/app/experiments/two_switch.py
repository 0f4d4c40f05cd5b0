import itertools
from typing import FrozenSet

import numpy as np
import pandas as pd

from app.analysis.spectra import (
    TWO_SWITCH_LAYOUT,
    closed_form,
    two_switch_cross_term,
    two_switch_output,
)
from app.experiments.base.base_experiment import BaseExperiment, ExperimentOutcome
from app.models.circuit import StateVector, rx, rz, u3
from app.models.experiment import ExperimentConfig, ExperimentName
from app.models.switch import Mixture
from app.simulation.qcore import PAULI_Z, expectation, gate_matrix
from app.simulation.switch import ancilla_operator, embedded_observable, run_switch

TOLERANCE = 1e-8
# 2-switch controls checked against each closed form on the U grid
_U_CASES = (
    ("fixed_u_first", "fixed_01"),
    ("fixed_u_second", "fixed_10"),
    ("quantum_2switch_u", "quantum"),
)


class TwoSwitchExperiment(BaseExperiment):
    """Simulated 2-switch outputs against their closed forms, for R_Z and general U gates."""

    def get_experiment_name(self) -> str:
        return "two-switch"

    def get_experiment_description(self) -> str:
        return "Fixed, classical and quantum 2-switch outputs against closed-form expressions"

    def handles(self) -> FrozenSet[ExperimentName]:
        return frozenset({ExperimentName.TWO_SWITCH_FORMS})

    def execute(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        self._rz_forms(config, outcome)
        self._classical_density(outcome)
        self._u_forms(config, outcome)
        deviations = pd.DataFrame([
            {"case": key[:-len("_max_deviation")], "max_abs_deviation": value}
            for key, value in outcome.metrics.items() if key.endswith("_max_deviation")
        ])
        outcome.tables["deviations"] = deviations
        return outcome

    def _rz_forms(self, config: ExperimentConfig, outcome: ExperimentOutcome) -> None:
        x = np.linspace(0.0, 2 * np.pi, config.x_points)
        thetas = np.linspace(0.0, 2 * np.pi, config.theta_points)
        worst = {"fixed_01": 0.0, "fixed_10": 0.0, "classical": 0.0, "quantum": 0.0}
        rows = []
        for theta in thetas:
            gate = gate_matrix(rz(float(theta)))
            outputs = {control: two_switch_output(x, gate, control) for control in worst}
            expected = {
                "fixed_01": closed_form("fixed_rz", theta=theta)(x),
                "fixed_10": closed_form("fixed_rz", theta=theta)(x),
                "classical": closed_form("classical_rz", theta=theta)(x),
                "quantum": closed_form("quantum_2switch_rz", theta=theta)(x),
            }
            for control in worst:
                worst[control] = max(worst[control], float(np.max(np.abs(outputs[control] - expected[control]))))
            rows.append(pd.DataFrame({"theta": theta, "x": x, **{c: outputs[c] for c in worst}}))
        for control, deviation in worst.items():
            outcome.check(f"rz_{control}", deviation, TOLERANCE)
        outcome.tables["rz_outputs"] = pd.concat(rows, ignore_index=True)
        self.logger.info(f"📐 R_Z forms: {', '.join(f'{k}={v:.1e}' for k, v in worst.items())}")

    def _classical_density(self, outcome: ExperimentOutcome) -> None:
        """Classical control through the density-matrix path on a coarse grid."""
        layout = TWO_SWITCH_LAYOUT
        observable = embedded_observable(layout, ancilla_operator(layout), PAULI_Z)
        mixture = Mixture(probabilities=(0.5, 0.5))
        worst = 0.0
        for x, theta in itertools.product(np.linspace(0.0, 2 * np.pi, 7), np.linspace(0.0, 2 * np.pi, 5)):
            rho = run_switch(layout, [rx(float(x)), rz(float(theta))], mixture, StateVector.zero(1))
            worst = max(worst, abs(expectation(rho, observable) - np.cos(x)))
        outcome.check("rz_classical_density", worst, TOLERANCE)

    def _u_forms(self, config: ExperimentConfig, outcome: ExperimentOutcome) -> None:
        x = np.linspace(0.0, 2 * np.pi, config.grid_points)
        axis = np.linspace(0.0, 2 * np.pi, config.grid_points)
        worst = {name: 0.0 for name, _ in _U_CASES}
        worst["interference_u"] = 0.0
        printed = 0.0
        for theta, phi, lam in itertools.product(axis, axis, axis):
            params = {"theta": float(theta), "phi": float(phi), "lam": float(lam)}
            gate = gate_matrix(u3(*params.values()))
            for name, control in _U_CASES:
                deviation = np.abs(two_switch_output(x, gate, control) - closed_form(name, **params)(x))
                worst[name] = max(worst[name], float(np.max(deviation)))
            cross = two_switch_cross_term(x, gate)
            worst["interference_u"] = max(worst["interference_u"],
                                          float(np.max(np.abs(cross - closed_form("interference_u", **params)(x)))))
            fixed_10 = two_switch_output(x, gate, "fixed_10")
            printed = max(printed, float(np.max(np.abs(fixed_10 - closed_form("fixed_u_second_printed", **params)(x)))))
        for name, deviation in worst.items():
            outcome.check(name, deviation, TOLERANCE)
        # Reported only: the printed R_X U form differs from the simulator by the sign of its sin x term
        outcome.metrics["fixed_u_second_printed_deviation"] = printed
