from typing import Dict, FrozenSet, List

import numpy as np
import pandas as pd

from app.analysis.spectra import (
    RX_GENERATOR,
    SwitchModel,
    analytic_coefficients,
    dft_coefficients,
    order_controls,
    ordered_model,
    predicted_spectrum,
)
from app.experiments.base.base_experiment import BaseExperiment, ExperimentOutcome
from app.learning import classifier
from app.models.experiment import ExperimentConfig, ExperimentName
from app.models.fourier import OrderMode
from app.models.learning import PARAM_COUNT, ModelKind
from app.simulation.qcore import PAULI_X, PAULI_Y, PAULI_Z, random_u3
from app.simulation.switch import all_orders
from app.utils.error_handlers import SpectrumMismatchError

SUPPORT_THRESHOLD = 1e-8
BEYOND_TOL = 1e-9
ANALYTIC_TOL = 1e-9
SINGLE_LAYER = [-1.0, 0.0, 1.0]


def _random_observable(rng: np.random.Generator) -> np.ndarray:
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    return direction[0] * PAULI_X + direction[1] * PAULI_Y + direction[2] * PAULI_Z


def _in_x2(fn, x1: float):
    """Restrict a classifier forward pass to a function of x2 at fixed x1."""
    return lambda x: fn(np.column_stack([np.full(np.size(x), x1), np.asarray(x, dtype=float)]))


class FourierExperiment(BaseExperiment):
    """
    Frequency supports of switch-controlled models. Changing the order control changes
    the coefficients; the support stays inside the eigenvalue differences of the encoding.
    """

    def get_experiment_name(self) -> str:
        return "fourier"

    def get_experiment_description(self) -> str:
        return "Spectrum invariance across order controls and analytic vs sampled coefficients"

    def handles(self) -> FrozenSet[ExperimentName]:
        return frozenset({ExperimentName.FOURIER_SCAN})

    def execute(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        rng = np.random.default_rng(config.seed)
        coefficient_rows: List[pd.DataFrame] = []
        support_rows: List[Dict] = []

        spectrum = predicted_spectrum(RX_GENERATOR)
        outcome.metrics["predicted_spectrum"] = spectrum

        self._invariance(config, rng, outcome, coefficient_rows, support_rows)
        self._analytic(config, rng, outcome, coefficient_rows)
        self._classifier_support(rng, outcome, support_rows, spectrum)
        self._reuploading(rng, outcome, coefficient_rows, support_rows)

        outcome.tables["coefficients"] = pd.concat(coefficient_rows, ignore_index=True)
        outcome.tables["supports"] = pd.DataFrame(support_rows)
        return outcome

    def _invariance(self, config, rng, outcome, coefficient_rows, support_rows) -> None:
        """Random single-encoding 3-switches: every control must give support {-1, 0, 1}."""
        worst_beyond = 0.0
        mismatched = 0
        for draw in range(config.n_draws):
            model = SwitchModel.random(rng)
            supports = {}
            for name, control in order_controls(model.layout, rng).items():
                fn = model.function(control)
                series = dft_coefficients(fn, 2)
                worst_beyond = max(worst_beyond, series.max_abs_beyond(1))
                supports[name] = series.support(SUPPORT_THRESHOLD)
                support_rows.append({"source": "random_switch", "draw": draw, "control": name,
                                     "support": " ".join(f"{w:g}" for w in supports[name])})
                if draw == 0:
                    frame = series.to_frame()
                    frame.insert(0, "control", name)
                    frame.insert(0, "source", "random_switch")
                    coefficient_rows.append(frame)
            if any(s != SINGLE_LAYER for s in supports.values()):
                mismatched += 1
                self.logger.warning(f"⚠️ Draw {draw}: supports differ {supports}")
        outcome.metrics["invariance_draws"] = config.n_draws
        outcome.metrics["invariance_mismatched_draws"] = mismatched
        outcome.check("beyond_band", worst_beyond, BEYOND_TOL)
        outcome.require("spectrum_invariance", mismatched == 0,
                        f"{mismatched} of {config.n_draws} draws changed the support")
        self.logger.info(f"📈 Spectrum invariance: {config.n_draws - mismatched}/{config.n_draws} draws share {SINGLE_LAYER}")

    def _analytic(self, config, rng, outcome, coefficient_rows) -> None:
        """Eigenbasis coefficients of fixed orders against the sampled series."""
        worst = 0.0
        orders = all_orders(3)
        for draw in range(config.n_draws):
            gates = [random_u3(rng) for _ in range(3)]
            obs = _random_observable(rng)
            for order in orders:
                analytic = analytic_coefficients(gates, RX_GENERATOR, obs, OrderMode.fixed(order))
                sampled = dft_coefficients(ordered_model(gates, RX_GENERATOR, obs, order), 1)
                deviation = max(abs(analytic.coefficient(w) - sampled.coefficient(w)) for w in SINGLE_LAYER)
                worst = max(worst, deviation)
                if draw == 0:
                    frame = analytic.to_frame()
                    frame.insert(0, "control", f"analytic_{''.join(map(str, order.slots))}")
                    frame.insert(0, "source", "analytic")
                    coefficient_rows.append(frame)
            # cross(pi, pi) is the fixed-order series
            same = analytic_coefficients(gates, RX_GENERATOR, obs, OrderMode.cross(orders[0], orders[0]))
            reference = analytic_coefficients(gates, RX_GENERATOR, obs, OrderMode.fixed(orders[0]))
            worst = max(worst, max(abs(same.coefficient(w) - reference.coefficient(w)) for w in SINGLE_LAYER))
        outcome.check("analytic_vs_dft", worst, ANALYTIC_TOL)

    def _classifier_support(self, rng, outcome, support_rows, spectrum) -> None:
        """Each classifier mode, read as a function of x2, stays inside the predicted spectrum."""
        allowed = set(spectrum)
        for mode in (ModelKind.FIXED, ModelKind.CLASSICAL, ModelKind.QUANTUM):
            params = rng.uniform(0.0, np.pi, size=PARAM_COUNT[mode])
            x1 = float(rng.uniform(-1.0, 1.0))
            fn = _in_x2(lambda X, m=mode, p=params: classifier.forward_batch(m, p, X), x1)
            support = dft_coefficients(fn, 2).support(SUPPORT_THRESHOLD)
            support_rows.append({"source": "classifier", "draw": 0, "control": mode.value,
                                 "support": " ".join(f"{w:g}" for w in support)})
            outcome.require(f"classifier_{mode.value}_support", set(support) <= allowed,
                            f"support {support} outside {sorted(allowed)}")

    def _reuploading(self, rng, outcome, coefficient_rows, support_rows) -> None:
        """Two encoding layers double the band: support within +-2, and K = 1 no longer suffices."""
        params = rng.uniform(0.0, np.pi, size=PARAM_COUNT[ModelKind.REUPLOAD])
        x1 = float(rng.uniform(-1.0, 1.0))
        fn = _in_x2(lambda X: classifier.re_uploading_batch(params, X), x1)

        series = dft_coefficients(fn, 3)
        support = series.support(SUPPORT_THRESHOLD)
        outcome.check("reupload_beyond_two", series.max_abs_beyond(2), BEYOND_TOL)
        outcome.require("reupload_reaches_two", max(abs(w) for w in support) == 2.0,
                        f"support {support} does not reach +-2")
        support_rows.append({"source": "reuploading", "draw": 0, "control": "two_layer",
                             "support": " ".join(f"{w:g}" for w in support)})
        frame = series.to_frame()
        frame.insert(0, "control", "two_layer")
        frame.insert(0, "source", "reuploading")
        coefficient_rows.append(frame)

        try:
            dft_coefficients(fn, 1)
            truncated = False
        except SpectrumMismatchError:
            truncated = True
        outcome.require("reupload_exceeds_single_band", truncated,
                        "a K = 1 series reproduced the two-layer model")
