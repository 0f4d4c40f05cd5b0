import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.analysis.spectra import (
    RX_GENERATOR,
    SwitchModel,
    analytic_coefficients,
    closed_form,
    dft_coefficients,
    ordered_model,
    order_controls,
    predicted_spectrum,
    support_table,
    two_switch_cross_term,
    two_switch_output,
)
from app.models.circuit import EncodingGenerator, rz, u3
from app.models.fourier import FourierSeries, ModelFunction, OrderMode
from app.simulation.qcore import PAULI_Z, gate_matrix, random_u3
from app.simulation.switch import all_orders
from app.utils.error_handlers import SpectrumMismatchError, ValidationError

X_GRID = np.linspace(-np.pi, np.pi, 13)


class TestSpectrumPrediction:
    """Eigenvalue differences of the encoding generator"""

    def test_rx_generator(self):
        assert predicted_spectrum(RX_GENERATOR) == pytest.approx([-1.0, 0.0, 1.0])

    def test_zero_generator(self):
        assert predicted_spectrum(EncodingGenerator.from_hermitian(np.zeros((2, 2)))) == [0.0]

    def test_non_hermitian_generator(self):
        with pytest.raises(ValidationError):
            EncodingGenerator.from_hermitian(np.array([[0, 1], [0, 0]]))


class TestDFT:
    """Band-limited coefficient extraction"""

    def test_cosine(self):
        series = dft_coefficients(np.cos, 1)
        assert series.coefficient(1) == pytest.approx(0.5)
        assert series.coefficient(-1) == pytest.approx(0.5)
        assert abs(series.coefficient(0)) < 1e-12

    def test_quantum_rz_closed_form_at_pi(self):
        series = dft_coefficients(closed_form("quantum_2switch_rz", theta=np.pi), 1)
        assert series.coefficient(0) == pytest.approx(0.5)
        assert series.coefficient(1) == pytest.approx(0.25)
        assert series.coefficient(-1) == pytest.approx(0.25)

    def test_higher_frequency_detected(self):
        with pytest.raises(SpectrumMismatchError):
            dft_coefficients(lambda x: np.cos(2 * x), 1)

    def test_negative_band_limit(self):
        with pytest.raises(ValidationError):
            dft_coefficients(np.cos, -1)

    def test_reconstruction(self):
        f = lambda x: 0.3 + np.sin(x) - 0.2 * np.cos(2 * x)
        series = dft_coefficients(f, 2)
        assert_allclose(series.evaluate(X_GRID), f(X_GRID), atol=1e-12)
        assert series.support() == [-2.0, -1.0, 0.0, 1.0, 2.0]
        assert series.max_abs_beyond(2) == 0.0

    def test_series_reality_enforced(self):
        with pytest.raises(ValidationError):
            FourierSeries(terms={1.0: 0.5j, -1.0: 0.5j})

    def test_complex_series_allowed_when_declared(self):
        series = FourierSeries(terms={1.0: 0.5j, -1.0: 0.5j}, real_valued=False)
        assert series.evaluate(0.0) == pytest.approx(1j)


class TestAnalyticCoefficients:
    """Coefficients by direct products against the sampled model"""

    def setup_method(self):
        rng = np.random.default_rng(17)
        self.gates = [random_u3(rng) for _ in range(3)]

    def test_fixed_orders_match_dft(self):
        for order in all_orders(3):
            analytic = analytic_coefficients(self.gates, RX_GENERATOR, PAULI_Z, OrderMode.fixed(order))
            sampled = dft_coefficients(ordered_model(self.gates, RX_GENERATOR, PAULI_Z, order), 1)
            for omega in (-1.0, 0.0, 1.0):
                assert analytic.coefficient(omega) == pytest.approx(sampled.coefficient(omega), abs=1e-9)

    def test_cross_of_same_order_is_fixed(self):
        order = all_orders(3)[4]
        fixed = analytic_coefficients(self.gates, RX_GENERATOR, PAULI_Z, OrderMode.fixed(order))
        cross = analytic_coefficients(self.gates, RX_GENERATOR, PAULI_Z, OrderMode.cross(order, order))
        for omega in fixed.frequencies():
            assert cross.coefficient(omega) == pytest.approx(fixed.coefficient(omega), abs=1e-12)

    def test_cross_needs_bra(self):
        with pytest.raises(ValidationError):
            OrderMode(kind="cross", order=all_orders(3)[0])

    def test_order_size_checked(self):
        with pytest.raises(ValidationError):
            analytic_coefficients(self.gates[:2], RX_GENERATOR, PAULI_Z, OrderMode.fixed(all_orders(3)[0]))

    def test_observable_shape_checked(self):
        with pytest.raises(ValidationError):
            analytic_coefficients(self.gates, RX_GENERATOR, np.eye(4), OrderMode.fixed(all_orders(3)[0]))


class TestClosedForms:
    """Two-gate outputs from the simulator against their closed forms"""

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            closed_form("fixed_ry", theta=0.1)

    def test_parameter_names_checked(self):
        with pytest.raises(ValidationError):
            closed_form("fixed_u_first", theta=0.1, phi=0.2)

    def test_bound_enforced(self):
        f = ModelFunction(lambda x: 2 * np.cos(x), "too large", bound=1.0)
        with pytest.raises(ValidationError):
            f(np.zeros(3))

    @pytest.mark.parametrize("theta", [0.0, 0.9, np.pi / 2, 2.4])
    def test_rz_forms(self, theta):
        gate = gate_matrix(rz(theta))
        for control, kind in (("fixed_01", "fixed_rz"), ("fixed_10", "fixed_rz"),
                              ("classical", "classical_rz"), ("quantum", "quantum_2switch_rz")):
            assert_allclose(two_switch_output(X_GRID, gate, control), closed_form(kind, theta=theta)(X_GRID),
                            atol=1e-10)

    def test_classical_rz_independent_of_theta(self):
        outputs = [two_switch_output(X_GRID, gate_matrix(rz(theta)), "classical") for theta in (0.1, 1.7, 3.0)]
        assert_allclose(outputs[0], outputs[1], atol=1e-12)
        assert_allclose(outputs[0], outputs[2], atol=1e-12)

    @pytest.mark.parametrize("params", [(0.4, 1.1, -0.7), (2.2, -0.3, 0.9), (1.0, np.pi / 2, np.pi / 3)])
    def test_u_forms(self, params):
        theta, phi, lam = params
        gate = gate_matrix(u3(theta, phi, lam))
        kw = dict(theta=theta, phi=phi, lam=lam)
        assert_allclose(two_switch_output(X_GRID, gate, "fixed_01"), closed_form("fixed_u_first", **kw)(X_GRID),
                        atol=1e-10)
        assert_allclose(two_switch_output(X_GRID, gate, "fixed_10"), closed_form("fixed_u_second", **kw)(X_GRID),
                        atol=1e-10)
        assert_allclose(two_switch_cross_term(X_GRID, gate), closed_form("interference_u", **kw)(X_GRID), atol=1e-10)
        assert_allclose(two_switch_output(X_GRID, gate, "quantum"),
                        closed_form("quantum_2switch_u", **kw)(X_GRID), atol=1e-10)

    def test_quantum_output_decomposes(self):
        gate = gate_matrix(u3(0.8, 0.3, 1.9))
        combined = (two_switch_output(X_GRID, gate, "fixed_01") + two_switch_output(X_GRID, gate, "fixed_10")
                    + two_switch_cross_term(X_GRID, gate)) / 4
        assert_allclose(two_switch_output(X_GRID, gate, "quantum"), combined, atol=1e-12)

    def test_printed_variant_differs(self):
        kw = dict(theta=0.7, phi=1.2, lam=0.1)
        gap = closed_form("fixed_u_second", **kw)(X_GRID) - closed_form("fixed_u_second_printed", **kw)(X_GRID)
        assert np.max(np.abs(gap)) > 0.1

    def test_unknown_control(self):
        with pytest.raises(ValidationError):
            two_switch_output(X_GRID, np.eye(2), "indefinite")


class TestOrderControlSpectra:
    """Order control never widens the frequency spectrum"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_spectrum_invariance(self, seed):
        rng = np.random.default_rng(seed)
        model = SwitchModel.random(rng)
        functions = {name: model.function(control) for name, control in order_controls(model.layout, rng).items()}
        assert set(functions) == {"fixed_012", "fixed_021", "fixed_102", "fixed_120", "fixed_201", "fixed_210",
                                  "classical", "quantum"}
        for fn in functions.values():
            assert dft_coefficients(fn, 2).max_abs_beyond(1) < 1e-9
        for support in support_table(functions, 1).values():
            assert set(support) <= {-1.0, 0.0, 1.0}

    def test_two_gate_model(self):
        rng = np.random.default_rng(5)
        model = SwitchModel.random(rng, n_gates=2)
        for control in order_controls(model.layout, rng).values():
            assert dft_coefficients(model.function(control), 3).max_abs_beyond(1) < 1e-9

    def test_variational_count_checked(self):
        rng = np.random.default_rng(0)
        model = SwitchModel.random(rng)
        with pytest.raises(ValidationError):
            SwitchModel(model.layout, model.variational[:1], model.target_in, model.target_op)
