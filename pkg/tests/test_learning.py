import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError as PydanticValidationError

from app.learning import classifier
from app.learning.fixtures import CLASSICAL_PARAMS, FIXED_ORDER_PARAMS, QUANTUM_PARAMS, REPLAY_PARAMS
from app.models.learning import (
    PARAM_COUNT,
    LabeledSample,
    ModelKind,
    ModelParams,
    Observable3Switch,
    circle_label,
)
from app.models.switch import Superposition
from app.simulation.qcore import PAULI_Z
from app.utils.error_handlers import ValidationError


def sample_points(seed: int, n: int = 32) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, 2))


class TestDataset:
    """Circle labels and generated datasets"""

    def test_circle_labels(self):
        assert circle_label(0.0, 0.0) == -1
        assert circle_label(1.0, 1.0) == 1
        assert circle_label(0.0, 0.9) == 1

    def test_sample_label_checked(self):
        with pytest.raises(ValidationError):
            LabeledSample(x1=0.0, x2=0.0, label=1)

    def test_sample_range_checked(self):
        with pytest.raises(PydanticValidationError):
            LabeledSample(x1=1.5, x2=0.0, label=1)

    def test_dataset_is_seeded(self):
        assert classifier.generate_dataset(20, 7) == classifier.generate_dataset(20, 7)
        assert classifier.generate_dataset(20, 7) != classifier.generate_dataset(20, 8)

    def test_classes_roughly_balanced(self):
        _, y = classifier.dataset_arrays(classifier.generate_dataset(4000, 3))
        assert 0.45 < np.mean(y == 1) < 0.55

    def test_empty_dataset(self):
        with pytest.raises(ValidationError):
            classifier.generate_dataset(0, 1)


class TestClassify:
    def test_sign_rule(self):
        assert classifier.classify(0.2) == 1
        assert classifier.classify(-0.2) == -1
        assert classifier.classify(0.0) == -1

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            classifier.classify(float("nan"))
        with pytest.raises(ValidationError):
            classifier.classify_batch(np.array([0.1, np.inf]))

    def test_non_finite_sample(self):
        with pytest.raises(ValidationError):
            classifier.forward(ModelKind.FIXED, FIXED_ORDER_PARAMS, (np.nan, 0.0))


class TestParameters:
    def test_counts(self):
        for mode, params in REPLAY_PARAMS.items():
            assert len(params) == PARAM_COUNT[mode]

    def test_round_trip_vector(self):
        params = ModelParams.from_vector(ModelKind.QUANTUM, QUANTUM_PARAMS)
        assert params.prep_params is not None
        assert_allclose(params.to_vector(), QUANTUM_PARAMS)

    def test_wrong_length(self):
        with pytest.raises(ValidationError):
            ModelParams.from_vector(ModelKind.CLASSICAL, CLASSICAL_PARAMS[:11])

    def test_switch_model_needs_preparation(self):
        with pytest.raises(ValidationError):
            ModelParams(mode=ModelKind.QUANTUM, gate_params=(0.1, 0.2, 0.3))

    def test_mode_mismatch(self):
        params = ModelParams.from_vector(ModelKind.CLASSICAL, CLASSICAL_PARAMS)
        with pytest.raises(ValidationError):
            classifier.coerce_params(ModelKind.QUANTUM, params)

    def test_preparation_block_arity(self):
        with pytest.raises(ValidationError):
            classifier.preparation_block([0.0] * 8)

    def test_preparation_block_gates(self):
        block = classifier.preparation_block([0.0] * 9)
        assert len(block.gates) == 6
        assert all(t in classifier.LAYOUT.ancilla_qubits for g in block.gates for t in g.targets)


class TestObservables:
    @pytest.mark.parametrize("mode", list(ModelKind))
    def test_hermitian(self, mode):
        matrix = classifier.observable_matrix(classifier.build_observable(mode))
        assert_allclose(matrix, matrix.conj().T, atol=1e-12)

    def test_switch_observable_size(self):
        matrix = classifier.observable_matrix(classifier.build_observable(ModelKind.QUANTUM))
        assert matrix.shape == (512, 512)

    def test_scale_must_be_positive(self):
        with pytest.raises(ValidationError):
            classifier.build_observable(ModelKind.CLASSICAL, scale=0.0)

    def test_fixed_observable_has_no_ancilla(self):
        with pytest.raises(ValidationError):
            Observable3Switch(mode=ModelKind.FIXED, target_operator=PAULI_Z, ancilla_operator=np.eye(8))


class TestForwardPasses:
    """Model outputs and their independent oracles"""

    def setup_method(self):
        self.X = sample_points(11)

    def test_fixed_order_ignores_x1(self):
        x2 = np.linspace(-1.0, 1.0, 7)
        rows = [classifier.forward_batch(ModelKind.FIXED, FIXED_ORDER_PARAMS,
                                         np.column_stack([np.full_like(x2, x1), x2]))
                for x1 in np.linspace(-1.0, 1.0, 9)]
        assert np.max(np.ptp(np.array(rows), axis=0)) < 1e-10

    def test_outputs_bounded(self):
        # the coherent E x E block has operator norm 6
        bounds = {ModelKind.FIXED: 1.0, ModelKind.CLASSICAL: 1.0, ModelKind.QUANTUM: 6.0}
        for mode, params in REPLAY_PARAMS.items():
            values = classifier.forward_batch(mode, params, self.X)
            assert np.all(np.abs(values) <= bounds[mode] + 1e-12)

    def test_mixture_oracle(self):
        simulated = classifier.forward_batch(ModelKind.CLASSICAL, CLASSICAL_PARAMS, self.X)
        assert_allclose(simulated, classifier.mixture_oracle(CLASSICAL_PARAMS, self.X), atol=1e-9)

    def test_coherence_oracle(self):
        simulated = classifier.forward_batch(ModelKind.QUANTUM, QUANTUM_PARAMS, self.X)
        assert_allclose(simulated, classifier.coherence_oracle(QUANTUM_PARAMS, self.X), atol=1e-9)

    def test_observable_scale_preserves_labels(self):
        base = classifier.forward_batch(ModelKind.QUANTUM, QUANTUM_PARAMS, self.X)
        scaled = classifier.forward_batch(ModelKind.QUANTUM, QUANTUM_PARAMS, self.X,
                                          classifier.build_observable(ModelKind.QUANTUM, scale=3.7))
        assert_allclose(scaled, 3.7 * base, atol=1e-9)
        assert np.array_equal(classifier.classify_batch(scaled), classifier.classify_batch(base))

    def test_single_sample_matches_batch(self):
        batch = classifier.forward_batch(ModelKind.CLASSICAL, CLASSICAL_PARAMS, self.X[:3])
        for row, value in zip(self.X[:3], batch):
            assert classifier.forward(ModelKind.CLASSICAL, CLASSICAL_PARAMS, tuple(row)) == pytest.approx(value)

    def test_chunking_is_transparent(self, monkeypatch):
        full = classifier.forward_batch(ModelKind.QUANTUM, QUANTUM_PARAMS, self.X)
        monkeypatch.setattr(classifier, "CHUNK_SIZE", 5)
        assert_allclose(classifier.forward_batch(ModelKind.QUANTUM, QUANTUM_PARAMS, self.X), full, atol=1e-12)

    def test_accuracy_in_unit_interval(self):
        dataset = classifier.generate_dataset(50, 7)
        for mode, params in REPLAY_PARAMS.items():
            assert 0.0 <= classifier.accuracy(mode, params, dataset) <= 1.0


class TestReuploading:
    def test_reduces_to_single_layer(self):
        rng = np.random.default_rng(4)
        second = rng.uniform(0.0, np.pi, size=3)
        x2 = np.linspace(-1.0, 1.0, 11)
        two_layer = classifier.re_uploading_batch(np.concatenate([np.zeros(3), second]),
                                                  np.column_stack([np.zeros_like(x2), x2]))
        one_layer = classifier.fixed_order_forward(second, np.column_stack([np.zeros_like(x2), 2 * x2]))
        assert_allclose(two_layer, one_layer, atol=1e-10)

    def test_parameter_count(self):
        with pytest.raises(ValidationError):
            classifier.re_uploading_batch(np.zeros(5), [(0.1, 0.2)])

    def test_baseline_scalar(self):
        params = np.linspace(0.1, 0.6, 6)
        value = classifier.re_uploading_baseline(params, (0.3, -0.4))
        assert value == pytest.approx(classifier.re_uploading_batch(params, [(0.3, -0.4)])[0])


class TestAncillaDiagnostics:
    def test_probabilities_normalized(self):
        state = classifier.final_state(QUANTUM_PARAMS, (0.3, -0.2))
        probabilities = classifier.ancilla_probabilities(state)
        assert probabilities.shape == (8,)
        assert probabilities.sum() == pytest.approx(1.0)

    def test_uniform_preparation(self):
        uniform = Superposition(amplitudes=tuple([1 / np.sqrt(6)] * 6))
        state = classifier.final_state(QUANTUM_PARAMS, (0.5, 0.5), control=uniform)
        probabilities = classifier.ancilla_probabilities(state)
        assert_allclose(probabilities[:6], np.full(6, 1 / 6), atol=1e-12)
        assert_allclose(probabilities[6:], 0.0, atol=1e-12)

    def test_fixed_model_has_no_register(self):
        with pytest.raises(ValidationError):
            classifier.final_state(FIXED_ORDER_PARAMS, (0.1, 0.1), mode=ModelKind.FIXED)

    def test_tables(self):
        probabilities, density = classifier.ancilla_tables(classifier.final_state(CLASSICAL_PARAMS, (0.1, 0.7),
                                                                                  mode=ModelKind.CLASSICAL))
        assert list(probabilities["basis"])[:2] == ["000", "001"]
        assert len(density) == 64


class TestTables:
    def test_predictions_frame(self):
        dataset = classifier.generate_dataset(10, 2)
        frame = classifier.predictions_frame(ModelKind.FIXED, FIXED_ORDER_PARAMS, dataset)
        assert list(frame.columns) == ["x1", "x2", "label", "expectation", "predicted"]
        assert len(frame) == 10

    def test_decision_grid(self):
        frame = classifier.decision_grid(ModelKind.REUPLOAD, np.zeros(6), n=5)
        assert len(frame) == 25
        assert set(frame["predicted"]) <= {-1, 1}


class TestReplay:
    def test_fixed_order_replay_near_chance(self):
        test_set = classifier.generate_dataset(200, 7 + 1000)
        assert abs(classifier.accuracy(ModelKind.FIXED, FIXED_ORDER_PARAMS, test_set) - 0.5) <= 0.08

    def test_published_fixed_point_predicts_one_class(self):
        # -0.092 cos x2 + 0.026 sin x2 stays negative on [-1, 1]
        grid = classifier.decision_grid(ModelKind.FIXED, FIXED_ORDER_PARAMS, n=21)
        assert set(grid["predicted"]) == {-1}
        assert classifier.accuracy(ModelKind.FIXED, FIXED_ORDER_PARAMS, classifier.generate_dataset(4000, 5)) <= 0.55
