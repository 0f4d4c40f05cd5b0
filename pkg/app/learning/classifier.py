"""
Circle classifier on a single qubit whose three gates, R_Z(x1), R_Y(x2) and a variational
U3, are applied in a fixed order, a classical mixture of orders, or a coherent
superposition of orders prepared on the ancilla of a 3-switch.

Switch register (no history): q0 target, q1-q3 working, q4-q5 control, q6-q8 ancilla.
"""
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.core.logging_config import get_logger
from app.models.circuit import DensityMatrix, GateKind, StateVector, cnot, ry, rz, u3
from app.models.learning import (
    ModelKind,
    ModelParams,
    LabeledSample,
    Observable3Switch,
    circle_label,
)
from app.models.switch import ControlPrep, Permutation, PreparationBlock, SwitchLayout
from app.simulation.qcore import PAULI_Z, gate_matrix, reduced_density, rotation_batch
from app.simulation.switch import (
    ancilla_amplitudes,
    ancilla_operator,
    embedded_observable,
    index_perm,
    run_switch,
    run_switch_batch,
    sector_expectation,
)
from app.utils.error_handlers import ValidationError

logger = get_logger('app.learning.classifier')

LAYOUT = SwitchLayout(n_gates=3, n_target_qubits=1, include_history=False)
DEFAULT_ORDER = Permutation.of(0, 1, 2)
CHUNK_SIZE = 2048

Sample = Union[LabeledSample, Tuple[float, float], Sequence[float]]
ParamsLike = Union[ModelParams, Sequence[float], np.ndarray]


# Data

def generate_dataset(n: int, seed: int) -> List[LabeledSample]:
    """n points uniform on [-1, 1]^2 labelled by the circle of radius sqrt(2/pi)."""
    if n <= 0:
        raise ValidationError("n", f"Dataset size must be positive, got {n}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1.0, 1.0, size=(n, 2))
    return [LabeledSample(x1=float(a), x2=float(b), label=circle_label(a, b)) for a, b in points]


def dataset_arrays(dataset: Sequence[LabeledSample]) -> Tuple[np.ndarray, np.ndarray]:
    if not dataset:
        raise ValidationError("dataset", "Dataset is empty")
    X = np.array([[s.x1, s.x2] for s in dataset], dtype=float)
    y = np.array([s.label for s in dataset], dtype=int)
    return X, y


def _inputs(samples) -> np.ndarray:
    if isinstance(samples, LabeledSample):
        samples = [samples]
    if isinstance(samples, (list, tuple)) and samples and isinstance(samples[0], LabeledSample):
        samples = [[s.x1, s.x2] for s in samples]
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if X.shape[-1] != 2:
        raise ValidationError("sample", f"Samples must be (x1, x2) pairs, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("sample", "Sample coordinates must be finite")
    return X


def classify(e: float) -> int:
    if not np.isfinite(e):
        raise ValidationError("e", f"Cannot classify non-finite expectation {e}")
    return 1 if e > 0 else -1


def classify_batch(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValidationError("e", "Cannot classify non-finite expectations")
    return np.where(values > 0, 1, -1)


# Model pieces

def coerce_params(mode: ModelKind, params: ParamsLike) -> ModelParams:
    mode = ModelKind(mode)
    if isinstance(params, ModelParams):
        if params.mode is not mode:
            raise ValidationError("params", f"Parameters for {params.mode.value} passed to a {mode.value} model")
        return params
    return ModelParams.from_vector(mode, params)


def build_observable(mode: ModelKind, scale: float = 1.0) -> Observable3Switch:
    """
    sigma_z on the model qubit for fixed and re-uploading models; for switch models the
    ancilla projector onto E (classical) or the all-ones E x E block (quantum), each
    multiplied by `scale`.
    """
    mode = ModelKind(mode)
    if scale <= 0:
        raise ValidationError("scale", f"Observable scale must be positive, got {scale}")
    if mode in (ModelKind.FIXED, ModelKind.REUPLOAD):
        return Observable3Switch(mode=mode, target_operator=scale * PAULI_Z)
    ancilla = ancilla_operator(LAYOUT, coherent=mode is ModelKind.QUANTUM)
    return Observable3Switch(mode=mode, target_operator=PAULI_Z, ancilla_operator=scale * ancilla)


def observable_matrix(observable: Observable3Switch) -> np.ndarray:
    """Dense operator on the register the observable is measured on."""
    if observable.ancilla_operator is None:
        return np.array(observable.target_operator)
    return embedded_observable(LAYOUT, observable.ancilla_operator, observable.target_operator)


def preparation_block(prep_params: Sequence[float]) -> PreparationBlock:
    """U3(cr_i1, cr_i2, cr_i3) on each ancilla qubit, then CNOTs q6->q7, q7->q8, q6->q8."""
    if len(prep_params) != 9:
        raise ValidationError("prep_params", f"Expected 9 preparation parameters, got {len(prep_params)}")
    a0, a1, a2 = LAYOUT.ancilla_qubits
    gates = [u3(*prep_params[3 * i:3 * i + 3], target=q) for i, q in enumerate((a0, a1, a2))]
    gates += [cnot(a0, a1), cnot(a1, a2), cnot(a0, a2)]
    return PreparationBlock(gates=tuple(gates))


def gate_stack(gate_params: Sequence[float], X: np.ndarray) -> np.ndarray:
    """(B, 3, 2, 2): gate 0 = R_Z(x1), gate 1 = R_Y(x2), gate 2 = U3(gate_params)."""
    stack = np.empty((X.shape[0], 3, 2, 2), dtype=complex)
    stack[:, 0] = rotation_batch(GateKind.RZ, X[:, 0])
    stack[:, 1] = rotation_batch(GateKind.RY, X[:, 1])
    stack[:, 2] = gate_matrix(u3(*(float(p) for p in gate_params)))
    return stack


def _ordered_states(stack: np.ndarray, order: Permutation) -> np.ndarray:
    psi = np.zeros((stack.shape[0], 2), dtype=complex)
    psi[:, 0] = 1.0
    for gate in order.slots:
        psi = np.einsum('bij,bj->bi', stack[:, gate], psi)
    return psi


def _chunked(fn, X: np.ndarray) -> np.ndarray:
    if X.shape[0] <= CHUNK_SIZE:
        return fn(X)
    return np.concatenate([fn(X[i:i + CHUNK_SIZE]) for i in range(0, X.shape[0], CHUNK_SIZE)])


# Forward passes

def _expect(psi: np.ndarray, operator: np.ndarray) -> np.ndarray:
    return np.real(np.einsum('bi,ij,bj->b', psi.conj(), operator, psi))


def fixed_order_forward(gate_params: Sequence[float], samples, order: Permutation = DEFAULT_ORDER,
                        target_op: np.ndarray = PAULI_Z) -> np.ndarray:
    """<target_op> (sigma_z by default) after the three gates applied in `order` to |0>."""
    X = _inputs(samples)
    return _expect(_ordered_states(gate_stack(gate_params, X), order), target_op)


def switch_forward(gate_params: Sequence[float], ancilla: np.ndarray, samples,
                   observable: Observable3Switch) -> np.ndarray:
    """3-switch output for a given ancilla state vector."""
    X = _inputs(samples)

    def run(chunk: np.ndarray) -> np.ndarray:
        states = run_switch_batch(LAYOUT, gate_stack(gate_params, chunk), ancilla)
        return sector_expectation(LAYOUT, states, observable.ancilla_operator, observable.target_operator)

    return _chunked(run, X)


def re_uploading_batch(params: Sequence[float], samples) -> np.ndarray:
    """Two repetitions of the (R_Z(x1), R_Y(x2), U3) layer with per-layer U3 parameters."""
    params = np.asarray(params, dtype=float).ravel()
    if params.size != 6:
        raise ValidationError("params", f"Re-uploading baseline takes 6 parameters, got {params.size}")
    X = _inputs(samples)
    psi = _ordered_states(gate_stack(params[:3], X), DEFAULT_ORDER)
    second = gate_stack(params[3:], X)
    for gate in DEFAULT_ORDER.slots:
        psi = np.einsum('bij,bj->bi', second[:, gate], psi)
    return _expect(psi, PAULI_Z)


def re_uploading_baseline(params: Sequence[float], sample: Sample) -> float:
    return float(re_uploading_batch(params, sample)[0])


def forward_batch(mode: ModelKind, params: ParamsLike, samples,
                  observable: Optional[Observable3Switch] = None) -> np.ndarray:
    mode = ModelKind(mode)
    params = coerce_params(mode, params)
    if mode is ModelKind.FIXED:
        target_op = PAULI_Z if observable is None else observable.target_operator
        return fixed_order_forward(params.gate_params, samples, target_op=target_op)
    if mode is ModelKind.REUPLOAD:
        return re_uploading_batch(params.to_vector(), samples)
    observable = observable or build_observable(mode)
    ancilla = ancilla_amplitudes(LAYOUT, preparation_block(params.prep_params))
    return switch_forward(params.gate_params, ancilla, samples, observable)


def forward(mode: ModelKind, params: ParamsLike, sample: Sample) -> float:
    return float(forward_batch(mode, params, sample)[0])


def accuracy(mode: ModelKind, params: ParamsLike, dataset: Sequence[LabeledSample]) -> float:
    X, y = dataset_arrays(dataset)
    predictions = classify_batch(forward_batch(mode, params, X))
    return float(np.mean(predictions == y))


# Ancilla diagnostics

def final_state(params: ParamsLike, sample: Sample, mode: ModelKind = ModelKind.QUANTUM,
                control: Optional[ControlPrep] = None) -> StateVector:
    """9-qubit register after the 3-switch; `control` overrides the preparation block."""
    params = coerce_params(mode, params)
    if params.prep_params is None:
        raise ValidationError("mode", "Only switch models have a register state")
    x1, x2 = _inputs(sample)[0]
    gates = [rz(float(x1)), ry(float(x2)), u3(*params.gate_params)]
    control = control or preparation_block(params.prep_params)
    return run_switch(LAYOUT, gates, control, StateVector.zero(1))


def _check_register(state: StateVector) -> None:
    if state.n_qubits != LAYOUT.n_qubits:
        raise ValidationError("final_state", f"Expected a {LAYOUT.n_qubits}-qubit register, got {state.n_qubits}")


def ancilla_density(state: StateVector) -> DensityMatrix:
    _check_register(state)
    return reduced_density(state, LAYOUT.ancilla_qubits)


def ancilla_probabilities(state: StateVector) -> np.ndarray:
    return ancilla_density(state).probabilities()


# Oracles built from independent fixed-order circuits

def prep_ancilla(prep_params: Sequence[float]) -> np.ndarray:
    return ancilla_amplitudes(LAYOUT, preparation_block(prep_params))


def mixture_oracle(params: ParamsLike, samples) -> np.ndarray:
    """sum_pi q_pi f^pi with q the ancilla basis probabilities after the preparation block."""
    params = coerce_params(ModelKind.CLASSICAL, params)
    weights = np.abs(prep_ancilla(params.prep_params)) ** 2
    X = _inputs(samples)
    total = np.zeros(X.shape[0])
    for label in LAYOUT.effective_orders:
        total += weights[label] * fixed_order_forward(params.gate_params, X, index_perm(label, 3))
    return total


def coherence_oracle(params: ParamsLike, samples) -> np.ndarray:
    """sum_{pi, pi'} rho[pi, pi'] <psi_pi'|sigma_z|psi_pi> over E with the prepared ancilla density."""
    params = coerce_params(ModelKind.QUANTUM, params)
    ancilla = prep_ancilla(params.prep_params)
    rho = np.outer(ancilla, ancilla.conj())
    X = _inputs(samples)
    stack = gate_stack(params.gate_params, X)
    states = [_ordered_states(stack, index_perm(label, 3)) for label in LAYOUT.effective_orders]
    total = np.zeros(X.shape[0], dtype=complex)
    for a, ket in enumerate(states):
        for b, bra in enumerate(states):
            total += rho[a, b] * np.einsum('bi,ij,bj->b', bra.conj(), PAULI_Z, ket)
    return total.real


# Tables

def predictions_frame(mode: ModelKind, params: ParamsLike, dataset: Sequence[LabeledSample]) -> pd.DataFrame:
    X, y = dataset_arrays(dataset)
    values = forward_batch(mode, params, X)
    return pd.DataFrame({
        "x1": X[:, 0],
        "x2": X[:, 1],
        "label": y,
        "expectation": values,
        "predicted": classify_batch(values),
    })


def decision_grid(mode: ModelKind, params: ParamsLike, n: int = 101) -> pd.DataFrame:
    """Model output on a uniform n x n grid over [-1, 1]^2."""
    axis = np.linspace(-1.0, 1.0, n)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    X = np.column_stack([g1.ravel(), g2.ravel()])
    values = forward_batch(mode, params, X)
    return pd.DataFrame({"x1": X[:, 0], "x2": X[:, 1], "expectation": values, "predicted": classify_batch(values)})


def ancilla_tables(state: StateVector) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """(basis probabilities, density entries) of the ancilla for plotting."""
    rho = ancilla_density(state).entries
    labels = [format(i, f"0{LAYOUT.n_alpha}b") for i in range(rho.shape[0])]
    probabilities = pd.DataFrame({"basis": labels, "label": range(rho.shape[0]),
                                  "probability": np.real(np.diag(rho))})
    rows, cols = np.meshgrid(range(rho.shape[0]), range(rho.shape[0]), indexing="ij")
    density = pd.DataFrame({"row": rows.ravel(), "col": cols.ravel(),
                            "re": rho.real.ravel(), "im": rho.imag.ravel()})
    return probabilities, density
