"""
Fourier analysis of switch-controlled models.

Models are f(x) = <psi'(x)|O|psi(x)> with psi(x) = g(x) W|0> and g(x) = exp(-ixH).
The reachable frequencies are the eigenvalue differences of H; the gate order of W
only moves the coefficients.
"""
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from app.core.logging_config import get_logger
from app.models.circuit import SPECTRAL_ATOL, EncodingGenerator, GateKind, GateSpec
from app.models.fourier import FourierSeries, ModelFunction, OrderMode
from app.models.switch import (
    BasisOrder,
    ControlPrep,
    Mixture,
    Permutation,
    Superposition,
    SwitchLayout,
)
from app.simulation.qcore import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    embed,
    encoding_unitary,
    gate_matrix,
    random_state,
    random_u3,
    rotation_batch,
)
from app.simulation.switch import (
    ancilla_amplitudes,
    ancilla_operator,
    index_perm,
    order_coherence,
    ordered_product,
    run_switch_batch,
    sector_expectation,
)
from app.utils.error_handlers import SpectrumMismatchError, ValidationError

logger = get_logger('app.analysis.spectra')

FREQUENCY_BIN_TOL = 1e-6
RECONSTRUCTION_TOL = 1e-8

RX_GENERATOR = EncodingGenerator.from_hermitian(PAULI_X / 2)


def predicted_spectrum(gen: EncodingGenerator) -> List[float]:
    """Sorted, deduplicated eigenvalue differences of the generator."""
    eigenvalues = np.array(gen.eigenvalues)
    differences = np.sort((eigenvalues[:, None] - eigenvalues[None, :]).ravel())
    spectrum: List[float] = []
    for omega in differences:
        if not spectrum or omega - spectrum[-1] > SPECTRAL_ATOL:
            spectrum.append(float(omega))
    return [0.0 if abs(w) <= SPECTRAL_ATOL else w for w in spectrum]


def dft_coefficients(f: Callable[[np.ndarray], np.ndarray], max_freq: int,
                     atol: float = RECONSTRUCTION_TOL) -> FourierSeries:
    """
    Coefficients of an integer-spectrum function from 2K+1 samples on [0, 2pi).

    Raises SpectrumMismatchError when the truncated series does not reproduce f on a
    ten times finer grid, i.e. when f carries frequencies beyond K.
    """
    if max_freq < 0:
        raise ValidationError("max_freq", f"Band limit must be non-negative, got {max_freq}")
    n_samples = 2 * max_freq + 1
    x = 2 * np.pi * np.arange(n_samples) / n_samples
    coeffs = np.fft.fft(np.asarray(f(x), dtype=float)) / n_samples
    terms = {float(w): complex(coeffs[w % n_samples]) for w in range(-max_freq, max_freq + 1)}
    # Real samples give an exactly conjugate-symmetric transform up to rounding
    for w in range(1, max_freq + 1):
        average = (terms[float(w)] + np.conj(terms[float(-w)])) / 2
        terms[float(w)], terms[float(-w)] = complex(average), complex(np.conj(average))
    terms[0.0] = complex(terms[0.0].real)
    series = FourierSeries(terms=terms)

    fine = 2 * np.pi * np.arange(10 * n_samples) / (10 * n_samples)
    residual = float(np.max(np.abs(series.evaluate(fine) - np.asarray(f(fine), dtype=float))))
    if residual > atol:
        raise SpectrumMismatchError(max_freq, residual)
    return series


def _as_matrix(gate: Union[GateSpec, np.ndarray], dim: int) -> np.ndarray:
    if isinstance(gate, GateSpec):
        n_qubits = int(round(np.log2(dim)))
        if 2 ** n_qubits != dim:
            raise ValidationError("gates", f"Gate specs need a qubit system, generator dimension is {dim}")
        return embed(gate_matrix(gate), gate.targets, n_qubits)
    matrix = np.asarray(gate, dtype=complex)
    if matrix.shape != (dim, dim):
        raise ValidationError("gates", f"Gate of shape {matrix.shape} on a {dim}-dimensional system")
    return matrix


def _bin(omega: float, spectrum: Sequence[float]) -> float:
    nearest = min(spectrum, key=lambda w: abs(w - omega))
    if abs(nearest - omega) > FREQUENCY_BIN_TOL:
        raise SpectrumMismatchError(int(np.ceil(max(abs(w) for w in spectrum))), abs(nearest - omega),
                                    details={"frequency": omega})
    return nearest


def analytic_coefficients(gates: Sequence[Union[GateSpec, np.ndarray]], gen: EncodingGenerator,
                          obs: np.ndarray, mode: OrderMode) -> FourierSeries:
    """
    Coefficients of <psi_{pi'}|O|psi_pi> by direct products in the generator eigenbasis,
    grouped by frequency lambda_k - lambda_l. fixed(pi) sets pi' = pi.
    """
    dim = gen.dim
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (dim, dim):
        raise ValidationError("obs", f"Observable shape {obs.shape} does not match generator dimension {dim}")
    matrices = [_as_matrix(g, dim) for g in gates]
    if mode.order.n != len(matrices):
        raise ValidationError("mode", f"Order {mode.order} does not permute {len(matrices)} gates")

    eigenvalues, vectors = np.linalg.eigh(gen.hermitian)
    to_eigen = vectors.conj().T
    ket = to_eigen @ ordered_product(matrices, mode.order)[:, 0]
    bra = to_eigen @ ordered_product(matrices, mode.bra)[:, 0]
    rotated = to_eigen @ obs @ vectors

    spectrum = predicted_spectrum(gen)
    terms: Dict[float, complex] = {w: 0j for w in spectrum}
    for k in range(dim):
        for l in range(dim):
            omega = _bin(eigenvalues[k] - eigenvalues[l], spectrum)
            terms[omega] += complex(np.conj(bra[k]) * rotated[k, l] * ket[l])
    return FourierSeries(terms=terms, real_valued=mode.bra == mode.order)


def ordered_model(gates: Sequence[Union[GateSpec, np.ndarray]], gen: EncodingGenerator, obs: np.ndarray,
                  order: Permutation) -> ModelFunction:
    """f^pi(x) = <0|W_pi^dag g(x)^dag O g(x) W_pi|0> evaluated by explicit matrices."""
    matrices = [_as_matrix(g, gen.dim) for g in gates]
    state = ordered_product(matrices, order)[:, 0]
    obs = np.asarray(obs, dtype=complex)

    def evaluate(x: np.ndarray) -> np.ndarray:
        values = []
        for xi in x:
            psi = encoding_unitary(gen, xi) @ state
            values.append(np.real(np.vdot(psi, obs @ psi)))
        return np.array(values)

    return ModelFunction(evaluate, f"fixed order {order}", bound=float(np.linalg.norm(obs, 2)))


# Printed two-gate forms

def _fixed_u_first(x, theta, phi, lam):
    return np.cos(theta) * np.cos(x) - np.sin(theta) * np.sin(lam) * np.sin(x)


def _fixed_u_second(x, theta, phi, lam):
    return np.cos(theta) * np.cos(x) + np.sin(theta) * np.sin(phi) * np.sin(x)


def _fixed_u_second_printed(x, theta, phi, lam):
    return np.cos(theta) * np.cos(x) - np.sin(theta) * np.sin(phi) * np.sin(x)


def _interference_u(x, theta, phi, lam):
    sp, sl, cp, cl = np.sin(phi), np.sin(lam), np.cos(phi), np.cos(lam)
    return ((1 + sp * sl) * np.cos(theta) - cp * cl
            + (sp - sl) * np.sin(theta) * np.sin(x)
            + ((1 - sp * sl) * np.cos(theta) + cp * cl) * np.cos(x))


def _quantum_2switch_u(x, theta, phi, lam):
    return (_fixed_u_first(x, theta, phi, lam) + _fixed_u_second(x, theta, phi, lam)
            + _interference_u(x, theta, phi, lam)) / 4


# kind -> (parameter names, function, observable norm bound)
_CLOSED_FORMS = {
    "fixed_rz": (("theta",), lambda x, theta: np.cos(x), 1.0),
    "classical_rz": (("theta",), lambda x, theta: np.cos(x), 1.0),
    "quantum_2switch_rz": (("theta",), lambda x, theta: ((3 + np.cos(theta)) * np.cos(x) + 1 - np.cos(theta)) / 4, 1.0),
    "fixed_u_first": (("theta", "phi", "lam"), _fixed_u_first, 1.0),
    "fixed_u_second": (("theta", "phi", "lam"), _fixed_u_second, 1.0),
    "fixed_u_second_printed": (("theta", "phi", "lam"), _fixed_u_second_printed, 1.0),
    "interference_u": (("theta", "phi", "lam"), _interference_u, 2.0),
    "quantum_2switch_u": (("theta", "phi", "lam"), _quantum_2switch_u, 1.0),
}

CLOSED_FORM_KINDS = tuple(_CLOSED_FORMS)


def closed_form(kind: str, **params: float) -> ModelFunction:
    """
    Two-gate closed forms with gate 0 = R_X(x) and gate 1 = R_Z(theta) or U(theta, phi, lam).

    fixed_u_first is the product U R_X(x), fixed_u_second is R_X(x) U. The
    fixed_u_second_printed variant carries the opposite sign on its sin x term and is
    kept for comparison only.
    """
    if kind not in _CLOSED_FORMS:
        raise ValidationError("kind", f"Unknown closed form '{kind}'; expected one of {CLOSED_FORM_KINDS}")
    names, fn, bound = _CLOSED_FORMS[kind]
    missing = [n for n in names if n not in params]
    extra = [n for n in params if n not in names]
    if missing or extra:
        raise ValidationError("params", f"{kind} takes {names}; missing {missing}, unexpected {extra}")
    values = {n: float(params[n]) for n in names}
    label = ", ".join(f"{n}={v:.4g}" for n, v in values.items())
    return ModelFunction(lambda x: fn(np.asarray(x, dtype=float), **values),
                         f"{kind}({label})", bound=bound)


# Two-gate switch on the simulator

TWO_SWITCH_LAYOUT = SwitchLayout(n_gates=2, n_target_qubits=1, include_history=True)
TWO_SWITCH_CONTROLS = ("fixed_01", "fixed_10", "classical", "quantum")
_PLUS_PROJECTOR = np.full((2, 2), 0.5, dtype=complex)


def _two_switch_stack(x: np.ndarray, variational: np.ndarray) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    stack = np.empty((x.size, 2, 2, 2), dtype=complex)
    stack[:, 0] = rotation_batch(GateKind.RX, x)
    stack[:, 1] = np.asarray(variational, dtype=complex)
    return stack


def two_switch_states(x: np.ndarray, variational: np.ndarray, label: int) -> np.ndarray:
    """Final 2-switch register states with the order control in basis state |label>."""
    ancilla = np.zeros(2, dtype=complex)
    ancilla[label] = 1.0
    return run_switch_batch(TWO_SWITCH_LAYOUT, _two_switch_stack(x, variational), ancilla)


def two_switch_output(x: np.ndarray, variational: np.ndarray, control: str) -> np.ndarray:
    """
    Simulated 2-switch output with gate 0 = R_X(x) and gate 1 = `variational`.

    fixed_01/fixed_10 and classical are read with 1 (x) sigma_z; quantum prepares |+> and
    reads |+><+| (x) sigma_z.
    """
    layout = TWO_SWITCH_LAYOUT
    identity = ancilla_operator(layout)
    if control == "fixed_01":
        return sector_expectation(layout, two_switch_states(x, variational, 0), identity, PAULI_Z)
    if control == "fixed_10":
        return sector_expectation(layout, two_switch_states(x, variational, 1), identity, PAULI_Z)
    if control == "classical":
        return (two_switch_output(x, variational, "fixed_01") + two_switch_output(x, variational, "fixed_10")) / 2
    if control == "quantum":
        ancilla = np.full(2, 1 / np.sqrt(2), dtype=complex)
        states = run_switch_batch(layout, _two_switch_stack(x, variational), ancilla)
        return sector_expectation(layout, states, _PLUS_PROJECTOR, PAULI_Z)
    raise ValidationError("control", f"Unknown 2-switch control '{control}'; expected one of {TWO_SWITCH_CONTROLS}")


def two_switch_cross_term(x: np.ndarray, variational: np.ndarray) -> np.ndarray:
    """2 Re <psi_[1,0]|sigma_z|psi_[0,1]> read from the two basis-order simulations."""
    layout = TWO_SWITCH_LAYOUT
    forward = two_switch_states(x, variational, 0)
    backward = two_switch_states(x, variational, 1)
    return 2 * np.real(order_coherence(layout, backward, 1, forward, 0, PAULI_Z))


# Generic single-encoding switch model

class SwitchModel:
    """
    N-switch with gate 0 = R_X(x) and fixed variational gates 1..N-1 on one target qubit,
    a fixed input state and a target observable. Every order control reads the same
    encoding, so every control must share the {-1, 0, 1} spectrum.
    """

    def __init__(self, layout: SwitchLayout, variational: Sequence[np.ndarray], target_in: np.ndarray,
                 target_op: np.ndarray):
        if layout.n_target_qubits != 1 or len(variational) != layout.n_gates - 1:
            raise ValidationError("variational", f"Need {layout.n_gates - 1} single-qubit gates")
        self.layout = layout
        self.variational = [np.asarray(v, dtype=complex) for v in variational]
        self.target_in = np.asarray(target_in, dtype=complex)
        self.target_op = np.asarray(target_op, dtype=complex)

    @classmethod
    def random(cls, rng: np.random.Generator, n_gates: int = 3) -> "SwitchModel":
        layout = SwitchLayout(n_gates=n_gates, include_history=False)
        variational = [gate_matrix(random_u3(rng)) for _ in range(n_gates - 1)]
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        target_op = direction[0] * PAULI_X + direction[1] * PAULI_Y + direction[2] * PAULI_Z
        return cls(layout, variational, random_state(1, rng).amplitudes, target_op)

    def stack(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        stack = np.empty((x.size, self.layout.n_gates, 2, 2), dtype=complex)
        stack[:, 0] = rotation_batch(GateKind.RX, x)
        for k, gate in enumerate(self.variational, start=1):
            stack[:, k] = gate
        return stack

    def function(self, control: ControlPrep, coherent: Optional[bool] = None) -> ModelFunction:
        """Output under an order control; superpositions are read with the coherent observable."""
        layout = self.layout
        if coherent is None:
            coherent = isinstance(control, Superposition)
        ancilla_op = ancilla_operator(layout, coherent)
        bound = float(np.linalg.norm(ancilla_op, 2) * np.linalg.norm(self.target_op, 2))

        if isinstance(control, Mixture):
            branches = [(p, ancilla_amplitudes(layout, BasisOrder(order=_order(layout, label))))
                        for label, p in enumerate(control.probabilities) if p > 0]
        else:
            branches = [(1.0, ancilla_amplitudes(layout, control))]

        def evaluate(x: np.ndarray) -> np.ndarray:
            stack = self.stack(x)
            total = np.zeros(stack.shape[0])
            for weight, ancilla in branches:
                states = run_switch_batch(layout, stack, ancilla, self.target_in)
                total += weight * sector_expectation(layout, states, ancilla_op, self.target_op)
            return total

        return ModelFunction(evaluate, f"{layout.n_gates}-switch {type(control).__name__}", bound=bound)


def _order(layout: SwitchLayout, label: int) -> Permutation:
    return index_perm(label, layout.n_gates)


def order_controls(layout: SwitchLayout, rng: np.random.Generator) -> Dict[str, ControlPrep]:
    """Every fixed order, one random classical mixture and one random coherent superposition."""
    controls: Dict[str, ControlPrep] = {}
    for label in layout.effective_orders:
        order = _order(layout, label)
        controls[f"fixed_{''.join(map(str, order.slots))}"] = BasisOrder(order=order)
    weights = rng.uniform(0.1, 1.0, size=layout.n_orders)
    weights = weights / weights.sum()
    weights[-1] = 1.0 - weights[:-1].sum()
    controls["classical"] = Mixture(probabilities=tuple(float(w) for w in weights))
    amplitudes = rng.normal(size=layout.n_orders) + 1j * rng.normal(size=layout.n_orders)
    amplitudes /= np.linalg.norm(amplitudes)
    controls["quantum"] = Superposition(amplitudes=tuple(complex(a) for a in amplitudes))
    return controls


def support_table(functions: Dict[str, Callable[[np.ndarray], np.ndarray]], max_freq: int,
                  threshold: float = 1e-8) -> Dict[str, List[float]]:
    """Frequency support of each function from its band-limited DFT."""
    supports = {}
    for name, fn in functions.items():
        series = dft_coefficients(fn, max_freq)
        supports[name] = series.support(threshold)
        logger.debug(f"📈 {name}: support {supports[name]}")
    return supports
