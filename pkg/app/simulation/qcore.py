"""
Dense statevector core.

Conventions: qubit 0 is the least significant bit of a basis index. An operator on an
ordered target tuple reads its sub-index little-endian, so targets[0] is its lowest bit.
Amplitude arrays may carry leading batch axes; the last axis is always the register.
"""
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

from app.core.logging_config import get_logger
from app.models.circuit import (
    ATOL,
    SPECTRAL_ATOL,
    DensityMatrix,
    EncodingGenerator,
    GateKind,
    GateSpec,
    StateVector,
    is_hermitian,
    u3,
    validate_gate_spec,
)
from app.utils.error_handlers import QubitIndexError, ValidationError

logger = get_logger('app.simulation.qcore')

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def _rx(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)


def _u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([
        [c, -np.exp(1j * lam) * s],
        [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
    ], dtype=complex)


def rotation_batch(kind: GateKind, angles: np.ndarray) -> np.ndarray:
    """(B, 2, 2) stack of RX/RY/RZ matrices, one per angle."""
    angles = np.asarray(angles, dtype=float).reshape(-1)
    c, s = np.cos(angles / 2), np.sin(angles / 2)
    out = np.zeros((angles.size, 2, 2), dtype=complex)
    if kind is GateKind.RX:
        out[:, 0, 0] = out[:, 1, 1] = c
        out[:, 0, 1] = out[:, 1, 0] = -1j * s
    elif kind is GateKind.RY:
        out[:, 0, 0] = out[:, 1, 1] = c
        out[:, 0, 1], out[:, 1, 0] = -s, s
    elif kind is GateKind.RZ:
        out[:, 0, 0], out[:, 1, 1] = np.exp(-0.5j * angles), np.exp(0.5j * angles)
    else:
        raise ValidationError("kind", f"{kind.value} is not a single-axis rotation")
    return out


def _index_permutation_matrix(images: Sequence[int]) -> np.ndarray:
    dim = len(images)
    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[list(images), np.arange(dim)] = 1.0
    return matrix


# Sub-index images, little-endian over the gate's targets
_CNOT = _index_permutation_matrix([0, 3, 2, 1])
_SWAP = _index_permutation_matrix([0, 2, 1, 3])
_CSWAP = _index_permutation_matrix([0, 1, 2, 5, 4, 3, 6, 7])

_PARAMETRIC = {
    GateKind.RX: _rx,
    GateKind.RY: _ry,
    GateKind.RZ: _rz,
    GateKind.U3: _u3,
}
_FIXED = {
    GateKind.CNOT: _CNOT,
    GateKind.SWAP: _SWAP,
    GateKind.CSWAP: _CSWAP,
}


def gate_matrix(spec: GateSpec) -> np.ndarray:
    """Unitary of a gate on its 2^|targets| dimensional sub-space."""
    validate_gate_spec(spec.kind, spec.params, spec.targets, spec.matrix)
    if spec.kind in _PARAMETRIC:
        return _PARAMETRIC[spec.kind](*spec.params)
    if spec.kind in _FIXED:
        return _FIXED[spec.kind].copy()
    return np.array(spec.matrix, dtype=complex)


def _check_targets(targets: Sequence[int], n_qubits: int) -> None:
    if len(set(targets)) != len(targets):
        raise ValidationError("targets", f"Duplicate targets in {tuple(targets)}")
    for t in targets:
        if not 0 <= t < n_qubits:
            raise QubitIndexError(t, n_qubits)


def apply_matrix(amplitudes: np.ndarray, matrix: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """
    Apply `matrix` to the `targets` of (possibly batched) amplitudes.

    `matrix` is (d, d) or batched (B, d, d) matching a single leading batch axis.
    """
    targets = list(targets)
    _check_targets(targets, n_qubits)
    m = len(targets)
    d = 2 ** m
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape[-2:] != (d, d):
        raise ValidationError("matrix", f"Operator shape {matrix.shape} does not match {m} targets")

    amplitudes = np.asarray(amplitudes, dtype=complex)
    batch_shape = amplitudes.shape[:-1]
    flat = amplitudes.reshape(-1, *([2] * n_qubits))
    # Tensor axis of qubit q is 1 + (n - 1 - q); the operator's leading axis is targets[-1]
    source = [1 + n_qubits - 1 - q for q in reversed(targets)]
    moved = np.moveaxis(flat, source, list(range(flat.ndim - m, flat.ndim)))
    moved_shape = moved.shape
    grouped = moved.reshape(moved_shape[0], -1, d)
    if matrix.ndim == 2:
        out = grouped @ matrix.T
    else:
        out = np.einsum('bij,brj->bri', matrix.reshape(-1, d, d), grouped)
    out = np.moveaxis(out.reshape(moved_shape), list(range(flat.ndim - m, flat.ndim)), source)
    return out.reshape(*batch_shape, 2 ** n_qubits)


def apply_gate(state: StateVector, spec: GateSpec) -> StateVector:
    """Apply a gate to a register state; identity on the other qubits."""
    _check_targets(spec.targets, state.n_qubits)
    amplitudes = apply_matrix(state.amplitudes, gate_matrix(spec), spec.targets, state.n_qubits)
    return StateVector(n_qubits=state.n_qubits, amplitudes=amplitudes)


def apply_gates(state: StateVector, specs: Iterable[GateSpec]) -> StateVector:
    return reduce(apply_gate, specs, state)


def embed(matrix: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Full-register operator acting as `matrix` on `targets` and identity elsewhere."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2 ** len(targets), 2 ** len(targets)):
        raise ValidationError("matrix", f"Operator shape {matrix.shape} does not match {len(targets)} targets")
    _check_targets(targets, n_qubits)
    # Row j of the identity is the basis state e_j; its image is column j of the result
    images = apply_matrix(np.eye(2 ** n_qubits, dtype=complex), matrix, targets, n_qubits)
    return images.T.copy()


def compose(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Right-to-left product: compose([A, B]) acts as B first, then A."""
    if not ops:
        raise ValidationError("ops", "Nothing to compose")
    ops = [np.asarray(op, dtype=complex) for op in ops]
    dim = ops[0].shape
    for op in ops:
        if op.ndim != 2 or op.shape[0] != op.shape[1] or op.shape != dim:
            raise ValidationError("ops", f"Cannot compose shapes {[o.shape for o in ops]}")
    return reduce(np.matmul, ops)


def expectation(state: Union[StateVector, DensityMatrix], obs: np.ndarray) -> float:
    """<psi|O|psi> for a pure state, Tr(rho O) for a density matrix."""
    obs = np.asarray(obs, dtype=complex)
    dim = 2 ** state.n_qubits
    if obs.shape != (dim, dim):
        raise ValidationError("obs", f"Observable shape {obs.shape} does not match a {state.n_qubits}-qubit register")
    if not is_hermitian(obs):
        raise ValidationError("obs", "Observable is not Hermitian")
    if isinstance(state, DensityMatrix):
        value = np.trace(state.entries @ obs)
    else:
        value = np.vdot(state.amplitudes, obs @ state.amplitudes)
    if abs(value.imag) > SPECTRAL_ATOL:
        raise ValidationError("obs", f"Expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


def reduced_density(state: StateVector, keep: Iterable[int]) -> DensityMatrix:
    """Partial trace over the complement of `keep`; keep is re-ordered ascending."""
    keep = sorted(set(keep))
    if not keep:
        raise ValidationError("keep", "Cannot keep an empty set of qubits")
    _check_targets(keep, state.n_qubits)
    n = state.n_qubits
    rest = [q for q in range(n) if q not in keep]
    tensor = state.amplitudes.reshape([2] * n)
    order = [n - 1 - q for q in reversed(keep)] + [n - 1 - q for q in reversed(rest)]
    block = np.transpose(tensor, order).reshape(2 ** len(keep), -1)
    rho = block @ block.conj().T
    rho = (rho + rho.conj().T) / 2
    # trace equals the squared norm, which may sit up to 2 * ATOL off 1
    rho = rho / np.real(np.trace(rho))
    return DensityMatrix(n_qubits=len(keep), entries=rho)


def tensor_states(*states: StateVector) -> StateVector:
    """Product state; the first argument occupies the lowest qubits."""
    amplitudes = reduce(lambda low, high: np.kron(high, low), [s.amplitudes for s in states])
    return StateVector(n_qubits=sum(s.n_qubits for s in states), amplitudes=amplitudes)


def encoding_unitary(gen: EncodingGenerator, x: float) -> np.ndarray:
    """exp(-i x H) through the eigendecomposition of the generator."""
    eigenvalues, vectors = np.linalg.eigh(gen.hermitian)
    return (vectors * np.exp(-1j * x * eigenvalues)) @ vectors.conj().T


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    amplitudes = rng.normal(size=2 ** n_qubits) + 1j * rng.normal(size=2 ** n_qubits)
    return StateVector(n_qubits=n_qubits, amplitudes=amplitudes / np.linalg.norm(amplitudes))


def random_u3(rng: np.random.Generator, target: int = 0) -> GateSpec:
    theta, phi, lam = rng.uniform(0, 2 * np.pi, size=3)
    return u3(float(theta), float(phi), float(lam), target)


class BasisPermutation:
    """
    A unitary that maps computational basis states to basis states.

    `images[b]` is the basis index that |b> is sent to.
    """

    def __init__(self, images: np.ndarray):
        images = np.asarray(images, dtype=np.int64)
        if not np.array_equal(np.sort(images), np.arange(images.size)):
            raise ValidationError("images", "Basis map is not a bijection")
        self.images = images
        self._inverse = np.argsort(images)

    @property
    def dim(self) -> int:
        return self.images.size

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        return np.asarray(amplitudes)[..., self._inverse]

    def then(self, other: "BasisPermutation") -> "BasisPermutation":
        """Apply self first, then other."""
        return BasisPermutation(other.images[self.images])

    def inverse(self) -> "BasisPermutation":
        return BasisPermutation(self._inverse)

    def matrix(self) -> np.ndarray:
        return _index_permutation_matrix(self.images)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.images, np.arange(self.dim)))

    def __repr__(self) -> str:
        return f"BasisPermutation(dim={self.dim})"


def unitarity_defect(matrix: np.ndarray) -> float:
    matrix = np.asarray(matrix)
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))


def assert_unitary(matrix: np.ndarray, name: str = "operator", atol: float = ATOL) -> None:
    defect = unitarity_defect(matrix)
    if defect >= atol:
        logger.warning(f"⚠️ {name} unitarity defect {defect:.3e}")
        raise ValidationError(name, f"{name} is not unitary (defect {defect:.3e})")
