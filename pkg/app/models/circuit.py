from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from app.utils.error_handlers import ValidationError

# Global tolerances
ATOL = 1e-10
SPECTRAL_ATOL = 1e-9
MAX_QUBITS = 14


def _frozen_array(value, dtype=complex) -> np.ndarray:
    array = np.array(value, dtype=dtype)
    array.setflags(write=False)
    return array


def is_unitary(matrix: np.ndarray, atol: float = ATOL) -> bool:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    identity = np.eye(matrix.shape[0])
    return bool(np.max(np.abs(matrix.conj().T @ matrix - identity), initial=0.0) < atol)


def is_hermitian(matrix: np.ndarray, atol: float = ATOL) -> bool:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) < atol)


class GateKind(str, Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    U3 = "U3"
    CNOT = "CNOT"
    SWAP = "SWAP"
    CSWAP = "CSWAP"
    CUSTOM = "CUSTOM"


# (parameter count, target count); None means "derived from the custom matrix"
GATE_ARITY = {
    GateKind.RX: (1, 1),
    GateKind.RY: (1, 1),
    GateKind.RZ: (1, 1),
    GateKind.U3: (3, 1),
    GateKind.CNOT: (0, 2),
    GateKind.SWAP: (0, 2),
    GateKind.CSWAP: (0, 3),
    GateKind.CUSTOM: (0, None),
}


def validate_gate_spec(kind: GateKind, params: Tuple[float, ...], targets: Tuple[int, ...],
                       matrix: Optional[np.ndarray]) -> None:
    """Check parameter and target arity of a gate description."""
    n_params, n_targets = GATE_ARITY[kind]
    if len(params) != n_params:
        raise ValidationError("params", f"{kind.value} takes {n_params} parameters, got {len(params)}")
    if len(set(targets)) != len(targets):
        raise ValidationError("targets", f"Duplicate targets in {targets}")
    if any(t < 0 for t in targets):
        raise ValidationError("targets", f"Negative target in {targets}")
    if kind is GateKind.CUSTOM:
        if matrix is None:
            raise ValidationError("matrix", "CUSTOM gate requires a matrix")
        dim = 2 ** len(targets)
        if matrix.shape != (dim, dim):
            raise ValidationError("matrix", f"CUSTOM matrix shape {matrix.shape} does not match {len(targets)} targets")
        if not is_unitary(matrix):
            raise ValidationError("matrix", "CUSTOM matrix is not unitary")
    else:
        if matrix is not None:
            raise ValidationError("matrix", f"{kind.value} does not take a matrix")
        if len(targets) != n_targets:
            raise ValidationError("targets", f"{kind.value} acts on {n_targets} qubits, got {len(targets)}")


class GateSpec(BaseModel):
    """
    A gate on an ordered tuple of qubits.

    Multi-qubit gates read their targets little-endian: targets[0] is the least
    significant bit of the gate's sub-index (CNOT/CSWAP: targets[0] is the control).
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: GateKind
    params: Tuple[float, ...] = ()
    targets: Tuple[int, ...]
    matrix: Optional[np.ndarray] = None

    @field_validator("matrix", mode="before")
    @classmethod
    def _coerce_matrix(cls, value):
        return None if value is None else _frozen_array(value)

    @model_validator(mode="after")
    def _check_arity(self):
        validate_gate_spec(self.kind, self.params, self.targets, self.matrix)
        return self


def rx(theta: float, target: int = 0) -> GateSpec:
    return GateSpec(kind=GateKind.RX, params=(theta,), targets=(target,))


def ry(theta: float, target: int = 0) -> GateSpec:
    return GateSpec(kind=GateKind.RY, params=(theta,), targets=(target,))


def rz(theta: float, target: int = 0) -> GateSpec:
    return GateSpec(kind=GateKind.RZ, params=(theta,), targets=(target,))


def u3(theta: float, phi: float, lam: float, target: int = 0) -> GateSpec:
    return GateSpec(kind=GateKind.U3, params=(theta, phi, lam), targets=(target,))


def cnot(control: int, target: int) -> GateSpec:
    return GateSpec(kind=GateKind.CNOT, targets=(control, target))


def swap(a: int, b: int) -> GateSpec:
    return GateSpec(kind=GateKind.SWAP, targets=(a, b))


def cswap(control: int, a: int, b: int) -> GateSpec:
    return GateSpec(kind=GateKind.CSWAP, targets=(control, a, b))


def custom(matrix, targets) -> GateSpec:
    return GateSpec(kind=GateKind.CUSTOM, targets=tuple(targets), matrix=matrix)


class StateVector(BaseModel):
    """Normalized pure state; qubit 0 is the least significant bit of the basis index."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_qubits: int
    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _coerce(cls, value):
        return _frozen_array(value).reshape(-1)

    @model_validator(mode="after")
    def _check(self):
        if not 0 <= self.n_qubits <= MAX_QUBITS:
            raise ValidationError("n_qubits", f"Register size {self.n_qubits} outside [0, {MAX_QUBITS}]")
        if self.amplitudes.shape != (2 ** self.n_qubits,):
            raise ValidationError("amplitudes", f"Expected {2 ** self.n_qubits} amplitudes, got {self.amplitudes.size}")
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > ATOL:
            raise ValidationError("amplitudes", f"State norm {norm} is not 1")
        return self

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amplitudes = np.zeros(2 ** n_qubits, dtype=complex)
        amplitudes[0] = 1.0
        return cls(n_qubits=n_qubits, amplitudes=amplitudes)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amplitudes = np.zeros(2 ** n_qubits, dtype=complex)
        amplitudes[index] = 1.0
        return cls(n_qubits=n_qubits, amplitudes=amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


class DensityMatrix(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_qubits: int
    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _coerce(cls, value):
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check(self):
        dim = 2 ** self.n_qubits
        if self.entries.shape != (dim, dim):
            raise ValidationError("entries", f"Expected a {dim}x{dim} matrix, got {self.entries.shape}")
        if not is_hermitian(self.entries):
            raise ValidationError("entries", "Density matrix is not Hermitian")
        trace = np.trace(self.entries)
        if abs(trace - 1.0) > ATOL:
            raise ValidationError("entries", f"Density matrix trace {trace} is not 1")
        return self

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def is_physical(self) -> bool:
        return bool(self.eigenvalues().min() >= -SPECTRAL_ATOL)

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def rank(self, tol: float = 1e-8) -> int:
        return int(np.sum(self.eigenvalues() > tol))


class EncodingGenerator(BaseModel):
    """Hermitian generator H of an encoding gate g(x) = exp(-i x H)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    hermitian: np.ndarray
    eigenvalues: Tuple[float, ...]

    @field_validator("hermitian", mode="before")
    @classmethod
    def _coerce(cls, value):
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check(self):
        if not is_hermitian(self.hermitian):
            raise ValidationError("hermitian", "Encoding generator is not Hermitian")
        expected = np.linalg.eigvalsh(self.hermitian)
        if len(expected) != len(self.eigenvalues) or np.max(np.abs(expected - np.array(self.eigenvalues)), initial=0.0) > SPECTRAL_ATOL:
            raise ValidationError("eigenvalues", "Eigenvalues do not match the generator")
        return self

    @classmethod
    def from_hermitian(cls, hermitian) -> "EncodingGenerator":
        hermitian = np.asarray(hermitian, dtype=complex)
        return cls(hermitian=hermitian, eigenvalues=tuple(float(v) for v in np.linalg.eigvalsh(hermitian)))

    @property
    def dim(self) -> int:
        return self.hermitian.shape[0]
