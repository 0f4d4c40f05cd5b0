import math
from typing import List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.circuit import MAX_QUBITS, GateSpec
from app.utils.error_handlers import ConfigurationError, ValidationError


class Permutation(BaseModel):
    """Gate order: slots[n] is the gate inserted in slot n (0-based)."""
    model_config = ConfigDict(frozen=True)

    slots: Tuple[int, ...]

    @model_validator(mode="after")
    def _check_bijection(self):
        if sorted(self.slots) != list(range(len(self.slots))):
            raise ValidationError("slots", f"{self.slots} is not a permutation of 0..{len(self.slots) - 1}")
        return self

    @classmethod
    def of(cls, *slots: int) -> "Permutation":
        return cls(slots=tuple(int(s) for s in slots))

    @property
    def n(self) -> int:
        return len(self.slots)

    def gate_at(self, slot: int) -> int:
        return self.slots[slot]

    def slot_of(self, gate: int) -> int:
        return self.slots.index(gate)

    def inverse(self) -> "Permutation":
        inverse = [0] * self.n
        for slot, gate in enumerate(self.slots):
            inverse[gate] = slot
        return Permutation(slots=tuple(inverse))

    def next_gate(self, gate: int) -> int:
        """Gate of the slot after the one holding `gate`, cyclic over slots."""
        return self.slots[(self.slot_of(gate) + 1) % self.n]

    def __str__(self) -> str:
        return str(list(self.slots))


class SwitchLayout(BaseModel):
    """
    Qubit allocation of an N-switch register, lowest qubits first:
    target t, working systems t_1..t_N, control c, ancilla alpha, history C_H.
    """
    model_config = ConfigDict(frozen=True)

    n_gates: int = Field(ge=2, le=4)
    n_target_qubits: int = Field(default=1, ge=1)
    include_history: bool = True

    @model_validator(mode="after")
    def _check_size(self):
        if self.n_qubits > MAX_QUBITS:
            raise ConfigurationError(
                f"{self.n_gates}-switch on {self.n_target_qubits} target qubits needs {self.n_qubits} qubits "
                f"(limit {MAX_QUBITS})",
                details={"n_qubits": self.n_qubits},
            )
        return self

    @property
    def n_orders(self) -> int:
        return math.factorial(self.n_gates)

    @property
    def n_alpha(self) -> int:
        return math.ceil(math.log2(self.n_orders))

    @property
    def n_c(self) -> int:
        return math.ceil(math.log2(self.n_gates))

    @property
    def n_history(self) -> int:
        return self.n_gates if self.include_history else 0

    @property
    def n_qubits(self) -> int:
        return self.n_target_qubits * (self.n_gates + 1) + self.n_alpha + self.n_c + self.n_history

    @property
    def target_qubits(self) -> List[int]:
        return list(range(self.n_target_qubits))

    def working_qubits(self, k: int) -> List[int]:
        start = self.n_target_qubits * (1 + k)
        return list(range(start, start + self.n_target_qubits))

    @property
    def control_start(self) -> int:
        return self.n_target_qubits * (self.n_gates + 1)

    @property
    def control_qubits(self) -> List[int]:
        return list(range(self.control_start, self.control_start + self.n_c))

    @property
    def ancilla_start(self) -> int:
        return self.control_start + self.n_c

    @property
    def ancilla_qubits(self) -> List[int]:
        return list(range(self.ancilla_start, self.ancilla_start + self.n_alpha))

    @property
    def history_start(self) -> int:
        return self.ancilla_start + self.n_alpha

    @property
    def history_qubits(self) -> List[int]:
        return list(range(self.history_start, self.history_start + self.n_history))

    @property
    def effective_orders(self) -> List[int]:
        """E: ancilla basis labels encoding permutations."""
        return list(range(self.n_orders))

    @property
    def redundant_orders(self) -> List[int]:
        """R: padding ancilla labels."""
        return list(range(self.n_orders, 2 ** self.n_alpha))

    @property
    def effective_controls(self) -> List[int]:
        """cE: control labels naming a gate."""
        return list(range(self.n_gates))

    @property
    def redundant_controls(self) -> List[int]:
        """cR: padding control labels."""
        return list(range(self.n_gates, 2 ** self.n_c))

    def field(self, index: np.ndarray, start: int, width: int) -> np.ndarray:
        """Integer value of the register field [start, start + width) of basis indices."""
        return (np.asarray(index) >> start) & ((1 << width) - 1)

    def sector_shape(self) -> Tuple[int, int, int, int]:
        """C-order reshape of the register into (history, ancilla, middle, target) axes."""
        middle = 2 ** (self.ancilla_start - self.n_target_qubits)
        return (2 ** self.n_history, 2 ** self.n_alpha, middle, 2 ** self.n_target_qubits)


class BasisOrder(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["basis"] = "basis"
    order: Permutation


class Mixture(BaseModel):
    """Classical order control: probabilities p_pi over ancilla labels in E."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["mixture"] = "mixture"
    probabilities: Tuple[float, ...]

    @field_validator("probabilities")
    @classmethod
    def _check(cls, value):
        if any(p < 0 for p in value):
            raise ValidationError("probabilities", "Mixture probabilities must be non-negative")
        if abs(sum(value) - 1.0) > 1e-12:
            raise ValidationError("probabilities", f"Mixture probabilities sum to {sum(value)}")
        return value


class Superposition(BaseModel):
    """Quantum order control: amplitudes c_i over ancilla labels in E."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["superposition"] = "superposition"
    amplitudes: Tuple[complex, ...]

    @field_validator("amplitudes")
    @classmethod
    def _check(cls, value):
        norm = sum(abs(c) ** 2 for c in value)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError("amplitudes", f"Superposition has squared norm {norm}")
        return value


class PreparationBlock(BaseModel):
    """Gates applied to |0...0> on the ancilla; targets are absolute register indices."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["block"] = "block"
    gates: Tuple[GateSpec, ...]


ControlPrep = Union[BasisOrder, Mixture, Superposition, PreparationBlock]
