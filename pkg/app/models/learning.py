import math
from enum import Enum
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.circuit import ATOL, is_hermitian
from app.utils.error_handlers import ValidationError

CIRCLE_RADIUS_SQ = 2 / math.pi

# smoothed: mean sigmoid(-y e / smoothing), a differentiable stand-in for the error rate
Objective = Literal["smoothed", "accuracy", "hinge"]


def circle_label(x1: float, x2: float) -> int:
    """+1 outside the circle of radius sqrt(2/pi), -1 inside or on it."""
    return 1 if x1 * x1 + x2 * x2 - CIRCLE_RADIUS_SQ > 0 else -1


class LabeledSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    x1: float = Field(ge=-1.0, le=1.0)
    x2: float = Field(ge=-1.0, le=1.0)
    label: Literal[-1, 1]

    @model_validator(mode="after")
    def _check_label(self):
        if self.label != circle_label(self.x1, self.x2):
            raise ValidationError("label", f"Label {self.label} contradicts the circle rule at ({self.x1}, {self.x2})")
        return self


class ModelKind(str, Enum):
    FIXED = "fixed"
    CLASSICAL = "classical"
    QUANTUM = "quantum"
    REUPLOAD = "reupload"


# Trainable parameter count per model
PARAM_COUNT = {
    ModelKind.FIXED: 3,
    ModelKind.CLASSICAL: 12,
    ModelKind.QUANTUM: 12,
    ModelKind.REUPLOAD: 6,
}


class Observable3Switch(BaseModel):
    """
    Measured operator of a classifier: ancilla_operator (x) 1 (x) target_operator on the
    switch register, or target_operator alone on the single model qubit for fixed and
    re-uploading models.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: ModelKind
    target_operator: np.ndarray
    ancilla_operator: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _check(self):
        if not is_hermitian(self.target_operator, ATOL):
            raise ValidationError("target_operator", "Target operator is not Hermitian")
        switched = self.mode in (ModelKind.CLASSICAL, ModelKind.QUANTUM)
        if switched and self.ancilla_operator is None:
            raise ValidationError("ancilla_operator", f"{self.mode.value} observable needs an ancilla part")
        if not switched and self.ancilla_operator is not None:
            raise ValidationError("ancilla_operator", f"{self.mode.value} observable acts on the model qubit only")
        if self.ancilla_operator is not None and not is_hermitian(self.ancilla_operator, ATOL):
            raise ValidationError("ancilla_operator", "Ancilla operator is not Hermitian")
        return self


class ModelParams(BaseModel):
    """
    gate_params = (theta, phi, lam) of the variational U3. Switch models add nine
    prep_params for the ancilla block; the re-uploading baseline adds a second layer.
    """
    model_config = ConfigDict(frozen=True)

    mode: ModelKind
    gate_params: Tuple[float, float, float]
    prep_params: Optional[Tuple[float, ...]] = None
    second_layer: Optional[Tuple[float, float, float]] = None

    @model_validator(mode="after")
    def _check_arity(self):
        switched = self.mode in (ModelKind.CLASSICAL, ModelKind.QUANTUM)
        if switched != (self.prep_params is not None):
            raise ValidationError("prep_params", f"{self.mode.value} model {'needs' if switched else 'takes no'} "
                                                 f"preparation parameters")
        if switched and len(self.prep_params) != 9:
            raise ValidationError("prep_params", f"Expected 9 preparation parameters, got {len(self.prep_params)}")
        if (self.mode is ModelKind.REUPLOAD) != (self.second_layer is not None):
            raise ValidationError("second_layer", "Only the re-uploading model has a second layer")
        return self

    @classmethod
    def from_vector(cls, mode: ModelKind, vector) -> "ModelParams":
        vector = [float(v) for v in np.asarray(vector, dtype=float).ravel()]
        if len(vector) != PARAM_COUNT[mode]:
            raise ValidationError("params", f"{mode.value} model takes {PARAM_COUNT[mode]} parameters, got {len(vector)}")
        if not all(np.isfinite(vector)):
            raise ValidationError("params", "Parameters must be finite")
        fields = {"mode": mode, "gate_params": tuple(vector[:3])}
        if mode in (ModelKind.CLASSICAL, ModelKind.QUANTUM):
            fields["prep_params"] = tuple(vector[3:])
        elif mode is ModelKind.REUPLOAD:
            fields["second_layer"] = tuple(vector[3:])
        return cls(**fields)

    def to_vector(self) -> np.ndarray:
        return np.array(list(self.gate_params) + list(self.prep_params or ()) + list(self.second_layer or ()))


class TrainConfig(BaseModel):
    mode: ModelKind
    seed: int = 0
    dataset_seed: int = 7
    n_train: int = 200
    n_test: int = 200
    budget: int = 2000
    rhobeg: float = 1.0
    objective: Objective = "smoothed"
    smoothing: float = Field(0.1, gt=0.0)
    margin: float = 0.1
    initial_params: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.budget <= 0:
            raise ValidationError("budget", f"Evaluation budget must be positive, got {self.budget}")
        if self.n_train <= 0 or self.n_test <= 0:
            raise ValidationError("n_train", "Dataset sizes must be positive")
        if self.initial_params is not None and len(self.initial_params) != PARAM_COUNT[self.mode]:
            raise ValidationError("initial_params", f"{self.mode.value} model takes {PARAM_COUNT[self.mode]} parameters")
        return self


class TrainResult(BaseModel):
    mode: ModelKind
    seed: int
    params: List[float]
    train_accuracy: float = Field(ge=0.0, le=1.0)
    test_accuracy: float = Field(ge=0.0, le=1.0)
    n_evaluations: int
    objective: float
    trace: List[float] = Field(default_factory=list)

    @field_validator("trace")
    @classmethod
    def _check_trace(cls, value):
        if any(b > a for a, b in zip(value, value[1:])):
            raise ValidationError("trace", "Best-so-far trace must be non-increasing")
        return value
