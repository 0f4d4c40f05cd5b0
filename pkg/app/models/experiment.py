from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, Field, model_validator

from app.models.learning import ModelKind, Objective
from app.utils.error_handlers import ConfigurationError


class ExperimentName(str, Enum):
    TWO_SWITCH_FORMS = "two_switch_forms"
    FOURIER_SCAN = "fourier_scan"
    THREE_SWITCH_TRAIN = "three_switch_train"
    THREE_SWITCH_REPLAY = "three_switch_replay"
    REUPLOADING_BASELINE = "reuploading_baseline"
    SELFTEST = "selftest"


_MODE_REQUIRED = {ExperimentName.THREE_SWITCH_TRAIN, ExperimentName.THREE_SWITCH_REPLAY}


class ExperimentConfig(BaseModel):
    """Effective configuration of one run; echoed in full into its record."""

    experiment: ExperimentName
    mode: Optional[ModelKind] = None
    seed: int = 1234
    dataset_seed: int = 7
    budget: int = 2000
    restarts: int = 10
    n_workers: int = 1
    objective: Objective = "smoothed"
    x_points: int = 101
    theta_points: int = 25
    grid_points: int = 5
    n_draws: int = 20
    n_random_gates: int = 100
    boundary_points: int = 101
    inject_fault: bool = False

    @model_validator(mode="after")
    def _check_combination(self):
        if self.experiment in _MODE_REQUIRED:
            if self.mode not in (ModelKind.FIXED, ModelKind.CLASSICAL, ModelKind.QUANTUM):
                raise ConfigurationError(f"{self.experiment.value} needs mode fixed, classical or quantum",
                                         details={"mode": self.mode})
        elif self.mode is not None:
            raise ConfigurationError(f"{self.experiment.value} takes no order-control mode",
                                     details={"mode": self.mode.value})
        if self.inject_fault and self.experiment is not ExperimentName.SELFTEST:
            raise ConfigurationError("Fault injection is a selftest option")
        if self.experiment is ExperimentName.THREE_SWITCH_REPLAY and self.mode is ModelKind.REUPLOAD:
            raise ConfigurationError("No replay parameters exist for the re-uploading model")
        for name in ("budget", "restarts", "n_workers", "x_points", "theta_points", "grid_points", "n_draws",
                     "n_random_gates", "boundary_points"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive", details={name: getattr(self, name)})
        return self

    @classmethod
    def from_yaml(cls, path: Union[str, Path], defaults: Optional[Dict[str, Any]] = None,
                  **overrides: Any) -> "ExperimentConfig":
        """`defaults`, then file values, then non-None overrides."""
        with open(path, "r", encoding="utf-8") as handle:
            loaded = yaml.safe_load(handle) or {}
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"Config file {path} does not hold a mapping")
        data = dict(defaults or {})
        data.update(loaded)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class RunRecord(BaseModel):
    run_id: str
    experiment: ExperimentName
    artifact_version: str
    config: Dict[str, Any]
    started_at: datetime
    finished_at: datetime
    duration_s: float
    passed: bool
    failures: List[str] = Field(default_factory=list)
    metrics: Dict[str, Any] = Field(default_factory=dict)
    params: Dict[str, List[float]] = Field(default_factory=dict)
    tables: List[str] = Field(default_factory=list)
