import time
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Union

import pandas as pd

from app.core.logging_config import get_logger, log_run_end, log_run_start
from app.experiments.records import plain, write_record
from app.models.experiment import ExperimentConfig, ExperimentName, RunRecord
from app.utils.error_handlers import ConfigurationError, ToleranceError, handle_experiment_errors

ARTIFACT_VERSION = "1.0.0"


class ExperimentOutcome:
    """What an experiment hands back to the runner: metrics, tables and failed checks."""

    def __init__(self):
        self.metrics: Dict[str, Any] = {}
        self.tables: Dict[str, pd.DataFrame] = {}
        self.params: Dict[str, List[float]] = {}
        self.failures: List[str] = []

    def check(self, case: str, deviation: float, tolerance: float) -> bool:
        """Record a deviation metric and flag the case when it exceeds the tolerance."""
        self.metrics[f"{case}_max_deviation"] = float(deviation)
        passed = bool(deviation < tolerance)
        if not passed:
            self.failures.append(ToleranceError(case, float(deviation), tolerance).message)
        return passed

    def require(self, case: str, condition: bool, message: str = "") -> bool:
        if not condition:
            self.failures.append(f"{case}: {message}" if message else case)
        return bool(condition)

    @property
    def passed(self) -> bool:
        return not self.failures


class BaseExperiment(ABC):
    """
    Abstract base class for all experiments.

    Subclasses declare which configured experiments they handle and implement execute();
    run() adds logging, timing and the on-disk record.
    """

    def __init__(self):
        self.logger = get_logger(f'app.experiments.{self.get_experiment_name()}')

    @abstractmethod
    def get_experiment_name(self) -> str:
        """
        Return the command name of this experiment (e.g. "two-switch", "selftest").
        """
        pass

    @abstractmethod
    def get_experiment_description(self) -> str:
        pass

    @abstractmethod
    def handles(self) -> FrozenSet[ExperimentName]:
        """Configured experiment names this class runs."""
        pass

    @abstractmethod
    def execute(self, config: ExperimentConfig) -> ExperimentOutcome:
        pass

    def get_experiment_version(self) -> str:
        return ARTIFACT_VERSION

    def get_experiment_metadata(self) -> Dict[str, Any]:
        return {
            "name": self.get_experiment_name(),
            "description": self.get_experiment_description(),
            "version": self.get_experiment_version(),
            "handles": sorted(e.value for e in self.handles()),
        }

    def validate_config(self, config: ExperimentConfig) -> None:
        if config.experiment not in self.handles():
            raise ConfigurationError(
                f"{self.get_experiment_name()} cannot run '{config.experiment.value}'",
                details={"handles": sorted(e.value for e in self.handles())},
            )

    def run(self, config: ExperimentConfig, out_root: Optional[Union[str, Path]] = None) -> RunRecord:
        """Execute, then write the record under out_root/<run_id> when out_root is given."""
        return handle_experiment_errors(self.get_experiment_name())(self._run)(config, out_root)

    def _run(self, config: ExperimentConfig, out_root: Optional[Union[str, Path]]) -> RunRecord:
        self.validate_config(config)
        run_id = log_run_start(self.logger, config.experiment.value, config.to_echo())
        started = datetime.now(timezone.utc)
        clock = time.perf_counter()

        outcome = self.execute(config)

        record = RunRecord(
            run_id=run_id,
            experiment=config.experiment,
            artifact_version=self.get_experiment_version(),
            config=config.to_echo(),
            started_at=started,
            finished_at=datetime.now(timezone.utc),
            duration_s=time.perf_counter() - clock,
            passed=outcome.passed,
            failures=outcome.failures,
            metrics=plain(outcome.metrics),
            params=plain(outcome.params),
            tables=sorted(outcome.tables),
        )
        for failure in outcome.failures:
            self.logger.error(f"❌ {failure}")
        if out_root is not None:
            write_record(record, outcome.tables, Path(out_root) / run_id)
        log_run_end(self.logger, run_id, record.passed, record.metrics)
        return record

    def __str__(self) -> str:
        return f"{self.__class__.__name__}({self.get_experiment_name()})"

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name='{self.get_experiment_name()}', version='{self.get_experiment_version()}')"
