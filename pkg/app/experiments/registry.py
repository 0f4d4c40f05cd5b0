import importlib
import inspect
from pathlib import Path
from typing import Any, Dict, Optional, Type

from app.core.config import get_settings
from app.core.logging_config import get_logger
from app.experiments.base.base_experiment import BaseExperiment
from app.models.experiment import ExperimentName
from app.utils.error_handlers import ConfigurationError


class ExperimentRegistry:
    """
    Registry for automatic experiment discovery.

    Every module in this package may define BaseExperiment subclasses; they are
    instantiated once and indexed by command name. ACTIVE_EXPERIMENTS restricts the
    loaded set to a comma-separated list of names.
    """

    def __init__(self):
        self.logger = get_logger('app.experiments.registry')
        self._experiments: Dict[str, BaseExperiment] = {}
        self._experiment_classes: Dict[str, Type[BaseExperiment]] = {}
        self.settings = get_settings()

        self._discover_experiments()
        self._load_active_experiments()
        self.logger.debug(f"✅ Experiment registry initialized with {len(self._experiments)} experiments")

    def _discover_experiments(self):
        """Import every module next to this file and collect BaseExperiment subclasses"""
        package_dir = Path(__file__).parent
        skip = {'registry.py', 'records.py', '__init__.py'}

        for py_file in sorted(package_dir.glob("*.py")):
            if py_file.name.startswith('_') or py_file.name in skip:
                continue
            module_name = f"app.experiments.{py_file.stem}"
            try:
                module = importlib.import_module(module_name)
            except Exception as e:
                self.logger.error(f"❌ Failed to import {py_file.name}: {str(e)}")
                continue

            for name, obj in inspect.getmembers(module, inspect.isclass):
                if issubclass(obj, BaseExperiment) and obj is not BaseExperiment and obj.__module__ == module_name:
                    experiment_name = obj().get_experiment_name()
                    if experiment_name in self._experiment_classes:
                        self.logger.warning(f"⚠️ Duplicate experiment name '{experiment_name}' found in {name}")
                        continue
                    self._experiment_classes[experiment_name] = obj
                    self.logger.debug(f"🔍 Discovered experiment: {experiment_name} ({name})")

    def _load_active_experiments(self):
        requested = self.settings.active_experiments
        if requested:
            names = [n.strip().lower() for n in requested.split(',') if n.strip()]
            unknown = [n for n in names if n not in self._experiment_classes]
            if unknown:
                self.logger.warning(f"⚠️ Unknown experiments in ACTIVE_EXPERIMENTS: {unknown}")
            names = [n for n in names if n in self._experiment_classes]
        else:
            names = list(self._experiment_classes)

        for name in names:
            self._experiments[name] = self._experiment_classes[name]()

    def get_for(self, experiment: ExperimentName) -> BaseExperiment:
        """The active experiment handling a configured experiment name."""
        for instance in self._experiments.values():
            if experiment in instance.handles():
                return instance
        raise ConfigurationError(f"No active experiment handles '{experiment.value}'",
                                 details={"active": list(self._experiments)})

    def get_active_experiments(self) -> Dict[str, BaseExperiment]:
        return self._experiments.copy()

    def get_registry_info(self) -> Dict[str, Any]:
        return {
            "total_discovered": len(self._experiment_classes),
            "total_active": len(self._experiments),
            "active_experiments": list(self._experiments),
            "inactive_experiments": sorted(set(self._experiment_classes) - set(self._experiments)),
            "active_experiments_env": self.settings.active_experiments,
        }

    def __str__(self) -> str:
        return f"ExperimentRegistry(active={len(self._experiments)}, discovered={len(self._experiment_classes)})"


_registry_instance: Optional[ExperimentRegistry] = None


def get_experiment_registry() -> ExperimentRegistry:
    global _registry_instance
    if _registry_instance is None:
        _registry_instance = ExperimentRegistry()
    return _registry_instance
