"""
Derivative-free training of the circle classifiers with scipy's COBYLA.

The optimizer sees a sigmoid-smoothed error rate by default, -accuracy (a step function)
or a hinge loss on the margin y * e. Every evaluation is counted against the budget and
the best parameters seen so far are returned, so a start point that is never beaten comes
back unchanged.
"""
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from app.core.logging_config import get_logger
from app.learning.classifier import accuracy, classify_batch, dataset_arrays, forward_batch, generate_dataset
from app.models.learning import PARAM_COUNT, ModelKind, TrainConfig, TrainResult
from app.utils.error_handlers import ValidationError, log_call

logger = get_logger('app.learning.trainer')

TEST_SEED_OFFSET = 1000


class _BudgetExhausted(Exception):
    pass


class _BestTracker:
    """Objective wrapper recording evaluations and the best-so-far point."""

    def __init__(self, objective: Callable[[np.ndarray], float], budget: int):
        self.objective = objective
        self.budget = budget
        self.n_evaluations = 0
        self.best_x: Optional[np.ndarray] = None
        self.best_value = np.inf
        self.trace: List[float] = []

    def __call__(self, x: np.ndarray) -> float:
        if self.n_evaluations >= self.budget:
            raise _BudgetExhausted()
        value = float(self.objective(np.asarray(x, dtype=float)))
        self.n_evaluations += 1
        if value < self.best_value:
            self.best_value = value
            self.best_x = np.array(x, dtype=float)
        self.trace.append(self.best_value)
        return value


def make_objective(cfg: TrainConfig, X: np.ndarray, y: np.ndarray) -> Callable[[np.ndarray], float]:
    mode = cfg.mode

    def negative_accuracy(params: np.ndarray) -> float:
        return -float(np.mean(classify_batch(forward_batch(mode, params, X)) == y))

    def hinge(params: np.ndarray) -> float:
        margins = y * forward_batch(mode, params, X)
        return float(np.mean(np.maximum(0.0, cfg.margin - margins)))

    def smoothed(params: np.ndarray) -> float:
        margins = y * forward_batch(mode, params, X)
        return float(np.mean(expit(-margins / cfg.smoothing)))

    return {"accuracy": negative_accuracy, "hinge": hinge, "smoothed": smoothed}[cfg.objective]


def start_params(cfg: TrainConfig) -> np.ndarray:
    if cfg.initial_params is not None:
        return np.array(cfg.initial_params, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    return rng.uniform(-np.pi, np.pi, size=PARAM_COUNT[cfg.mode])


def train(cfg: TrainConfig) -> TrainResult:
    """One COBYLA run from a seeded start on the shared training set."""
    train_set = generate_dataset(cfg.n_train, cfg.dataset_seed)
    test_set = generate_dataset(cfg.n_test, cfg.dataset_seed + TEST_SEED_OFFSET)
    X, y = dataset_arrays(train_set)

    tracker = _BestTracker(make_objective(cfg, X, y), cfg.budget)
    x0 = start_params(cfg)
    # COBYLA evaluates x0 first, so the start is the first tracked point
    try:
        minimize(tracker, x0, method="COBYLA", options={"maxiter": cfg.budget, "rhobeg": cfg.rhobeg})
    except _BudgetExhausted:
        logger.debug(f"⏱️ {cfg.mode.value} seed {cfg.seed}: budget of {cfg.budget} evaluations exhausted")

    best = tracker.best_x
    result = TrainResult(
        mode=cfg.mode,
        seed=cfg.seed,
        params=[float(v) for v in best],
        train_accuracy=accuracy(cfg.mode, best, train_set),
        test_accuracy=accuracy(cfg.mode, best, test_set),
        n_evaluations=tracker.n_evaluations,
        objective=tracker.best_value,
        trace=tracker.trace,
    )
    logger.info(f"🎯 {cfg.mode.value} seed {cfg.seed}: train {result.train_accuracy:.3f}, "
                f"test {result.test_accuracy:.3f} after {result.n_evaluations} evaluations")
    return result


@log_call("training restarts")
def train_restarts(mode: ModelKind, restarts: int, budget: int, seed: int = 0, n_workers: int = 1,
                   **overrides) -> List[TrainResult]:
    """Independent restarts seeded seed, seed + 1, ...; all share one training set."""
    if restarts <= 0:
        raise ValidationError("restarts", f"Number of restarts must be positive, got {restarts}")
    configs = [TrainConfig(mode=mode, seed=seed + i, budget=budget, **overrides) for i in range(restarts)]
    logger.info(f"🚀 Training {mode.value} model: {restarts} restarts x {budget} evaluations, {n_workers} workers")
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(train, configs))
    return [train(cfg) for cfg in configs]


def best_result(results: List[TrainResult]) -> TrainResult:
    """Restart with the highest training accuracy; ties go to the lower objective, then the earlier seed."""
    if not results:
        raise ValidationError("results", "No training results to choose from")
    return min(results, key=lambda r: (-r.train_accuracy, r.objective, r.seed))
