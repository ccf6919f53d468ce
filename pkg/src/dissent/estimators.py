"""scikit-learn style wrappers around the scoring, weighting and debate code.

These let the pieces drop into pipelines and grid searches (for example a
sweep over ``beta`` or ``theta_u``); the functional API remains the primary
interface.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analytics import fit_decay
from .engine import DebateEngine, DebateTranscript
from .model import AgentOutput, HyperParams, TaskInput
from .uncertainty import assess_uncertainty

__all__ = ["DebateClassifier", "ExponentialDecayRegressor", "UncertaintyScorer", "UncertaintyWeighter"]


class UncertaintyScorer(TransformerMixin, BaseEstimator):
    """Map agent responses (strings or :class:`AgentOutput`) to a column of uncertainties."""

    def __init__(self, params: HyperParams | None = None):
        self.params = params

    def fit(self, X, y=None):
        self.n_features_in_ = 1
        return self

    def transform(self, X) -> np.ndarray:
        params = self.params or HyperParams()
        out = []
        for item in X:
            resp = item if hasattr(item, "text") else AgentOutput(str(item))
            out.append(assess_uncertainty(resp, params)[0])
        return np.asarray(out, dtype=float).reshape(-1, 1)


class UncertaintyWeighter(TransformerMixin, BaseEstimator):
    """Rows of per-agent uncertainties to rows of softmax weights ``exp(-beta U)``."""

    def __init__(self, beta: float = 1.5):
        self.beta = beta

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} agents per row, got {X.shape[1]}")
        if np.any(X < 0) or np.any(X > 1):
            raise ValueError("uncertainties must lie in [0, 1]")
        logits = -self.beta * X
        z = np.exp(logits - logits.max(axis=1, keepdims=True))
        return z / z.sum(axis=1, keepdims=True)


class ExponentialDecayRegressor(RegressorMixin, BaseEstimator):
    """Fit ``u = u0 exp(-lambda k)`` to (round, U_sys) pairs."""

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        if X.shape[1] != 1:
            raise ValueError("X must be a single column of round indices")
        y = np.asarray(y, dtype=float)
        self.fit_ = fit_decay(list(zip(X[:, 0], y)))
        self.u0_ = self.fit_.u0
        self.lambda_ = self.fit_.lambda_decay
        self.decay_rate_ = self.fit_.per_round_decay_rate
        self.n_features_in_ = 1
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "fit_")
        X = check_array(X, dtype=float)
        return self.fit_.predict(X[:, 0])


class DebateClassifier(ClassifierMixin, BaseEstimator):
    """Answer tasks by running a debate per task.

    ``engine_factory(params)`` builds the engine; hyperparameters given in
    ``param_overrides`` are applied on top of the defaults. ``fit`` only checks
    the inputs, since nothing is learned.
    """

    def __init__(self, engine_factory: Callable[[HyperParams], DebateEngine] | None = None,
                 param_overrides: dict | None = None):
        self.engine_factory = engine_factory
        self.param_overrides = param_overrides

    def _params(self) -> HyperParams:
        return HyperParams().with_overrides(**(self.param_overrides or {}))

    def fit(self, X: Sequence[TaskInput], y=None):
        if self.engine_factory is None:
            raise ValueError("DebateClassifier needs an engine_factory")
        tasks = list(X)
        if not all(isinstance(t, TaskInput) for t in tasks):
            raise TypeError("X must contain TaskInput objects")
        if y is not None and len(y) != len(tasks):
            raise ValueError("X and y differ in length")
        self.params_ = self._params()
        labels = sorted({lab for t in tasks if t.labels for lab in t.labels} | set(y if y is not None else ()))
        self.classes_ = np.asarray(labels, dtype=object)
        return self

    def predict(self, X: Sequence[TaskInput]) -> np.ndarray:
        check_is_fitted(self, "params_")
        engine = self.engine_factory(self.params_)
        self.transcripts_: list[DebateTranscript] = [engine.run(task, clock=None) for task in X]
        return np.asarray([t.final_answer for t in self.transcripts_], dtype=object)
