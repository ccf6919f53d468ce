"""Game-theoretic weighting: utilities, cooperative scores and softmax optima.

The deployed weighting rule ``w_i ∝ exp(-beta * U_i)`` is the maximizer of the
entropy-regularized objective ``sum_i w_i (1 - U_i) + (1/beta) H(w)`` over the
simplex; :func:`protocol_equivalence_check` verifies that numerically.
"""

from __future__ import annotations

import re
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._validation import as_unit_vector, as_vector, check_positive, check_same_length
from .model import HyperParams, WeightVector

__all__ = [
    "DEFAULT_STOPWORDS",
    "SimMatrix",
    "agent_utility",
    "confidence_weights",
    "cooperative_score",
    "cooperative_scores",
    "optimal_weights",
    "protocol_equivalence_check",
    "regularized_objective",
    "similarity",
    "softmax_weights",
    "total_utility",
]

DEFAULT_STOPWORDS = frozenset({"the", "a", "an", "of", "is", "are", "and", "or", "to", "in", "on"})
_WORD = re.compile(r"\w+")


@dataclass(frozen=True)
class SimMatrix:
    """Symmetric pairwise similarity matrix with unit diagonal."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise ValueError(f"similarity matrix must be square and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("similarities must lie in [0, 1]")
        if not np.array_equal(arr, arr.T):
            raise ValueError("similarity matrix must be symmetric")
        if not np.all(np.diag(arr) == 1.0):
            raise ValueError("similarity matrix diagonal must be 1")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, ij) -> float:
        return float(self.values[ij])

    @classmethod
    def from_texts(
        cls,
        texts: Sequence[str],
        sim: Callable[[str, str], float] | None = None,
        max_workers: int | None = None,
    ) -> SimMatrix:
        """Fill the upper triangle with ``sim`` (possibly concurrently) and mirror it."""
        sim = sim or similarity
        n = len(texts)
        pairs = list(combinations(range(n), 2))
        if max_workers and max_workers > 1 and pairs:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                scores = list(pool.map(lambda ij: sim(texts[ij[0]], texts[ij[1]]), pairs))
        else:
            scores = [sim(texts[i], texts[j]) for i, j in pairs]
        arr = np.eye(n)
        for (i, j), s in zip(pairs, scores):
            arr[i, j] = arr[j, i] = float(s)
        return cls(arr)


def _content_words(text: str, stopwords) -> set[str]:
    return {w for w in _WORD.findall(text.lower()) if w not in stopwords}


def similarity(a: str, b: str, stopwords=DEFAULT_STOPWORDS) -> float:
    """Jaccard coefficient of the case-folded content-word sets of ``a`` and ``b``.

    Texts made only of stopwords fall back to comparing their full token lists.
    """
    wa, wb = _content_words(a, stopwords), _content_words(b, stopwords)
    if not wa and not wb:
        return 1.0 if _WORD.findall(a.lower()) == _WORD.findall(b.lower()) else 0.0
    return len(wa & wb) / len(wa | wb)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max())
    return z / z.sum()


def _ids(agent_ids, n: int) -> tuple[str, ...]:
    if agent_ids is None:
        return tuple(str(i) for i in range(n))
    ids = tuple(agent_ids)
    if len(ids) != n:
        raise ValueError(f"dimension mismatch: {len(ids)} agent ids for {n} entries")
    return ids


def softmax_weights(uncertainties, beta: float, agent_ids=None) -> WeightVector:
    """Weights ``exp(-beta * U_i)``, normalized."""
    u = as_vector(uncertainties, "uncertainties")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    return WeightVector(_ids(agent_ids, u.size), tuple(_softmax(-beta * u)))


def confidence_weights(confidences, gamma: float, agent_ids=None) -> WeightVector:
    """Weights ``exp(gamma * C_i)`` over argument confidences, normalized."""
    c = as_unit_vector(confidences, "confidences")
    return WeightVector(_ids(agent_ids, c.size), tuple(_softmax(gamma * c)))


def _check_dims(sim: SimMatrix, uncertainties, weights=None) -> tuple[np.ndarray, np.ndarray | None]:
    u = as_vector(uncertainties, "uncertainties")
    check_same_length(u, range(sim.n), "uncertainties vs similarity matrix")
    w = None
    if weights is not None:
        w = weights.as_array() if isinstance(weights, WeightVector) else as_vector(weights, "weights")
        check_same_length(w, u, "weights vs uncertainties")
    return u, w


def agent_utility(i: int, sim: SimMatrix, uncertainties, weights, params: HyperParams) -> float:
    """Individual payoff: own weighted confidence, peer agreement, shared penalty."""
    u, w = _check_dims(sim, uncertainties, weights)
    if not 0 <= i < u.size:
        raise IndexError(f"agent index {i} out of range for {u.size} agents")
    u_sys = float(w @ u)
    others = np.arange(u.size) != i
    collab = float(w[others] @ sim.values[i, others])
    return w[i] * (1.0 - u[i]) + params.lambda_collab * collab - params.gamma_sys * u_sys


def total_utility(sim: SimMatrix, uncertainties, weights, params: HyperParams) -> float:
    """Sum of agent utilities via the closed form ``1 + λΣΣ w_j S_ij − (1+Nγ)U_sys``.

    The closed form uses ``sum(w) == 1``.
    """
    u, w = _check_dims(sim, uncertainties, weights)
    n = u.size
    off_diag = sim.values - np.diag(np.diag(sim.values))
    collab = float(off_diag.sum(axis=0) @ w)
    return 1.0 + params.lambda_collab * collab - (1.0 + n * params.gamma_sys) * float(w @ u)


def cooperative_scores(sim: SimMatrix, uncertainties, params: HyperParams) -> np.ndarray:
    u, _ = _check_dims(sim, uncertainties)
    n = u.size
    peer_sim = sim.values.sum(axis=0) - np.diag(sim.values)
    return params.lambda_collab * peer_sim - (1.0 + n * params.gamma_sys) * u


def cooperative_score(k: int, sim: SimMatrix, uncertainties, params: HyperParams) -> float:
    """Agent ``k``'s coefficient in the linearized total utility."""
    scores = cooperative_scores(sim, uncertainties, params)
    if not 0 <= k < scores.size:
        raise IndexError(f"agent index {k} out of range for {scores.size} agents")
    return float(scores[k])


def optimal_weights(scores, eta: float, agent_ids=None) -> WeightVector:
    """Maximizer of :func:`regularized_objective`: ``softmax(eta * scores)``."""
    s = as_vector(scores, "scores")
    check_positive(eta, "eta")
    return WeightVector(_ids(agent_ids, s.size), tuple(_softmax(eta * s)))


def regularized_objective(weights, scores, eta: float) -> float:
    """``Σ w_k Score_k − (1/η) Σ w_k ln w_k`` with ``0 ln 0 = 0``."""
    w = weights.as_array() if isinstance(weights, WeightVector) else as_vector(weights, "weights")
    s = as_vector(scores, "scores")
    check_same_length(w, s, "weights vs scores")
    check_positive(eta, "eta")
    pos = w > 0
    neg_entropy = float(np.sum(w[pos] * np.log(w[pos])))
    return float(w @ s) - neg_entropy / eta


def protocol_equivalence_check(uncertainties, beta: float, tolerance: float = 1e-12) -> bool:
    """True iff the confidence-score optimum equals the uncertainty softmax.

    Scores ``1 - U_i`` at temperature ``beta`` differ from ``-U_i`` by a constant,
    which softmax ignores, so both weight vectors must agree componentwise.
    """
    if not beta > 0:
        raise ValueError("beta must be > 0")
    u = as_vector(uncertainties, "uncertainties")
    optimum = optimal_weights(1.0 - u, eta=beta).as_array()
    protocol = softmax_weights(u, beta).as_array()
    return bool(np.all(np.abs(optimum - protocol) <= tolerance))

