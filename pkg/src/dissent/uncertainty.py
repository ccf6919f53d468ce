"""Per-response uncertainty scores.

Two estimators are provided. ``phi_gen_plus`` scores the generation process
from per-position token distributions. ``phi_sem`` scores the text by hedge
markers and is the fallback when no distributions are available.
"""

from __future__ import annotations

import functools
import math
import re
from collections.abc import Sequence

from .model import HyperParams, MarkerLexicon, TokenDistribution

__all__ = [
    "EmptyGeneration",
    "assess_uncertainty",
    "marker_density",
    "normalized_entropy",
    "phi_gen_plus",
    "phi_sem",
    "sigmoid",
    "token_entropy",
    "top_gap",
]


class EmptyGeneration(ValueError):
    """No token distributions were supplied; use the semantic estimator."""


def token_entropy(dist: TokenDistribution) -> float:
    """Shannon entropy in nats over the listed support."""
    return -math.fsum(p * math.log(p) for _, p in dist.probabilities if p > 0.0)


def normalized_entropy(dist: TokenDistribution) -> float:
    """Entropy divided by ``ln(vocab_size_hint)``; 0 when the hint is 1."""
    if dist.vocab_size_hint <= 1:
        return 0.0
    return token_entropy(dist) / math.log(dist.vocab_size_hint)


def top_gap(dist: TokenDistribution) -> float:
    """Probability margin between the two most likely tokens."""
    probs = dist.probabilities
    second = probs[1][1] if len(probs) > 1 else 0.0
    return probs[0][1] - second


def phi_gen_plus(dists: Sequence[TokenDistribution], params: HyperParams | None = None) -> float:
    """Mean over positions of ``alpha * H + beta * max(0, 1 - gap)``.

    With ``params.normalize_entropy`` (the default) the entropy is divided by
    ``ln(vocab_size_hint)`` and ``alpha + beta`` must equal 1, which keeps the
    score in [0, 1]. The raw-entropy variant can exceed 1.

    Raises:
        EmptyGeneration: if ``dists`` is empty.
    """
    params = params or HyperParams()
    if not dists:
        raise EmptyGeneration("no token distributions to score")
    alpha, beta = params.alpha_phi, params.beta_phi
    if params.normalize_entropy and abs(alpha + beta - 1.0) > 1e-9:
        raise ValueError(f"alpha_phi + beta_phi must equal 1 for normalized scoring, got {alpha + beta}")
    entropy = normalized_entropy if params.normalize_entropy else token_entropy
    total = math.fsum(alpha * entropy(d) + beta * max(0.0, 1.0 - top_gap(d)) for d in dists)
    return total / len(dists)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@functools.lru_cache(maxsize=32)
def _marker_pattern(lexicon: MarkerLexicon) -> re.Pattern:
    # longest phrase first so the alternation prefers it at any position
    phrases = sorted(lexicon.entries, key=lambda p: (-len(p), p))
    alternatives = "|".join(r"\s+".join(map(re.escape, p.split(" "))) for p in phrases)
    return re.compile(rf"(?<!\w)(?:{alternatives})(?!\w)", re.IGNORECASE)


def marker_density(text: str, lexicon: MarkerLexicon) -> float:
    """Weighted hedge-marker count per whitespace token (length floor 1)."""
    if not text:
        return 0.0
    pattern = _marker_pattern(lexicon)
    score = 0.0
    for match in pattern.finditer(text):
        phrase = re.sub(r"\s+", " ", match.group(0).lower())
        score += lexicon.entries[phrase]
    return score / max(1, len(text.split()))


def phi_sem(text: str, params: HyperParams | None = None) -> float:
    params = params or HyperParams()
    rho = marker_density(text, params.lexicon)
    return sigmoid(params.sem_k * (rho - params.sem_offset))


def assess_uncertainty(resp, params: HyperParams | None = None) -> tuple[float, str]:
    """Score a response, preferring token distributions over text markers.

    ``resp`` is anything with ``text`` and ``token_distributions`` attributes
    (an :class:`~dissent.model.AgentOutput` or a ``ResponseRecord``).

    Returns:
        ``(uncertainty, source)`` where source is ``"generation"`` or ``"semantic"``.
    """
    params = params or HyperParams()
    dists = getattr(resp, "token_distributions", None)
    if dists:
        try:
            score = phi_gen_plus(dists, params)
        except EmptyGeneration:
            pass
        else:
            # the raw-entropy variant is unbounded; records must stay in [0, 1]
            return min(1.0, max(0.0, score)), "generation"
    return phi_sem(resp.text, params), "semantic"
