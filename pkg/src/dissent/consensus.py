"""Debate gating: system uncertainty, conflict, trigger, disputes, termination."""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Callable, Sequence
from itertools import combinations

from ._validation import check_same_length
from .game import similarity as default_similarity
from .model import (
    DisputeItem,
    DisputeSet,
    HyperParams,
    ResponseRecord,
    TerminationReason,
    WeightVector,
    normalize_text,
)

__all__ = [
    "conflict_score",
    "identify_disputes",
    "should_debate",
    "should_terminate",
    "system_uncertainty",
]


def system_uncertainty(weights: WeightVector, uncertainties) -> float:
    """Weighted mean uncertainty ``Σ w_i U_i``.

    ``uncertainties`` is either a sequence aligned with ``weights`` or a mapping
    from agent id to uncertainty.
    """
    if isinstance(uncertainties, dict):
        missing = set(weights.agent_ids) - set(uncertainties)
        if missing or len(uncertainties) != len(weights):
            raise ValueError(f"dimension mismatch: weights over {sorted(weights.agent_ids)}, "
                             f"uncertainties over {sorted(uncertainties)}")
        values = [uncertainties[a] for a in weights.agent_ids]
    else:
        values = list(uncertainties)
        check_same_length(values, weights.weights, "weights vs uncertainties")
    return math.fsum(w * u for w, u in zip(weights.weights, values))


def conflict_score(
    responses: Sequence[ResponseRecord],
    sim: Callable[[str, str], float] = default_similarity,
) -> float:
    """Disagreement in [0, 1] among agent responses.

    If every response carries an extracted final answer, this is the fraction
    of agent pairs whose answers differ. Otherwise it is one minus the mean
    pairwise text similarity.
    """
    if len(responses) < 2:
        raise ValueError("conflict needs at least two responses")
    pairs = list(combinations(responses, 2))
    if all(r.answer is not None for r in responses):
        disagree = sum(normalize_text(a.answer) != normalize_text(b.answer) for a, b in pairs)
        return disagree / len(pairs)
    mean_sim = math.fsum(sim(a.text, b.text) for a, b in pairs) / len(pairs)
    return min(1.0, max(0.0, 1.0 - mean_sim))


def should_debate(u_sys: float, conflict: float, params: HyperParams) -> bool:
    return u_sys > params.theta_u or conflict > params.theta_c


def should_terminate(
    u_sys_k: float,
    u_sys_prev: float | None,
    round_k: int,
    params: HyperParams,
) -> TerminationReason | None:
    """First matching stop condition, in priority order.

    uncertainty below ``theta_u_term`` > stagnation (``|ΔU| < ε``) > round cap.
    """
    if round_k < 1:
        raise ValueError("termination is only evaluated for debate rounds (round >= 1)")
    if u_sys_k < params.theta_u_term:
        return TerminationReason.UNCERTAINTY_BELOW_THRESHOLD
    if u_sys_prev is not None and abs(u_sys_k - u_sys_prev) < params.epsilon_conv:
        return TerminationReason.STAGNATION
    if round_k >= params.k_max:
        return TerminationReason.MAX_ROUNDS
    return None


def identify_disputes(
    responses: Sequence[ResponseRecord],
    prev_answer: str,
    u_sys_prev: float,
    params: HyperParams,
    round_k: int = 1,
    sim: Callable[[str, str], float] = default_similarity,
) -> DisputeSet:
    """Select the claims the next debate round should focus on.

    A claim key is disputed for ``low_confidence`` when any agent asserts it
    with confidence below ``params.sigma_min_dispute``, and for
    ``contradiction`` when two agents assert it with claim texts whose
    similarity falls below ``params.contradiction_cutoff``. Entries are sorted
    by claim key. ``prev_answer`` and ``u_sys_prev`` are carried for context
    only; the selection depends on the claims alone.
    """
    by_key: dict[str, list[tuple[str, object]]] = defaultdict(list)
    for resp in responses:
        for claim in resp.claims:
            by_key[claim.claim_key].append((resp.agent_id, claim))

    items = []
    for key in sorted(by_key):
        entries = by_key[key]
        low = sorted({agent for agent, c in entries if c.confidence < params.sigma_min_dispute})
        if low:
            items.append(DisputeItem(key, tuple(low), "low_confidence"))
        clashing = set()
        for (agent_a, ca), (agent_b, cb) in combinations(entries, 2):
            if agent_a != agent_b and sim(ca.claim, cb.claim) < params.contradiction_cutoff:
                clashing.update((agent_a, agent_b))
        if clashing:
            items.append(DisputeItem(key, tuple(sorted(clashing)), "contradiction"))
    return DisputeSet(round=round_k, disputed_claims=tuple(items))
