"""Domain types shared by every stage of a debate.

All types are frozen dataclasses. Construction validates the per-object
invariants; cross-object consistency of a :class:`DebateState` is checked by
:func:`validate_state`, which reports instead of raising.
"""

from __future__ import annotations

import enum
import math
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ._validation import (
    INGEST_ATOL,
    SIMPLEX_ATOL,
    check_non_negative,
    check_non_negative_int,
    check_positive,
    check_unit_interval,
    simplex_violations,
)

__all__ = [
    "AgentOutput",
    "AgentRole",
    "ArgumentPackage",
    "ClaimTuple",
    "DebateState",
    "DisputeItem",
    "DisputeSet",
    "HyperParams",
    "MarkerLexicon",
    "RegionRef",
    "ResponseRecord",
    "TaskInput",
    "TerminationReason",
    "TokenDistribution",
    "WeightVector",
    "check_unique_task_ids",
    "normalize_text",
    "validate_state",
]

_PUNCT = re.compile(r"[^\w\s]")
_SPACE = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Lower-case, strip punctuation and collapse whitespace.

    Used as the identity of claims across agents and of free-text answers.
    """
    return _SPACE.sub(" ", _PUNCT.sub("", text.lower())).strip()


# --------------------------------------------------------------------------
# Task input
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TaskInput:
    task_id: str
    question: str
    media: tuple[str, ...] = ()
    answer_options: tuple[tuple[str, str], ...] | None = None
    ground_truth: str | None = None

    def __post_init__(self):
        if not self.task_id or not str(self.task_id).strip():
            raise ValueError("task_id must be non-empty")
        object.__setattr__(self, "media", tuple(self.media))
        if self.answer_options is not None:
            opts = tuple((str(label), str(text)) for label, text in self.answer_options)
            labels = [label for label, _ in opts]
            if len(set(labels)) != len(labels):
                raise ValueError(f"duplicate answer option labels in task {self.task_id!r}")
            object.__setattr__(self, "answer_options", opts)

    @property
    def labels(self) -> tuple[str, ...] | None:
        if self.answer_options is None:
            return None
        return tuple(label for label, _ in self.answer_options)

    @property
    def is_choice(self) -> bool:
        return bool(self.answer_options)

    def to_dict(self) -> dict:
        out = {"task_id": self.task_id, "question": self.question}
        if self.media:
            out["media"] = list(self.media)
        if self.answer_options is not None:
            out["options"] = {label: text for label, text in self.answer_options}
        if self.ground_truth is not None:
            out["ground_truth"] = self.ground_truth
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> TaskInput:
        options = data.get("options", data.get("answer_options"))
        if isinstance(options, Mapping):
            options = tuple(options.items())
        elif options is not None:
            options = tuple(tuple(item) for item in options)
        return cls(
            task_id=str(data["task_id"]),
            question=str(data.get("question", "")),
            media=tuple(data.get("media", ())),
            answer_options=options,
            ground_truth=None if data.get("ground_truth") is None else str(data["ground_truth"]),
        )


def check_unique_task_ids(tasks: Iterable[TaskInput]) -> None:
    seen = set()
    for task in tasks:
        if task.task_id in seen:
            raise ValueError(f"duplicate task_id {task.task_id!r} in batch")
        seen.add(task.task_id)


# --------------------------------------------------------------------------
# Token distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TokenDistribution:
    """Probabilities of the candidate tokens at one generation position.

    ``probabilities`` is a tuple of ``(token, probability)`` pairs sorted by
    descending probability. ``vocab_size_hint`` is the effective support size
    used to normalize entropy; top-K APIs only expose part of the vocabulary.
    """

    probabilities: tuple[tuple[object, float], ...]
    vocab_size_hint: int

    def __post_init__(self):
        pairs = tuple((tok, float(p)) for tok, p in self.probabilities)
        if not pairs:
            raise ValueError("a token distribution needs at least one entry")
        probs = [p for _, p in pairs]
        for p in probs:
            if math.isnan(p) or p < 0.0 or p > 1.0 + INGEST_ATOL:
                raise ValueError(f"token probability {p} outside [0, 1]")
        if any(a < b for a, b in zip(probs, probs[1:])):
            raise ValueError("token probabilities must be sorted in descending order")
        if abs(sum(probs) - 1.0) > INGEST_ATOL:
            raise ValueError(f"token probabilities sum to {sum(probs):.9g}, expected 1")
        hint = self.vocab_size_hint
        if isinstance(hint, bool) or int(hint) != hint or hint < len(pairs):
            raise ValueError(
                f"vocab_size_hint must be an integer >= support size {len(pairs)}, got {hint!r}"
            )
        object.__setattr__(self, "probabilities", pairs)
        object.__setattr__(self, "vocab_size_hint", int(hint))

    @classmethod
    def from_probs(cls, probs, vocab_size_hint: int | None = None, tokens=None) -> TokenDistribution:
        """Build from an unsorted probability list; tokens default to list indices."""
        probs = [float(p) for p in probs]
        if tokens is None:
            tokens = list(range(len(probs)))
        pairs = sorted(zip(tokens, probs), key=lambda tp: -tp[1])
        return cls(tuple(pairs), vocab_size_hint if vocab_size_hint is not None else len(pairs))

    @property
    def probs(self) -> np.ndarray:
        return np.fromiter((p for _, p in self.probabilities), dtype=float)

    def to_dict(self) -> dict:
        return {
            "tokens": [tok for tok, _ in self.probabilities],
            "probs": [p for _, p in self.probabilities],
            "vocab_size_hint": self.vocab_size_hint,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> TokenDistribution:
        pairs = tuple(zip(data["tokens"], data["probs"]))
        return cls(pairs, int(data["vocab_size_hint"]))


# --------------------------------------------------------------------------
# Claims and evidence regions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionRef:
    kind: str  # "bbox" or "descriptor"
    map_confidence: float
    bbox: tuple[float, float, float, float] | None = None
    descriptor: str | None = None

    def __post_init__(self):
        check_unit_interval(self.map_confidence, "map_confidence")
        object.__setattr__(self, "map_confidence", float(self.map_confidence))
        if self.kind == "bbox":
            if self.bbox is None or len(self.bbox) != 4:
                raise ValueError("bbox region needs four coordinates")
            box = tuple(float(v) for v in self.bbox)
            x0, y0, x1, y1 = box
            if not all(0.0 <= v <= 1.0 for v in box):
                raise ValueError(f"bbox coordinates must be normalized to [0, 1], got {box}")
            if not (x0 < x1 and y0 < y1):
                raise ValueError(f"bbox must satisfy x0<x1 and y0<y1, got {box}")
            object.__setattr__(self, "bbox", box)
        elif self.kind == "descriptor":
            if not self.descriptor or not self.descriptor.strip():
                raise ValueError("descriptor region needs non-empty text")
        else:
            raise ValueError(f"unknown region kind {self.kind!r}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "map_confidence": self.map_confidence}
        if self.bbox is not None:
            out["bbox"] = list(self.bbox)
        if self.descriptor is not None:
            out["descriptor"] = self.descriptor
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> RegionRef:
        bbox = data.get("bbox")
        return cls(
            kind=data["kind"],
            map_confidence=data["map_confidence"],
            bbox=None if bbox is None else tuple(bbox),
            descriptor=data.get("descriptor"),
        )


@dataclass(frozen=True)
class ClaimTuple:
    """One structured claim: text, confidence, supporting evidence and region.

    ``key`` optionally names the topic the claim is about (``"car color"``) so
    that differently worded claims from several agents can be compared.
    """

    claim: str
    confidence: float = 0.5
    evidence: str = ""
    region: RegionRef | None = None
    key: str | None = None

    def __post_init__(self):
        if not self.claim or not self.claim.strip():
            raise ValueError("claim text must be non-empty")
        object.__setattr__(self, "confidence", check_unit_interval(self.confidence, "confidence"))

    @property
    def claim_key(self) -> str:
        return normalize_text(self.key if self.key else self.claim)

    def to_dict(self) -> dict:
        out = {"claim": self.claim, "confidence": self.confidence, "evidence": self.evidence}
        if self.region is not None:
            out["region"] = self.region.to_dict()
        if self.key is not None:
            out["key"] = self.key
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> ClaimTuple:
        region = data.get("region")
        return cls(
            claim=data["claim"],
            confidence=data.get("confidence", 0.5),
            evidence=data.get("evidence", ""),
            region=None if region is None else RegionRef.from_dict(region),
            key=data.get("key"),
        )


# --------------------------------------------------------------------------
# Agents and their outputs
# --------------------------------------------------------------------------

AGENT_CATEGORIES = ("base", "critic", "aggregator")


@dataclass(frozen=True)
class AgentRole:
    category: str
    specialty: str
    prompt_template: str = ""
    critique_template: str = ""
    revision_template: str = ""

    def __post_init__(self):
        if self.category not in AGENT_CATEGORIES:
            raise ValueError(f"agent category must be one of {AGENT_CATEGORIES}, got {self.category!r}")
        if not self.specialty:
            raise ValueError("agent specialty must be non-empty")

    def to_dict(self) -> dict:
        return {"category": self.category, "specialty": self.specialty}


@dataclass(frozen=True)
class AgentOutput:
    """What a backend returns for one call, before any scoring."""

    text: str
    token_distributions: tuple[TokenDistribution, ...] | None = None
    token_cost: int = 0

    def __post_init__(self):
        if self.token_distributions is not None:
            object.__setattr__(self, "token_distributions", tuple(self.token_distributions))
        object.__setattr__(self, "token_cost", check_non_negative_int(self.token_cost, "token_cost"))


UNCERTAINTY_SOURCES = ("generation", "semantic")


@dataclass(frozen=True)
class ResponseRecord:
    agent_id: str
    role: AgentRole
    round: int
    text: str
    claims: tuple[ClaimTuple, ...]
    uncertainty: float
    uncertainty_source: str
    token_distributions: tuple[TokenDistribution, ...] | None = None
    token_cost: int = 0
    answer: str | None = None

    def __post_init__(self):
        check_non_negative_int(self.round, "round")
        object.__setattr__(self, "uncertainty", check_unit_interval(self.uncertainty, "uncertainty"))
        object.__setattr__(self, "claims", tuple(self.claims))
        if self.token_distributions is not None:
            object.__setattr__(self, "token_distributions", tuple(self.token_distributions))
        if self.uncertainty_source not in UNCERTAINTY_SOURCES:
            raise ValueError(f"uncertainty_source must be one of {UNCERTAINTY_SOURCES}")
        if self.uncertainty_source == "generation" and not self.token_distributions:
            raise ValueError("generation-sourced uncertainty requires token distributions")
        check_non_negative_int(self.token_cost, "token_cost")

    def to_dict(self) -> dict:
        out = {
            "agent_id": self.agent_id,
            "role": self.role.to_dict(),
            "round": self.round,
            "text": self.text,
            "claims": [c.to_dict() for c in self.claims],
            "uncertainty": self.uncertainty,
            "uncertainty_source": self.uncertainty_source,
            "token_cost": self.token_cost,
            "answer": self.answer,
        }
        if self.token_distributions is not None:
            out["token_distributions"] = [d.to_dict() for d in self.token_distributions]
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> ResponseRecord:
        dists = data.get("token_distributions")
        return cls(
            agent_id=data["agent_id"],
            role=AgentRole(**data["role"]),
            round=data["round"],
            text=data["text"],
            claims=tuple(ClaimTuple.from_dict(c) for c in data.get("claims", ())),
            uncertainty=data["uncertainty"],
            uncertainty_source=data["uncertainty_source"],
            token_distributions=None if dists is None else tuple(TokenDistribution.from_dict(d) for d in dists),
            token_cost=data.get("token_cost", 0),
            answer=data.get("answer"),
        )


@dataclass(frozen=True)
class WeightVector:
    """Per-agent influence weights on the probability simplex."""

    agent_ids: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        ids = tuple(str(a) for a in self.agent_ids)
        ws = tuple(float(w) for w in self.weights)
        if len(ids) != len(ws):
            raise ValueError(f"{len(ids)} agent ids but {len(ws)} weights")
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids in a weight vector must be unique")
        problems = simplex_violations(ws, SIMPLEX_ATOL)
        if problems:
            raise ValueError("; ".join(problems))
        object.__setattr__(self, "agent_ids", ids)
        object.__setattr__(self, "weights", ws)

    @classmethod
    def unchecked(cls, agent_ids, weights) -> WeightVector:
        """Build without the simplex check, for states under validation."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "agent_ids", tuple(str(a) for a in agent_ids))
        object.__setattr__(obj, "weights", tuple(float(w) for w in weights))
        return obj

    @classmethod
    def uniform(cls, agent_ids) -> WeightVector:
        ids = tuple(agent_ids)
        return cls(ids, (1.0 / len(ids),) * len(ids))

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, agent_id: str) -> float:
        return self.weights[self.agent_ids.index(agent_id)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def items(self):
        return zip(self.agent_ids, self.weights)

    def to_dict(self) -> dict:
        return {"agent_ids": list(self.agent_ids), "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, data: Mapping) -> WeightVector:
        return cls(tuple(data["agent_ids"]), tuple(data["weights"]))


@dataclass(frozen=True)
class ArgumentPackage:
    agent_id: str
    round: int
    argument_text: str
    evidence_items: tuple[ClaimTuple, ...]
    confidence: float
    token_cost: int = 0

    def __post_init__(self):
        if isinstance(self.round, bool) or int(self.round) != self.round or self.round < 1:
            raise ValueError("arguments only exist inside debate rounds (round >= 1)")
        object.__setattr__(self, "evidence_items", tuple(self.evidence_items))
        object.__setattr__(self, "confidence", check_unit_interval(self.confidence, "confidence"))
        check_non_negative_int(self.token_cost, "token_cost")

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "round": self.round,
            "argument_text": self.argument_text,
            "evidence_items": [c.to_dict() for c in self.evidence_items],
            "confidence": self.confidence,
            "token_cost": self.token_cost,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> ArgumentPackage:
        return cls(
            agent_id=data["agent_id"],
            round=data["round"],
            argument_text=data["argument_text"],
            evidence_items=tuple(ClaimTuple.from_dict(c) for c in data.get("evidence_items", ())),
            confidence=data["confidence"],
            token_cost=data.get("token_cost", 0),
        )


# --------------------------------------------------------------------------
# Debate bookkeeping
# --------------------------------------------------------------------------

DISPUTE_REASONS = ("low_confidence", "contradiction")


@dataclass(frozen=True)
class DisputeItem:
    claim_key: str
    involved_agents: tuple[str, ...]
    reason: str

    def __post_init__(self):
        if self.reason not in DISPUTE_REASONS:
            raise ValueError(f"dispute reason must be one of {DISPUTE_REASONS}")
        object.__setattr__(self, "involved_agents", tuple(self.involved_agents))

    def to_dict(self) -> dict:
        return {"claim_key": self.claim_key, "involved_agents": list(self.involved_agents), "reason": self.reason}


@dataclass(frozen=True)
class DisputeSet:
    round: int
    disputed_claims: tuple[DisputeItem, ...] = ()

    def __post_init__(self):
        if isinstance(self.round, bool) or int(self.round) != self.round or self.round < 1:
            raise ValueError("dispute sets belong to debate rounds (round >= 1)")
        object.__setattr__(self, "disputed_claims", tuple(self.disputed_claims))

    def __len__(self) -> int:
        return len(self.disputed_claims)

    def __bool__(self) -> bool:
        return bool(self.disputed_claims)

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(item.claim_key for item in self.disputed_claims))

    def to_dict(self) -> dict:
        return {"round": self.round, "disputed_claims": [d.to_dict() for d in self.disputed_claims]}

    @classmethod
    def from_dict(cls, data: Mapping) -> DisputeSet:
        return cls(
            round=data["round"],
            disputed_claims=tuple(
                DisputeItem(d["claim_key"], tuple(d["involved_agents"]), d["reason"])
                for d in data.get("disputed_claims", ())
            ),
        )


class TerminationReason(str, enum.Enum):
    UNCERTAINTY_BELOW_THRESHOLD = "uncertainty_below_threshold"
    STAGNATION = "stagnation"
    MAX_ROUNDS = "max_rounds"
    NO_DEBATE_NEEDED = "no_debate_needed"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DebateState:
    round: int
    responses: tuple[ResponseRecord, ...]
    weights: WeightVector
    system_uncertainty: float
    conflict_score: float
    integrated_answer: str = ""
    dispute: DisputeSet | None = None
    termination: TerminationReason | None = None
    token_cost: int = 0
    errors: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "responses", tuple(self.responses))
        object.__setattr__(self, "errors", tuple(tuple(e) for e in self.errors))
        if self.termination is not None and not isinstance(self.termination, TerminationReason):
            object.__setattr__(self, "termination", TerminationReason(self.termination))

    @property
    def uncertainties(self) -> dict[str, float]:
        return {r.agent_id: r.uncertainty for r in self.responses}

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "responses": [r.to_dict() for r in self.responses],
            "weights": self.weights.to_dict(),
            "system_uncertainty": self.system_uncertainty,
            "conflict_score": self.conflict_score,
            "integrated_answer": self.integrated_answer,
            "dispute": None if self.dispute is None else self.dispute.to_dict(),
            "termination": None if self.termination is None else self.termination.value,
            "token_cost": self.token_cost,
            "errors": [list(e) for e in self.errors],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> DebateState:
        dispute = data.get("dispute")
        return cls(
            round=data["round"],
            responses=tuple(ResponseRecord.from_dict(r) for r in data["responses"]),
            weights=WeightVector.from_dict(data["weights"]),
            system_uncertainty=data["system_uncertainty"],
            conflict_score=data["conflict_score"],
            integrated_answer=data.get("integrated_answer", ""),
            dispute=None if dispute is None else DisputeSet.from_dict(dispute),
            termination=data.get("termination"),
            token_cost=data.get("token_cost", 0),
            errors=tuple(tuple(e) for e in data.get("errors", ())),
        )


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkerLexicon:
    """Hedge-word lexicon: marker phrase -> uncertainty intensity."""

    entries: Mapping[str, float]

    def __post_init__(self):
        clean = {}
        for phrase, weight in dict(self.entries).items():
            key = _SPACE.sub(" ", str(phrase).strip().lower())
            if not key:
                raise ValueError("lexicon marker phrases must be non-empty")
            weight = float(weight)
            if not weight > 0:
                raise ValueError(f"lexicon weight for {key!r} must be positive, got {weight}")
            clean[key] = weight
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @classmethod
    def default(cls) -> MarkerLexicon:
        return cls(DEFAULT_LEXICON)

    @classmethod
    def from_file(cls, path) -> MarkerLexicon:
        """Read ``phrase<TAB>weight`` lines; blank lines and ``#`` comments are skipped."""
        entries = {}
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            phrase, sep, weight = line.rpartition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected 'phrase<TAB>weight'")
            try:
                entries[phrase] = float(weight)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad weight {weight!r}") from None
        if not entries:
            raise ValueError(f"{path}: lexicon is empty")
        return cls(entries)

    def to_text(self) -> str:
        return "".join(f"{phrase}\t{weight!r}\n" for phrase, weight in self.entries.items())

    def __len__(self) -> int:
        return len(self.entries)

    def __hash__(self) -> int:
        return hash(tuple(self.entries.items()))


DEFAULT_LEXICON = {
    "might": 0.8,
    "possibly": 0.8,
    "unsure": 0.8,
    "confident": 0.2,
    "clear": 0.2,
}

WEIGHTING_MODES = ("uncertainty", "confidence")


@dataclass(frozen=True)
class HyperParams:
    """Every tunable of the protocol, with its default value."""

    alpha_phi: float = 0.5
    beta_phi: float = 0.5
    sem_k: float = 1.0
    sem_offset: float = 0.3
    lexicon: MarkerLexicon = field(default_factory=MarkerLexicon.default)
    beta_weight: float = 1.5
    lambda_collab: float = 0.3
    gamma_sys: float = 0.2
    eta_temp: float = 1.0
    theta_u: float = 0.45
    theta_c: float = 0.55
    theta_u_term: float = 0.15
    epsilon_conv: float = 0.01
    k_max: int = 3
    n_base: int = 3
    n_crit: int = 3
    sigma_min_dispute: float = 0.5
    # implementation choices not fixed by the protocol
    normalize_entropy: bool = True
    argument_blend: float = 0.5
    contradiction_cutoff: float = 0.5
    weighting: str = "uncertainty"
    gamma_confidence: float = 1.5

    def __post_init__(self):
        check_non_negative(self.alpha_phi, "alpha_phi")
        check_non_negative(self.beta_phi, "beta_phi")
        if not self.alpha_phi + self.beta_phi > 0:
            raise ValueError("alpha_phi + beta_phi must be positive")
        check_positive(self.sem_k, "sem_k")
        check_non_negative(self.beta_weight, "beta_weight")
        check_non_negative(self.lambda_collab, "lambda_collab")
        check_non_negative(self.gamma_sys, "gamma_sys")
        check_positive(self.eta_temp, "eta_temp")
        for name in ("theta_u", "theta_c", "theta_u_term"):
            check_unit_interval(getattr(self, name), name, open_low=True, open_high=True)
        if not self.theta_u_term < self.theta_u:
            raise ValueError("theta_u_term must be below theta_u so triggered debates can terminate")
        check_positive(self.epsilon_conv, "epsilon_conv")
        check_non_negative_int(self.k_max, "k_max")
        if check_non_negative_int(self.n_base, "n_base") < 1:
            raise ValueError("n_base must be positive")
        check_non_negative_int(self.n_crit, "n_crit")
        check_unit_interval(self.sigma_min_dispute, "sigma_min_dispute")
        check_unit_interval(self.argument_blend, "argument_blend")
        check_unit_interval(self.contradiction_cutoff, "contradiction_cutoff")
        if self.weighting not in WEIGHTING_MODES:
            raise ValueError(f"weighting must be one of {WEIGHTING_MODES}")
        check_non_negative(self.gamma_confidence, "gamma_confidence")
        if not isinstance(self.lexicon, MarkerLexicon):
            object.__setattr__(self, "lexicon", MarkerLexicon(self.lexicon))

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_mapping(cls, data: Mapping | None) -> HyperParams:
        data = dict(data or {})
        unknown = set(data) - set(cls.field_names())
        if unknown:
            raise ValueError(f"unknown hyperparameter(s): {', '.join(sorted(unknown))}")
        if "lexicon" in data and not isinstance(data["lexicon"], MarkerLexicon):
            data["lexicon"] = MarkerLexicon(data["lexicon"])
        return cls(**data)

    def with_overrides(self, **changes) -> HyperParams:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["lexicon"] = dict(self.lexicon.entries)
        return out


# --------------------------------------------------------------------------
# State validation
# --------------------------------------------------------------------------


def validate_state(state: DebateState, params: HyperParams) -> list[str]:
    """Return the list of invariant violations in ``state`` (empty when valid)."""
    problems: list[str] = []
    if state.round < 0:
        problems.append(f"negative round {state.round}")

    weights = state.weights
    problems.extend(f"weights: {p}" for p in simplex_violations(weights.weights, SIMPLEX_ATOL))
    if len(weights.agent_ids) != len(weights.weights):
        problems.append("weights: agent id / weight count mismatch")

    by_agent = {}
    for resp in state.responses:
        if resp.agent_id in by_agent:
            problems.append(f"duplicate response for agent {resp.agent_id!r}")
        by_agent[resp.agent_id] = resp
        if not 0.0 <= resp.uncertainty <= 1.0:
            problems.append(f"agent {resp.agent_id!r}: uncertainty {resp.uncertainty} outside [0, 1]")
        if resp.uncertainty_source == "generation" and not resp.token_distributions:
            problems.append(f"agent {resp.agent_id!r}: generation source without token distributions")

    if set(weights.agent_ids) != set(by_agent):
        problems.append(
            f"weights cover agents {sorted(weights.agent_ids)} but responses cover {sorted(by_agent)}"
        )
    else:
        expected = math.fsum(w * by_agent[a].uncertainty for a, w in weights.items())
        if abs(expected - state.system_uncertainty) > 1e-9:
            problems.append(
                f"system_uncertainty {state.system_uncertainty!r} != weighted uncertainty {expected!r}"
            )

    if not 0.0 <= state.system_uncertainty <= 1.0:
        problems.append(f"system_uncertainty {state.system_uncertainty} outside [0, 1]")
    if not 0.0 <= state.conflict_score <= 1.0:
        problems.append(f"conflict_score {state.conflict_score} outside [0, 1]")
    if state.token_cost < 0:
        problems.append("negative token_cost")

    if state.dispute is not None and state.dispute.round != state.round:
        problems.append(f"dispute set round {state.dispute.round} != state round {state.round}")
    if state.round == 0 and state.dispute is not None:
        problems.append("round 0 cannot carry a dispute set")

    reason = state.termination
    if reason is TerminationReason.UNCERTAINTY_BELOW_THRESHOLD and not (
        state.system_uncertainty < params.theta_u_term
    ):
        problems.append("termination says uncertainty_below_threshold but U_sys >= theta_u_term")
    elif reason is TerminationReason.NO_DEBATE_NEEDED:
        if state.round != 0:
            problems.append("no_debate_needed recorded after round 0")
        if state.system_uncertainty > params.theta_u or state.conflict_score > params.theta_c:
            problems.append("no_debate_needed recorded although the debate trigger fires")
    elif reason is TerminationReason.MAX_ROUNDS and state.round < params.k_max:
        problems.append(f"max_rounds recorded at round {state.round} < k_max {params.k_max}")
    return problems
