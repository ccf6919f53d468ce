"""The debate state machine: fan-out, integration and the gated debate loop."""

from __future__ import annotations

import logging
import math
import time
from collections import defaultdict
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from ..claims import MalformedClaim, claim_confidence_to_uncertainty, extract_answer, parse_claims
from ..consensus import conflict_score, identify_disputes, should_debate, should_terminate, system_uncertainty
from ..game import confidence_weights, similarity as default_similarity, softmax_weights
from ..model import (
    AgentOutput,
    AgentRole,
    ArgumentPackage,
    DebateState,
    HyperParams,
    ResponseRecord,
    TaskInput,
    TerminationReason,
    WeightVector,
    normalize_text,
    validate_state,
)
from ..uncertainty import assess_uncertainty
from .backends import AgentBackend, BackendError, InsufficientAgents
from .context import CriticReview, DebateContext

__all__ = [
    "INTEGRATE_MODES",
    "Agent",
    "DebateEngine",
    "DebateTranscript",
    "answer_is_correct",
    "debate_round",
    "initial_round",
    "integrate_judge",
    "run_debate",
    "validate_transcript",
]

logger = logging.getLogger(__name__)

INTEGRATE_MODES = ("weighted_vote", "delegated", "auto")


@dataclass(frozen=True)
class Agent:
    agent_id: str
    role: AgentRole
    backend: AgentBackend

    @classmethod
    def of(cls, role: AgentRole, backend: AgentBackend, agent_id: str | None = None) -> Agent:
        return cls(agent_id or role.specialty, role, backend)


@dataclass(frozen=True)
class DebateTranscript:
    task: TaskInput
    states: tuple[DebateState, ...]
    arguments: tuple[ArgumentPackage, ...] = ()
    critic_reviews: tuple[CriticReview, ...] = ()
    final_answer: str = ""
    total_token_cost: int = 0
    wall_time_ms: int = 0

    @property
    def debate_rounds(self) -> int:
        return self.states[-1].round

    @property
    def termination(self) -> TerminationReason:
        return self.states[-1].termination

    @property
    def triggered(self) -> bool:
        return self.termination is not TerminationReason.NO_DEBATE_NEEDED

    def cumulative_costs(self) -> list[int]:
        total, out = 0, []
        for state in self.states:
            total += state.token_cost
            out.append(total)
        return out


def answer_is_correct(answer: str, task: TaskInput) -> bool | None:
    """Compare a final answer with the task's ground truth; None when there is none."""
    if task.ground_truth is None:
        return None
    if task.is_choice:
        chosen = answer if answer in task.labels else extract_answer(f"ANSWER: {answer}", task.labels)
        return chosen is not None and chosen.upper() == task.ground_truth.upper()
    return normalize_text(answer) == normalize_text(task.ground_truth)


def _vote_key(resp: ResponseRecord) -> str:
    return normalize_text(resp.answer if resp.answer is not None else resp.text)


def _weighted_vote(responses: Sequence[ResponseRecord], weights: WeightVector) -> str:
    mass: dict[str, float] = defaultdict(float)
    heaviest: dict[str, tuple[float, ResponseRecord]] = {}
    for resp in sorted(responses, key=lambda r: r.agent_id):
        key = _vote_key(resp)
        w = weights[resp.agent_id]
        mass[key] += w
        # the heaviest member's wording represents its answer group
        if key not in heaviest or w > heaviest[key][0]:
            heaviest[key] = (w, resp)
    winner = min(mass, key=lambda k: (-mass[k], k))
    rep = heaviest[winner][1]
    return rep.answer if rep.answer is not None else rep.text


def integrate_judge(
    task: TaskInput,
    responses: Sequence[ResponseRecord],
    weights: WeightVector,
    mode: str = "weighted_vote",
    aggregator: Agent | None = None,
    context: DebateContext | None = None,
) -> str:
    """Combine weighted agent material into one answer.

    ``weighted_vote`` sums weights per normalized answer and returns the
    heaviest (ties go to the lexicographically smallest normalized answer).
    ``delegated`` asks the aggregator agent, passing the full integration
    context.
    """
    return _integrate(task, responses, weights, mode, aggregator, context)[0]


def _resolve_mode(mode: str, task: TaskInput, aggregator: Agent | None) -> str:
    if mode not in INTEGRATE_MODES:
        raise ValueError(f"integrate mode must be one of {INTEGRATE_MODES}, got {mode!r}")
    if mode == "auto":
        return "delegated" if not task.is_choice and aggregator is not None else "weighted_vote"
    return mode


def _integrate(task, responses, weights, mode, aggregator, context) -> tuple[str, int]:
    if not responses:
        raise ValueError("nothing to integrate")
    if {r.agent_id for r in responses} != set(weights.agent_ids):
        raise ValueError("responses and weights cover different agents")
    mode = _resolve_mode(mode, task, aggregator)
    if mode == "weighted_vote":
        return _weighted_vote(responses, weights), 0
    if aggregator is None:
        raise ValueError("delegated integration needs an aggregator agent")
    if context is None:
        context = DebateContext("integrate", responses[0].round, weights=weights, current_responses=tuple(responses))
    out = aggregator.backend.generate(aggregator.role, task, context)
    return out.text.strip(), out.token_cost


class DebateEngine:
    """Runs one debate at a time over a fixed team of agents.

    Calls within a round run on a thread pool when ``max_workers > 1`` and no
    backend is marked serial. Every reduction sorts by agent id first,
    so results do not depend on scheduling.
    """

    def __init__(
        self,
        agents: Sequence[Agent],
        critics: Sequence[Agent] = (),
        aggregator: Agent | None = None,
        params: HyperParams | None = None,
        integrate_mode: str = "auto",
        max_workers: int | None = None,
        similarity: Callable[[str, str], float] = default_similarity,
        enforce_counts: bool = True,
    ):
        self.params = params or HyperParams()
        self.agents = sorted(agents, key=lambda a: a.agent_id)
        self.critics = sorted(critics, key=lambda a: a.agent_id)
        self.aggregator = aggregator
        self.integrate_mode = integrate_mode
        self.max_workers = max_workers
        self.similarity = similarity
        _resolve_mode(integrate_mode, TaskInput("probe", ""), aggregator)
        if integrate_mode == "delegated" and aggregator is None:
            raise ValueError("delegated integration needs an aggregator agent")
        ids = [a.agent_id for a in self.agents] + [c.agent_id for c in self.critics]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique across base and critic agents")
        if any(a.role.category != "base" for a in self.agents):
            raise ValueError("debating agents must have the base category")
        if any(c.role.category != "critic" for c in self.critics):
            raise ValueError("critic agents must have the critic category")
        if enforce_counts:
            if len(self.agents) != self.params.n_base:
                raise ValueError(f"n_base is {self.params.n_base} but {len(self.agents)} base agents were given")
            if len(self.critics) != self.params.n_crit:
                raise ValueError(f"n_crit is {self.params.n_crit} but {len(self.critics)} critics were given")

    # -- backend fan-out ----------------------------------------------------

    def _call_all(self, agents: Sequence[Agent], task: TaskInput, context: DebateContext):
        """Call every agent; return ``(outputs by id, errors)`` sorted by agent id."""

        def call(agent: Agent):
            try:
                return agent.agent_id, agent.backend.generate(agent.role, task, context), None
            except BackendError as exc:
                return agent.agent_id, None, str(exc) or type(exc).__name__

        parallel = (
            self.max_workers is not None and self.max_workers > 1 and len(agents) > 1
            and not any(getattr(a.backend, "serial", False) for a in agents)
        )
        if parallel:
            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                results = list(pool.map(call, agents))
        else:
            results = [call(a) for a in agents]
        outputs: dict[str, AgentOutput] = {}
        errors: list[tuple[str, str]] = []
        for agent_id, out, err in sorted(results, key=lambda r: r[0]):
            if err is None:
                outputs[agent_id] = out
            else:
                logger.warning("agent %s failed in %s round %d: %s", agent_id, context.stage, context.round, err)
                errors.append((agent_id, err))
        return outputs, errors

    def _weights(self, records: Sequence[ResponseRecord], confidences=None) -> WeightVector:
        ids = [r.agent_id for r in records]
        if confidences is not None and self.params.weighting == "confidence":
            return confidence_weights(confidences, self.params.gamma_confidence, ids)
        return softmax_weights([r.uncertainty for r in records], self.params.beta_weight, ids)

    def _record(self, agent: Agent, out: AgentOutput, task: TaskInput, round_k: int, prev: ResponseRecord | None):
        claims = tuple(parse_claims(out.text))
        u, source = assess_uncertainty(out, self.params)
        if round_k > 0:
            blend = self.params.argument_blend
            u = blend * u + (1.0 - blend) * claim_confidence_to_uncertainty(claims)
        answer = extract_answer(out.text, task.labels)
        if answer is None and prev is not None:
            answer = prev.answer  # an argument that does not restate its answer keeps it
        return ResponseRecord(
            agent_id=agent.agent_id,
            role=agent.role,
            round=round_k,
            text=out.text,
            claims=claims,
            uncertainty=min(1.0, max(0.0, u)),
            uncertainty_source=source,
            token_distributions=out.token_distributions,
            token_cost=out.token_cost,
            answer=answer,
        )

    def _collect(self, agents, outputs, errors, task, round_k, prev_by_id):
        records = []
        by_id = {a.agent_id: a for a in agents}
        for agent_id, out in outputs.items():
            try:
                records.append(self._record(by_id[agent_id], out, task, round_k, prev_by_id.get(agent_id)))
            except MalformedClaim as exc:
                logger.warning("agent %s produced a malformed claim in round %d: %s", agent_id, round_k, exc)
                errors.append((agent_id, f"malformed claim: {exc}"))
        if len(records) < 2:
            raise InsufficientAgents(
                f"round {round_k}: only {len(records)} agent(s) produced usable output; errors: {errors}"
            )
        return records, sorted(errors)

    def _integrate_state(self, task, records, weights, round_k, prev_answer, initial, disputes):
        mode = _resolve_mode(self.integrate_mode, task, self.aggregator)
        context = None
        if mode == "delegated":
            context = DebateContext(
                stage="integrate",
                round=round_k,
                prev_answer=prev_answer,
                disputes=disputes,
                initial_responses=tuple(initial),
                current_responses=tuple(records),
                weights=weights,
            )
        try:
            return _integrate(task, records, weights, mode, self.aggregator, context) + (None,)
        except BackendError as exc:
            # a failed aggregator call should not sink the debate
            logger.warning("aggregator failed in round %d, falling back to weighted vote: %s", round_k, exc)
            return _weighted_vote(records, weights), 0, (self.aggregator.agent_id, str(exc))

    # -- rounds -------------------------------------------------------------

    def initial_round(self, task: TaskInput) -> DebateState:
        outputs, errors = self._call_all(self.agents, task, DebateContext("initial", 0))
        records, errors = self._collect(self.agents, outputs, errors, task, 0, {})
        weights = self._weights(records)
        answer, agg_cost, agg_error = self._integrate_state(task, records, weights, 0, "", records, None)
        if agg_error:
            errors.append(agg_error)
        return DebateState(
            round=0,
            responses=tuple(records),
            weights=weights,
            system_uncertainty=system_uncertainty(weights, [r.uncertainty for r in records]),
            conflict_score=conflict_score(records, self.similarity),
            integrated_answer=answer,
            token_cost=sum(r.token_cost for r in records) + agg_cost,
            errors=tuple(errors),
        )

    def debate_round(
        self,
        k: int,
        task: TaskInput,
        prev: DebateState,
        initial: DebateState | None = None,
        reviews: Sequence[CriticReview] = (),
    ) -> tuple[DebateState, list[ArgumentPackage], list[CriticReview]]:
        """One argue / review / reweight / integrate / check cycle.

        ``reviews`` are the critic reviews of the previous round; they are
        shown to the arguing agents. Returns the new state with this round's
        arguments and reviews.
        """
        if k < 1:
            raise ValueError("debate rounds start at 1")
        if prev.termination is not None:
            raise ValueError(f"previous state already terminated ({prev.termination})")
        initial = initial or prev
        params = self.params
        disputes = identify_disputes(
            prev.responses, prev.integrated_answer, prev.system_uncertainty, params, round_k=k, sim=self.similarity
        )
        if not disputes:
            # nothing left to argue about: carry the material forward unchanged
            answer, agg_cost, agg_error = self._integrate_state(
                task, prev.responses, prev.weights, k, prev.integrated_answer, initial.responses, disputes
            )
            state = replace(
                prev,
                round=k,
                responses=tuple(replace(r, round=k, token_cost=0) for r in prev.responses),
                integrated_answer=answer,
                dispute=disputes,
                token_cost=agg_cost,
                errors=() if agg_error is None else (agg_error,),
            )
            return replace(state, termination=should_terminate(
                state.system_uncertainty, prev.system_uncertainty, k, params
            )), [], []

        surviving = {r.agent_id for r in prev.responses}
        agents = [a for a in self.agents if a.agent_id in surviving]
        context = DebateContext(
            stage="argue", round=k, prev_answer=prev.integrated_answer, disputes=disputes, reviews=tuple(reviews)
        )
        outputs, errors = self._call_all(agents, task, context)
        prev_by_id = {r.agent_id: r for r in prev.responses}
        records, errors = self._collect(agents, outputs, errors, task, k, prev_by_id)
        arguments = [
            ArgumentPackage(
                agent_id=r.agent_id,
                round=k,
                argument_text=r.text,
                evidence_items=r.claims,
                confidence=1.0 - claim_confidence_to_uncertainty(r.claims),
                token_cost=r.token_cost,
            )
            for r in records
        ]
        weights = self._weights(records, [a.confidence for a in arguments])

        new_reviews: list[CriticReview] = []
        if self.critics:
            critic_context = replace(context, stage="critique", reviews=(), arguments=tuple(arguments))
            critic_out, critic_errors = self._call_all(self.critics, task, critic_context)
            errors.extend(critic_errors)
            new_reviews = [CriticReview(cid, k, out.text, out.token_cost) for cid, out in critic_out.items()]

        answer, agg_cost, agg_error = self._integrate_state(
            task, records, weights, k, prev.integrated_answer, initial.responses, disputes
        )
        if agg_error:
            errors.append(agg_error)
        u_sys = system_uncertainty(weights, [r.uncertainty for r in records])
        cost = sum(a.token_cost for a in arguments) + sum(r.token_cost for r in new_reviews) + agg_cost
        state = DebateState(
            round=k,
            responses=tuple(records),
            weights=weights,
            system_uncertainty=u_sys,
            conflict_score=conflict_score(records, self.similarity),
            integrated_answer=answer,
            dispute=disputes,
            termination=should_terminate(u_sys, prev.system_uncertainty, k, params),
            token_cost=cost,
            errors=tuple(sorted(errors)),
        )
        return state, arguments, new_reviews

    def run(self, task: TaskInput, clock: Callable[[], float] | None = time.perf_counter) -> DebateTranscript:
        """Run a full debate. ``clock=None`` records a wall time of 0 (for replay)."""
        started = clock() if clock else 0.0
        params = self.params
        state0 = self.initial_round(task)
        states = [state0]
        arguments: list[ArgumentPackage] = []
        reviews: list[CriticReview] = []
        if not should_debate(state0.system_uncertainty, state0.conflict_score, params):
            states[0] = replace(state0, termination=TerminationReason.NO_DEBATE_NEEDED)
        elif params.k_max == 0:
            states[0] = replace(state0, termination=TerminationReason.MAX_ROUNDS)
        else:
            last_reviews: list[CriticReview] = []
            k = 0
            while states[-1].termination is None:
                k += 1
                state, args, last_reviews = self.debate_round(k, task, states[-1], state0, last_reviews)
                states.append(state)
                arguments.extend(args)
                reviews.extend(last_reviews)
        elapsed = int(round((clock() - started) * 1000)) if clock else 0
        return DebateTranscript(
            task=task,
            states=tuple(states),
            arguments=tuple(arguments),
            critic_reviews=tuple(reviews),
            final_answer=states[-1].integrated_answer,
            total_token_cost=sum(s.token_cost for s in states),
            wall_time_ms=max(0, elapsed),
        )


# -- functional entry points ------------------------------------------------


def initial_round(task: TaskInput, agents: Sequence[Agent], params: HyperParams | None = None, **kwargs) -> DebateState:
    return DebateEngine(agents, params=params, enforce_counts=False, **kwargs).initial_round(task)


def debate_round(
    k: int,
    task: TaskInput,
    prev: DebateState,
    agents: Sequence[Agent],
    critics: Sequence[Agent] = (),
    params: HyperParams | None = None,
    **kwargs,
) -> tuple[DebateState, list[ArgumentPackage], list[CriticReview]]:
    engine = DebateEngine(agents, critics, params=params, enforce_counts=False, **kwargs)
    return engine.debate_round(k, task, prev)


def run_debate(
    task: TaskInput,
    agents: Sequence[Agent],
    critics: Sequence[Agent] = (),
    aggregator: Agent | None = None,
    params: HyperParams | None = None,
    **kwargs,
) -> DebateTranscript:
    return DebateEngine(agents, critics, aggregator, params, **kwargs).run(task)


def validate_transcript(transcript: DebateTranscript, params: HyperParams) -> list[str]:
    """Structural and per-state invariant violations of a transcript."""
    problems: list[str] = []
    states = transcript.states
    if not states:
        return ["transcript has no states"]
    if states[0].round != 0:
        problems.append("first state is not round 0")
    for a, b in zip(states, states[1:]):
        if b.round != a.round + 1:
            problems.append(f"round {b.round} follows round {a.round}")
        if a.termination is not None:
            problems.append(f"round {a.round} terminated but the debate continued")
    if states[-1].termination is None:
        problems.append("last state carries no termination reason")
    if states[-1].round > params.k_max:
        problems.append(f"{states[-1].round} debate rounds exceed k_max={params.k_max}")
    for state in states:
        problems.extend(f"round {state.round}: {p}" for p in validate_state(state, params))
    if transcript.total_token_cost != sum(s.token_cost for s in states):
        problems.append("total_token_cost differs from the sum of per-round costs")
    floor = sum(r.token_cost for r in states[0].responses) + sum(a.token_cost for a in transcript.arguments)
    if transcript.total_token_cost < floor:
        problems.append("total_token_cost is below the response and argument costs it must include")
    if transcript.final_answer != states[-1].integrated_answer:
        problems.append("final answer differs from the last integrated answer")
    if any(a.round < 1 or a.round > states[-1].round for a in transcript.arguments):
        problems.append("argument outside the recorded debate rounds")
    if not math.isfinite(transcript.wall_time_ms) or transcript.wall_time_ms < 0:
        problems.append("negative wall time")
    return problems
