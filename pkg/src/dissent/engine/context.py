"""What an agent is shown when it is called, and how that becomes prompt text."""

from __future__ import annotations

from dataclasses import dataclass

from ..claims import CLAIM_INSTRUCTIONS
from ..model import AgentRole, ArgumentPackage, DisputeSet, ResponseRecord, TaskInput, WeightVector

__all__ = ["CriticReview", "DebateContext", "build_messages"]

STAGES = ("initial", "argue", "critique", "integrate")


@dataclass(frozen=True)
class CriticReview:
    agent_id: str
    round: int
    review_text: str
    token_cost: int = 0

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "round": self.round,
            "review_text": self.review_text,
            "token_cost": self.token_cost,
        }

    @classmethod
    def from_dict(cls, data) -> CriticReview:
        return cls(data["agent_id"], data["round"], data["review_text"], data.get("token_cost", 0))


@dataclass(frozen=True)
class DebateContext:
    """Structured call context.

    Scripted backends only look at ``stage`` and ``round``; live backends
    render the whole context into the user message with :meth:`render`.
    """

    stage: str
    round: int
    prev_answer: str = ""
    disputes: DisputeSet | None = None
    reviews: tuple[CriticReview, ...] = ()
    arguments: tuple[ArgumentPackage, ...] = ()
    initial_responses: tuple[ResponseRecord, ...] = ()
    current_responses: tuple[ResponseRecord, ...] = ()
    weights: WeightVector | None = None

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown context stage {self.stage!r}")

    def render(self) -> str:
        parts = []
        if self.stage == "integrate":
            # integration inputs in a fixed order: previous answer, initial
            # responses, current updates, weights, dispute focus
            if self.prev_answer:
                parts.append(f"Previous integrated answer:\n{self.prev_answer}")
            if self.initial_responses:
                parts.append("Initial expert responses:\n" + _responses(self.initial_responses))
            if self.current_responses and self.round > 0:
                parts.append(f"Expert updates in round {self.round}:\n" + _responses(self.current_responses))
            if self.weights is not None:
                parts.append("Expert weights:\n" + "\n".join(f"- {a}: {w:.4f}" for a, w in self.weights.items()))
            if self.disputes:
                parts.append("Disputed points:\n" + _disputes(self.disputes))
            return "\n\n".join(parts)

        if self.prev_answer:
            parts.append(f"Current integrated answer:\n{self.prev_answer}")
        if self.disputes:
            parts.append(
                "Disputed points to address (argue your position with evidence, "
                "revise it if the evidence is against you):\n" + _disputes(self.disputes)
            )
        if self.reviews:
            parts.append("Reviewer feedback from the last round:\n" + "\n".join(
                f"[{r.agent_id}] {r.review_text}" for r in self.reviews
            ))
        if self.arguments:
            parts.append("Arguments under review:\n" + "\n".join(
                f"[{a.agent_id}] {a.argument_text}" for a in self.arguments
            ))
        return "\n\n".join(parts)


def _responses(responses) -> str:
    return "\n".join(f"[{r.agent_id}] {r.text}" for r in responses)


def _disputes(disputes: DisputeSet) -> str:
    return "\n".join(
        f"- {d.claim_key} ({d.reason}; agents: {', '.join(d.involved_agents)})" for d in disputes.disputed_claims
    )


def _question(task: TaskInput) -> str:
    text = task.question
    if task.answer_options:
        text += "\nOptions:\n" + "\n".join(f"{label}. {opt}" for label, opt in task.answer_options)
    return text


def build_messages(role: AgentRole, task: TaskInput, context: DebateContext) -> tuple[str, str]:
    """Render ``(system, user)`` message text for one agent call."""
    question = _question(task)
    rendered = context.render()
    if role.category == "critic":
        focus = ", ".join(context.disputes.keys) if context.disputes else "overall accuracy"
        system = role.prompt_template
        template = role.critique_template or "{response}"
        user = template.format(instruction=question, response=rendered, critique_request=focus)
        return system, user
    system = role.prompt_template.format(instruction=question)
    if role.category == "base":
        system = f"{system}\n\n{CLAIM_INSTRUCTIONS}"
    user = question if not rendered else f"{question}\n\n{rendered}"
    return system, user
