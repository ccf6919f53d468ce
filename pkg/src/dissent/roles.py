"""Default agent roles and their prompt templates.

Templates use ``str.format`` placeholders: ``{instruction}`` (the task
question), ``{response}`` (material under review) and ``{critique_request}``
(what the reviewer should focus on).
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .model import AgentRole

__all__ = [
    "AGGREGATOR_ROLE",
    "default_base_roles",
    "default_critic_roles",
    "make_role",
    "check_role_set",
]

_BASE = {
    "object_recognition": (
        "You are an expert in object recognition.",
        "Identify the significant objects in the image(s): what they are, how many, "
        "what they look like and where they are. Tie every key claim to visible evidence.\n"
        "Question: {instruction}",
        "Review the object recognition in this analysis:\n{response}\n"
        "Check for misidentified or missing objects, using only what is visible.",
    ),
    "scene_description": (
        "You are an expert in scene description.",
        "Describe the scene in the image(s): setting, environment, lighting, mood and how "
        "the elements are arranged relative to each other. Tie every key claim to visible evidence.\n"
        "Question: {instruction}",
        "Review the scene description in this analysis:\n{response}\n"
        "Check whether the main elements and spatial layout are captured correctly.",
    ),
    "ocr": (
        "You are an expert in OCR and text analysis from images.",
        "Transcribe any text visible in the image(s), such as signs, labels or documents, and "
        "say where it appears. Tie every key claim to visible evidence.\n"
        "Question: {instruction}",
        "Review the text transcription in this analysis:\n{response}\n"
        "Check for wrong or missing text and misplaced locations.",
    ),
    "relational_reasoning": (
        "You are an expert in relational and spatial reasoning.",
        "Work out how the entities in the image(s) relate to each other and what follows "
        "from those relations. Tie every key claim to visible evidence.\n"
        "Question: {instruction}",
        "Review the relational reasoning in this analysis:\n{response}\n"
        "Check that each inferred relation is supported by the image.",
    ),
}

_CRITIC = {
    "fact_checker": (
        "You are an expert in fact-checking claims against visual evidence.",
        "Question: {instruction}\nCurrent answer and arguments:\n{response}\n"
        "Focus: {critique_request}\n"
        "Judge the factual accuracy of each claim using only the image content. "
        "Name inaccurate claims and give corrections. State your confidence (0-100%).",
    ),
    "completeness_checker": (
        "You are an expert in assessing the completeness of image-based analysis.",
        "Question: {instruction}\nCurrent answer and arguments:\n{response}\n"
        "Focus: {critique_request}\n"
        "Decide whether the analysis covers everything in the image that matters for the "
        "question and list what is missing. State your confidence (0-100%).",
    ),
    "logic_checker": (
        "You are an expert in evaluating the logical consistency of an analysis.",
        "Question: {instruction}\nCurrent answer and arguments:\n{response}\n"
        "Focus: {critique_request}\n"
        "Look for contradictions and conclusions the evidence does not support, and say how "
        "to repair the reasoning. State your confidence (0-100%).",
    ),
}

_AGGREGATOR_PROMPT = (
    "You are the Wise Integrator of a team of expert agents. Work out what the user is "
    "asking, weigh the experts' input by its quality and by the influence weights given, "
    "resolve contradictions between them and merge the result into one clear, accurate "
    "answer. Do not mention the experts or the merging process in your answer.\n"
    "Question: {instruction}"
)

AGGREGATOR_ROLE = AgentRole(category="aggregator", specialty="aggregator", prompt_template=_AGGREGATOR_PROMPT)


def make_role(category: str, specialty: str, prompt_template: str | None = None, **templates) -> AgentRole:
    """Build a role, filling unspecified templates from the built-in catalogue."""
    if category == "aggregator":
        return AgentRole(category, specialty, prompt_template or _AGGREGATOR_PROMPT)
    if category == "base":
        identity, prompt, critique = _BASE.get(specialty, ("", "", ""))
        default_prompt = f"{identity}\n{prompt}".strip() if prompt else "Question: {instruction}"
        return AgentRole(
            category,
            specialty,
            prompt_template or default_prompt,
            critique_template=templates.get("critique_template", critique),
            revision_template=templates.get("revision_template", ""),
        )
    identity, critique = _CRITIC.get(specialty, ("", ""))
    default_critique = critique or "Question: {instruction}\nReview:\n{response}\nFocus: {critique_request}"
    return AgentRole(
        category,
        specialty,
        prompt_template or identity or f"You are a {specialty.replace('_', ' ')} reviewer.",
        critique_template=templates.get("critique_template", default_critique),
    )


def default_base_roles() -> list[AgentRole]:
    return [make_role("base", s) for s in ("object_recognition", "scene_description", "ocr")]


def default_critic_roles() -> list[AgentRole]:
    return [make_role("critic", s) for s in ("fact_checker", "completeness_checker", "logic_checker")]


def check_role_set(base: Iterable[AgentRole], critics: Iterable[AgentRole]) -> None:
    """Base and critic specialties must not overlap within one configuration."""
    overlap = {r.specialty for r in base} & {r.specialty for r in critics}
    if overlap:
        raise ValueError(f"specialties used by both base and critic agents: {sorted(overlap)}")


def role_from_mapping(data: Mapping) -> AgentRole:
    data = dict(data)
    return make_role(data.pop("category"), data.pop("specialty"), data.pop("prompt_template", None), **data)
