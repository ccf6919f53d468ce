"""Scripted scenarios: YAML fixtures that stand in for live agents.

A scenario file looks like::

    schema: dissent.scenario/1
    name: fast_converge
    task:                        # optional; the task replayed by `simulate`
      task_id: car
      question: What color is the car?
      options: {A: red, B: blue}
    params: {k_max: 3}           # optional hyperparameter overrides
    agents:                      # optional; defaults to the standard roles
      base: [object_recognition, scene_description, ocr]
      critics: [fact_checker]
      aggregator: true
    integrate_mode: auto
    expect: {termination: uncertainty_below_threshold, rounds: 1}
    responses:
      - specialty: object_recognition
        round: 0                 # or `rounds: [1, 2]`
        task_id: car             # optional; entries without one match any task
        text: The car is red.
        claims:                  # optional claim lines appended to text
          - "CLAIM: the car is red | CONF: 0.9 | EVIDENCE: paint | KEY: car color"
        answer: A                # optional, appended as an ANSWER line
        token_probs:             # optional per-position probabilities
          - [0.5, 0.5]
          - {red: 0.9, blue: 0.1}
        vocab_size: 2            # optional; defaults to each position's support
        token_cost: 120
        error: timeout           # optional; the call fails with this message

Entries are looked up by ``(task_id, specialty, round)``, falling back to an
entry without a task id.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..model import AgentOutput, AgentRole, TaskInput, TokenDistribution
from .backends import BackendError, MissingFixtureEntry
from .context import DebateContext

__all__ = ["FixtureEntry", "Scenario", "ScenarioError", "ScriptedBackend", "load_scenario", "parse_scenario"]

SCHEMA = "dissent.scenario/1"


class ScenarioError(ValueError):
    def __init__(self, source: str, line: int | None, message: str):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line


class _LineDict(dict):
    line: int | None = None


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _LineDict(loader.construct_pairs(node, deep=True))
    out.line = node.start_mark.line + 1
    return out


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


@dataclass(frozen=True)
class FixtureEntry:
    text: str
    token_distributions: tuple[TokenDistribution, ...] | None = None
    token_cost: int = 0
    error: str | None = None

    def to_output(self) -> AgentOutput:
        if self.error is not None:
            raise BackendError(self.error)
        return AgentOutput(self.text, self.token_distributions, self.token_cost)


@dataclass(frozen=True)
class Scenario:
    name: str
    entries: Mapping[tuple[str | None, str, int], FixtureEntry]
    task: TaskInput | None = None
    params: Mapping = field(default_factory=dict)
    base_specialties: tuple[str, ...] = ("object_recognition", "scene_description", "ocr")
    critic_specialties: tuple[str, ...] = ("fact_checker", "completeness_checker", "logic_checker")
    aggregator: bool = False
    integrate_mode: str = "auto"
    expect: Mapping = field(default_factory=dict)
    description: str = ""

    def lookup(self, task_id: str | None, specialty: str, round_k: int) -> FixtureEntry:
        for key in ((task_id, specialty, round_k), (None, specialty, round_k)):
            if key in self.entries:
                return self.entries[key]
        raise MissingFixtureEntry(
            f"scenario {self.name!r} has no response for specialty {specialty!r} "
            f"in round {round_k} (task {task_id!r})"
        )


class ScriptedBackend:
    """Replays a scenario; output depends only on (task id, specialty, round)."""

    serial = False

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def generate(self, role: AgentRole, task: TaskInput, context: DebateContext) -> AgentOutput:
        return self.scenario.lookup(task.task_id, role.specialty, context.round).to_output()


def _distributions(raw, vocab_size, source, line) -> tuple[TokenDistribution, ...]:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError(source, line, "token_probs must be a non-empty list of positions")
    dists = []
    for pos in raw:
        try:
            if isinstance(pos, Mapping):
                dist = TokenDistribution.from_probs(list(pos.values()), tokens=list(pos.keys()))
            else:
                dist = TokenDistribution.from_probs(pos)
            if vocab_size is not None:
                dist = TokenDistribution(dist.probabilities, vocab_size)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(source, line, f"bad token distribution {pos!r}: {exc}") from None
        dists.append(dist)
    return tuple(dists)


def _entry(item, source) -> list[tuple[tuple, FixtureEntry]]:
    line = getattr(item, "line", None)
    if not isinstance(item, Mapping):
        raise ScenarioError(source, line, "each response must be a mapping")
    unknown = set(item) - {
        "specialty", "round", "rounds", "task_id", "text", "claims", "answer",
        "token_probs", "vocab_size", "token_cost", "error",
    }
    if unknown:
        raise ScenarioError(source, line, f"unknown response field(s): {', '.join(sorted(unknown))}")
    if "specialty" not in item:
        raise ScenarioError(source, line, "response entry is missing 'specialty'")
    if ("round" in item) == ("rounds" in item):
        raise ScenarioError(source, line, "response entry needs exactly one of 'round' or 'rounds'")
    rounds = item["rounds"] if "rounds" in item else [item["round"]]
    if not isinstance(rounds, list) or not all(isinstance(r, int) and r >= 0 for r in rounds):
        raise ScenarioError(source, line, "rounds must be non-negative integers")

    text = str(item.get("text", "")).rstrip("\n")
    lines = [text] if text else []
    for claim in item.get("claims", ()):
        lines.append(str(claim))
    if item.get("answer") is not None:
        lines.append(f"ANSWER: {item['answer']}")
    if not lines and "error" not in item:
        raise ScenarioError(source, line, "response entry has no text")

    dists = None
    if item.get("token_probs") is not None:
        dists = _distributions(item["token_probs"], item.get("vocab_size"), source, line)
    cost = item.get("token_cost", 0)
    if not isinstance(cost, int) or cost < 0:
        raise ScenarioError(source, line, f"token_cost must be a non-negative integer, got {cost!r}")
    entry = FixtureEntry(
        text="\n".join(lines),
        token_distributions=dists,
        token_cost=cost,
        error=None if item.get("error") is None else str(item["error"]),
    )
    task_id = None if item.get("task_id") is None else str(item["task_id"])
    return [((task_id, str(item["specialty"]), r), entry) for r in rounds]


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        data = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError(source, line, f"YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, Mapping):
        raise ScenarioError(source, 1, "scenario must be a mapping")
    top = data.line
    if data.get("schema", SCHEMA) != SCHEMA:
        raise ScenarioError(source, top, f"unsupported schema {data.get('schema')!r}, expected {SCHEMA!r}")
    responses = data.get("responses")
    if not isinstance(responses, list):
        raise ScenarioError(source, top, "scenario needs a 'responses' list")

    entries: dict = {}
    for item in responses:
        for key, entry in _entry(item, source):
            if key in entries:
                raise ScenarioError(source, getattr(item, "line", None), f"duplicate response for {key}")
            entries[key] = entry

    task = None
    if data.get("task") is not None:
        try:
            task = TaskInput.from_dict(data["task"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(source, getattr(data["task"], "line", top), f"bad task: {exc}") from None

    agents = data.get("agents") or {}
    kwargs = {}
    if "base" in agents:
        kwargs["base_specialties"] = tuple(str(s) for s in agents["base"])
    if "critics" in agents:
        kwargs["critic_specialties"] = tuple(str(s) for s in agents["critics"] or ())
    return Scenario(
        name=str(data.get("name", Path(source).stem)),
        entries=entries,
        task=task,
        params=dict(data.get("params") or {}),
        aggregator=bool(agents.get("aggregator", False)),
        integrate_mode=str(data.get("integrate_mode", "auto")),
        expect=dict(data.get("expect") or {}),
        description=str(data.get("description", "")),
        **kwargs,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(str(path), None, f"cannot read scenario: {exc.strerror}") from None
    return parse_scenario(text, source=str(path))
