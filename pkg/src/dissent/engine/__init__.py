"""Debate orchestration and agent backends."""

from .backends import AgentBackend, BackendError, InsufficientAgents, MissingFixtureEntry
from .context import CriticReview, DebateContext, build_messages
from .debate import (
    INTEGRATE_MODES,
    Agent,
    DebateEngine,
    DebateTranscript,
    answer_is_correct,
    debate_round,
    initial_round,
    integrate_judge,
    run_debate,
    validate_transcript,
)
from .http import HttpBackend, HttpBackendConfig, distributions_from_logprobs
from .scenario import FixtureEntry, Scenario, ScenarioError, ScriptedBackend, load_scenario, parse_scenario
from .transcript import (
    TranscriptError,
    dumps_transcript,
    loads_transcript,
    read_transcript,
    write_atomic,
    write_transcript,
)

__all__ = [
    "INTEGRATE_MODES",
    "Agent",
    "AgentBackend",
    "BackendError",
    "CriticReview",
    "DebateContext",
    "DebateEngine",
    "DebateTranscript",
    "FixtureEntry",
    "HttpBackend",
    "HttpBackendConfig",
    "InsufficientAgents",
    "MissingFixtureEntry",
    "Scenario",
    "ScenarioError",
    "ScriptedBackend",
    "TranscriptError",
    "answer_is_correct",
    "build_messages",
    "debate_round",
    "distributions_from_logprobs",
    "dumps_transcript",
    "initial_round",
    "integrate_judge",
    "load_scenario",
    "loads_transcript",
    "parse_scenario",
    "read_transcript",
    "run_debate",
    "validate_transcript",
    "write_atomic",
    "write_transcript",
]
