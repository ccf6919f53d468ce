"""Uncertainty-gated, game-theoretic multi-agent debate."""

from .analytics import (
    CalibrationReport,
    CostReport,
    DecayFit,
    DegenerateSample,
    calibration_report,
    cost_report,
    dynamic_adaptability,
    expected_calibration_error,
    fit_decay,
    uncertainty_accuracy,
)
from .claims import MalformedClaim, extract_answer, map_evidence, parse_claims, serialize_claims
from .consensus import conflict_score, identify_disputes, should_debate, should_terminate, system_uncertainty
from .engine import (
    Agent,
    BackendError,
    DebateEngine,
    DebateTranscript,
    HttpBackend,
    HttpBackendConfig,
    InsufficientAgents,
    MissingFixtureEntry,
    ScriptedBackend,
    integrate_judge,
    load_scenario,
    run_debate,
)
from .game import (
    SimMatrix,
    agent_utility,
    cooperative_score,
    optimal_weights,
    protocol_equivalence_check,
    regularized_objective,
    softmax_weights,
    total_utility,
)
from .model import (
    AgentOutput,
    AgentRole,
    ArgumentPackage,
    ClaimTuple,
    DebateState,
    DisputeItem,
    DisputeSet,
    HyperParams,
    MarkerLexicon,
    RegionRef,
    ResponseRecord,
    TaskInput,
    TerminationReason,
    TokenDistribution,
    WeightVector,
    validate_state,
)
from .uncertainty import EmptyGeneration, assess_uncertainty, phi_gen_plus, phi_sem

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
