"""Post-hoc analysis of debate runs: decay fits, calibration and cost."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .engine.debate import answer_is_correct
from .model import TerminationReason

__all__ = [
    "CalibrationReport",
    "CostReport",
    "DecayFit",
    "DegenerateSample",
    "calibration_report",
    "cost_report",
    "dynamic_adaptability",
    "expected_calibration_error",
    "fit_decay",
    "uncertainty_accuracy",
]


class DegenerateSample(ValueError):
    """A statistic is undefined because a variable has no variance."""


@dataclass(frozen=True)
class DecayFit:
    """Exponential model ``u(k) = u0 * exp(-lambda_decay * k)``.

    A negative ``lambda_decay`` describes growth; the decay rate is then
    negative too.
    """

    u0: float
    lambda_decay: float
    per_round_decay_rate: float
    residual: float
    n_points: int = 0

    def __post_init__(self):
        if not self.u0 > 0:
            raise ValueError("u0 must be positive")
        if self.residual < 0:
            raise ValueError("residual must be non-negative")
        if self.per_round_decay_rate != 1.0 - math.exp(-self.lambda_decay):
            raise ValueError("per_round_decay_rate must equal 1 - exp(-lambda_decay)")

    @classmethod
    def from_rate(cls, u0: float, lambda_decay: float, residual: float = 0.0, n_points: int = 0) -> DecayFit:
        return cls(u0, lambda_decay, 1.0 - math.exp(-lambda_decay), residual, n_points)

    def predict(self, rounds) -> np.ndarray:
        return self.u0 * np.exp(-self.lambda_decay * np.asarray(rounds, dtype=float))


def fit_decay(u_series: Sequence[tuple[int, float]]) -> DecayFit:
    """Least-squares line through ``(round, ln u_sys)``."""
    if len(u_series) < 2:
        raise ValueError("decay fit needs at least two points")
    k = np.array([float(r) for r, _ in u_series])
    u = np.array([float(v) for _, v in u_series])
    if np.any(~np.isfinite(u)) or np.any(u <= 0):
        raise ValueError("u_sys values must be positive to take logs")
    if np.ptp(k) == 0:
        raise ValueError("decay fit needs at least two distinct rounds")
    y = np.log(u)
    dk = k - k.mean()
    slope = float(dk @ (y - y.mean()) / (dk @ dk))
    intercept = float(y.mean() - slope * k.mean())
    resid = y - (intercept + slope * k)
    rms = float(np.sqrt(np.mean(resid**2)))
    lam = -slope + 0.0  # avoid reporting -0.0
    return DecayFit.from_rate(math.exp(intercept), lam, rms, len(u_series))


def expected_calibration_error(samples: Sequence[tuple[float, bool]], bins: int = 10) -> float:
    """Weighted mean gap between confidence and accuracy over equal-width bins.

    Bins are ``[0, 1/b], (1/b, 2/b], ..., ((b-1)/b, 1]``.
    """
    if not samples:
        raise ValueError("ECE needs at least one sample")
    if isinstance(bins, bool) or int(bins) != bins or bins < 1:
        raise ValueError("bins must be a positive integer")
    conf = np.array([float(c) for c, _ in samples])
    correct = np.array([bool(ok) for _, ok in samples], dtype=float)
    if np.any(~np.isfinite(conf)) or np.any(conf < 0) or np.any(conf > 1):
        raise ValueError("confidences must lie in [0, 1]")
    edges = np.linspace(0.0, 1.0, int(bins) + 1)
    idx = np.maximum(np.searchsorted(edges, conf, side="left") - 1, 0)
    n = conf.size
    ece = 0.0
    for b in range(int(bins)):
        mask = idx == b
        count = int(mask.sum())
        if count:
            ece += count / n * abs(conf[mask].mean() - correct[mask].mean())
    return float(ece)


def uncertainty_accuracy(samples: Sequence[tuple[bool, bool]]) -> float:
    """Fraction of cases where the high-uncertainty flag matches the problem label."""
    if not samples:
        raise ValueError("UA needs at least one sample")
    return sum(bool(flag) == bool(bad) for flag, bad in samples) / len(samples)


def dynamic_adaptability(samples: Sequence[tuple[float, bool]]) -> float:
    """Point-biserial correlation between initial U_sys and whether debate ran."""
    if len(samples) < 2:
        raise DegenerateSample("need at least two samples")
    u = np.array([float(v) for v, _ in samples])
    t = np.array([1.0 if trig else 0.0 for _, trig in samples])
    du, dt = u - u.mean(), t - t.mean()
    su, st = float(du @ du), float(dt @ dt)
    if su == 0 or st == 0:
        raise DegenerateSample("initial uncertainty and trigger must both vary")
    return float(np.clip(du @ dt / math.sqrt(su * st), -1.0, 1.0))


@dataclass(frozen=True)
class CalibrationReport:
    ece: float
    ua: float
    da: float | None
    bin_count: int
    n_samples: int
    notice: str = ""

    def to_dict(self) -> dict:
        return {
            "ece": self.ece,
            "ua": self.ua,
            "da": self.da,
            "bin_count": self.bin_count,
            "n_samples": self.n_samples,
            "notice": self.notice,
        }


def calibration_report(transcripts: Sequence, bins: int = 10, ua_threshold: float = 0.45) -> CalibrationReport | None:
    """Calibration over the transcripts whose task has a ground truth.

    Confidence is ``1 - U_sys`` of the final state; a run is flagged uncertain
    when that final U_sys exceeds ``ua_threshold`` and is problematic when its
    final answer is wrong. Returns None when no transcript has ground truth.
    """
    graded = [(t, answer_is_correct(t.final_answer, t.task)) for t in transcripts]
    graded = [(t, ok) for t, ok in graded if ok is not None]
    if not graded:
        return None
    ece = expected_calibration_error([(1.0 - t.states[-1].system_uncertainty, ok) for t, ok in graded], bins)
    ua = uncertainty_accuracy([(t.states[-1].system_uncertainty > ua_threshold, not ok) for t, ok in graded])
    notice = ""
    try:
        da = dynamic_adaptability([(t.states[0].system_uncertainty, t.triggered) for t, _ in graded])
    except DegenerateSample as exc:
        da, notice = None, f"dynamic adaptability undefined: {exc}"
    return CalibrationReport(ece, ua, da, bins, len(graded), notice)


@dataclass(frozen=True)
class CostReport:
    mean_cumulative_cost: tuple[float, ...]  # index k: mean cost through round k
    mean_rounds: float
    trigger_rate: float
    termination_counts: dict[str, int]
    n_transcripts: int

    def to_dict(self) -> dict:
        return {
            "mean_cumulative_cost": list(self.mean_cumulative_cost),
            "mean_rounds": self.mean_rounds,
            "trigger_rate": self.trigger_rate,
            "termination_counts": dict(self.termination_counts),
            "n_transcripts": self.n_transcripts,
        }


def cost_report(transcripts: Iterable) -> CostReport:
    """Aggregate cost, depth and termination statistics over transcripts.

    The mean cumulative cost at round k averages over transcripts, with
    transcripts that stopped earlier contributing their final total.
    """
    transcripts = list(transcripts)
    if not transcripts:
        raise ValueError("cost report needs at least one transcript")
    cumulative = [t.cumulative_costs() for t in transcripts]
    depth = max(len(c) for c in cumulative)
    padded = np.array([c + [c[-1]] * (depth - len(c)) for c in cumulative], dtype=float)
    counts = Counter(str(t.termination) for t in transcripts)
    histogram = {reason.value: counts.get(reason.value, 0) for reason in TerminationReason}
    return CostReport(
        mean_cumulative_cost=tuple(float(v) for v in padded.mean(axis=0)),
        mean_rounds=float(np.mean([t.debate_rounds for t in transcripts])),
        trigger_rate=sum(t.triggered for t in transcripts) / len(transcripts),
        termination_counts=histogram,
        n_transcripts=len(transcripts),
    )
