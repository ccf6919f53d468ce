"""Command-line interface: ``dissent run | simulate | report``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .analytics import calibration_report, cost_report, fit_decay
from .config import ConfigError, apply_override, build_engine, engine_for_scenario, load_config
from .engine import (
    BackendError,
    DebateTranscript,
    InsufficientAgents,
    MissingFixtureEntry,
    ScenarioError,
    TranscriptError,
    answer_is_correct,
    load_scenario,
    read_transcript,
    write_atomic,
    write_transcript,
)
from .model import HyperParams, TaskInput, check_unique_task_ids

__all__ = ["main", "read_tasks"]

logger = logging.getLogger("dissent")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
REPORT_SCHEMA = "dissent.report/1"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def read_tasks(path) -> list[TaskInput]:
    """One JSON task record per line; blank lines are skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read tasks ({exc.strerror})") from None
    tasks = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            tasks.append(TaskInput.from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad task record ({exc})") from None
    try:
        check_unique_task_ids(tasks)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return tasks


def _safe_name(task_id: str) -> str:
    return re.sub(r"[^\w.-]", "_", task_id)


def cmd_run(args) -> int:
    config = load_config(args.config, args.set)
    tasks = read_tasks(args.tasks)
    out_dir = Path(args.output) if args.output else config.output_dir
    engine = build_engine(config)
    deterministic = config.backend_kind == "scripted"

    def run_one(task: TaskInput):
        try:
            transcript = engine.run(task, clock=None if deterministic else time.perf_counter)
        except (InsufficientAgents, BackendError, MissingFixtureEntry) as exc:
            logger.error("task %s aborted: %s", task.task_id, exc)
            return task, None, f"{type(exc).__name__}: {exc}"
        write_transcript(transcript, out_dir / "transcripts" / f"{_safe_name(task.task_id)}.jsonl",
                         include_wall_time=not deterministic)
        return task, transcript, None

    if config.parallelism > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            results = list(pool.map(run_one, tasks))
    else:
        results = [run_one(t) for t in tasks]

    rows, done = [], []
    for task, transcript, error in results:
        row = {"task_id": task.task_id, "status": "aborted" if error else "ok"}
        if error:
            row["error"] = error
        else:
            done.append(transcript)
            row.update(
                rounds=transcript.debate_rounds,
                termination=str(transcript.termination),
                final_answer=transcript.final_answer,
                correct=answer_is_correct(transcript.final_answer, task),
                total_token_cost=transcript.total_token_cost,
                final_system_uncertainty=transcript.states[-1].system_uncertainty,
            )
        rows.append(row)
    summary = {
        "schema": "dissent.summary/1",
        "n_tasks": len(tasks),
        "n_aborted": sum(r["status"] == "aborted" for r in rows),
        "tasks": rows,
        "cost": cost_report(done).to_dict() if done else None,
    }
    write_atomic(out_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{len(done)}/{len(tasks)} task(s) completed; results in {out_dir}")
    return EXIT_RUNTIME if summary["n_aborted"] else EXIT_OK


def format_trace(transcript: DebateTranscript) -> str:
    lines = [f"task {transcript.task.task_id}: {transcript.task.question}"]
    for state in transcript.states:
        disputes = 0 if state.dispute is None else len(state.dispute)
        reason = state.termination.value if state.termination else "-"
        lines.append(
            f"round {state.round}  U_sys={state.system_uncertainty:.4f}  conflict={state.conflict_score:.4f}  "
            f"disputes={disputes}  termination={reason}"
        )
        lines.append(f"  {'agent':<24}{'weight':>8}{'uncertainty':>13}  answer")
        uncertainties = state.uncertainties
        for agent_id, weight in state.weights.items():
            answer = next((r.answer for r in state.responses if r.agent_id == agent_id), None)
            lines.append(f"  {agent_id:<24}{weight:>8.4f}{uncertainties[agent_id]:>13.4f}  {answer or '-'}")
        for agent_id, err in state.errors:
            lines.append(f"  ! {agent_id}: {err}")
    lines.append(f"final answer: {transcript.final_answer}")
    lines.append(f"total token cost: {transcript.total_token_cost}")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.task is None:
        raise ConfigError(f"{args.scenario}: scenario has no 'task' to simulate")
    data: dict = {}
    for assignment in args.set:
        apply_override(data, assignment)
    try:
        engine = engine_for_scenario(scenario, **data.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    transcript = engine.run(scenario.task, clock=None)
    print(format_trace(transcript))
    if args.transcript:
        write_transcript(transcript, args.transcript, include_wall_time=False)
    return EXIT_OK


def _load_dir(directory: Path) -> list[DebateTranscript]:
    transcripts = []
    for path in sorted(directory.rglob("*.jsonl")):
        try:
            transcripts.append(read_transcript(path))
        except TranscriptError as exc:
            print(f"warning: skipping {path}: {exc}", file=sys.stderr)
    return transcripts


def cmd_report(args) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        raise ConfigError(f"{directory}: not a directory")
    transcripts = _load_dir(directory)
    if not transcripts:
        raise ConfigError(f"{directory}: no readable transcripts found")

    records = []
    out = [f"transcripts: {len(transcripts)}"]

    points = [(s.round, s.system_uncertainty) for t in transcripts for s in t.states if s.system_uncertainty > 0]
    try:
        fit = fit_decay(points)
    except ValueError as exc:
        out.append(f"decay fit: not available ({exc})")
        records.append({"type": "decay", "available": False, "notice": str(exc)})
    else:
        out.append(
            f"decay fit: u0={fit.u0:.4f}  lambda={fit.lambda_decay:.4f}  "
            f"decay rate={fit.per_round_decay_rate:.4f}  rms residual={fit.residual:.4f}  points={fit.n_points}"
        )
        records.append({"type": "decay", "available": True, "u0": fit.u0, "lambda_decay": fit.lambda_decay,
                        "per_round_decay_rate": fit.per_round_decay_rate, "residual": fit.residual,
                        "n_points": fit.n_points})

    cost = cost_report(transcripts)
    out.append(f"trigger rate: {cost.trigger_rate:.4f}  mean debate rounds: {cost.mean_rounds:.4f}")
    out.append("mean cumulative token cost by round: " + ", ".join(
        f"{k}:{v:.1f}" for k, v in enumerate(cost.mean_cumulative_cost)
    ))
    out.append("termination reasons: " + ", ".join(f"{k}={v}" for k, v in cost.termination_counts.items()))
    records.append({"type": "cost", **cost.to_dict()})

    threshold = HyperParams().theta_u if args.ua_threshold is None else args.ua_threshold
    calib = calibration_report(transcripts, bins=args.bins, ua_threshold=threshold)
    if calib is None:
        notice = "calibration skipped: no transcript has a ground-truth answer"
        out.append(notice)
        records.append({"type": "calibration", "available": False, "notice": notice})
    else:
        da = "undefined" if calib.da is None else f"{calib.da:.4f}"
        out.append(f"calibration (n={calib.n_samples}, bins={calib.bin_count}): "
                   f"ECE={calib.ece:.4f}  UA={calib.ua:.4f}  DA={da}")
        if calib.notice:
            out.append(f"  note: {calib.notice}")
        records.append({"type": "calibration", "available": True, **calib.to_dict()})

    print("\n".join(out))
    if args.output:
        text = "".join(json.dumps({"schema": REPORT_SCHEMA, **r}, sort_keys=True) + "\n" for r in records)
        write_atomic(args.output, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dissent", description="Uncertainty-gated multi-agent debate.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run debates over a batch of tasks")
    run.add_argument("--config", required=True)
    run.add_argument("--tasks", required=True, help="JSON-lines task file")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config value")
    run.add_argument("--output", help="output directory (overrides the config)")
    run.set_defaults(func=cmd_run)

    sim = sub.add_parser("simulate", help="replay a scripted scenario and print the round trace")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a hyperparameter")
    sim.add_argument("--transcript", help="also write the transcript here")
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("report", help="analyze a directory of transcripts")
    rep.add_argument("--dir", required=True)
    rep.add_argument("--output", help="write machine-readable records here")
    rep.add_argument("--bins", type=int, default=10)
    rep.add_argument("--ua-threshold", type=float, default=None,
                     help="U_sys above which a run counts as flagged (default: theta_u)")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InsufficientAgents, BackendError, MissingFixtureEntry) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
