"""Line-delimited JSON transcripts.

One record per line, each tagged with ``schema`` and ``type``: a ``task``
record, then per round a ``state`` record followed by that round's
``argument`` and ``review`` records, then a closing ``summary``. Keys are
sorted so equal transcripts serialize to equal bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from ..model import ArgumentPackage, DebateState, TaskInput
from .context import CriticReview
from .debate import DebateTranscript

__all__ = ["SCHEMA", "TranscriptError", "dumps_transcript", "loads_transcript", "read_transcript", "write_atomic",
           "write_transcript"]

SCHEMA = "dissent.transcript/1"


class TranscriptError(ValueError):
    pass


def _line(kind: str, payload: dict) -> str:
    return json.dumps({"schema": SCHEMA, "type": kind, **payload}, sort_keys=True, ensure_ascii=False)


def dumps_transcript(transcript: DebateTranscript, include_wall_time: bool = True) -> str:
    lines = [_line("task", {"task": transcript.task.to_dict()})]
    for state in transcript.states:
        lines.append(_line("state", {"state": state.to_dict()}))
        lines.extend(_line("argument", {"argument": a.to_dict()}) for a in transcript.arguments if a.round == state.round)
        lines.extend(_line("review", {"review": r.to_dict()}) for r in transcript.critic_reviews if r.round == state.round)
    summary = {"final_answer": transcript.final_answer, "total_token_cost": transcript.total_token_cost}
    if include_wall_time:
        summary["wall_time_ms"] = transcript.wall_time_ms
    lines.append(_line("summary", summary))
    return "\n".join(lines) + "\n"


def loads_transcript(text: str, source: str = "<transcript>") -> DebateTranscript:
    task = None
    states, arguments, reviews = [], [], []
    summary = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            if record.get("schema") != SCHEMA:
                raise TranscriptError(f"unsupported schema {record.get('schema')!r}")
            kind = record["type"]
            if kind == "task":
                task = TaskInput.from_dict(record["task"])
            elif kind == "state":
                states.append(DebateState.from_dict(record["state"]))
            elif kind == "argument":
                arguments.append(ArgumentPackage.from_dict(record["argument"]))
            elif kind == "review":
                reviews.append(CriticReview.from_dict(record["review"]))
            elif kind == "summary":
                summary = record
            else:
                raise TranscriptError(f"unknown record type {kind!r}")
        except TranscriptError as exc:
            raise TranscriptError(f"{source}:{lineno}: {exc}") from None
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise TranscriptError(f"{source}:{lineno}: malformed record ({exc})") from None
    if task is None or not states or summary is None:
        raise TranscriptError(f"{source}: transcript needs task, state and summary records")
    return DebateTranscript(
        task=task,
        states=tuple(states),
        arguments=tuple(arguments),
        critic_reviews=tuple(reviews),
        final_answer=summary.get("final_answer", ""),
        total_token_cost=int(summary.get("total_token_cost", 0)),
        wall_time_ms=int(summary.get("wall_time_ms", 0)),
    )


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_transcript(transcript: DebateTranscript, path, include_wall_time: bool = True) -> None:
    write_atomic(path, dumps_transcript(transcript, include_wall_time))


def read_transcript(path) -> DebateTranscript:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise TranscriptError(f"{path}: cannot read ({exc})") from None
    return loads_transcript(text, str(path))
