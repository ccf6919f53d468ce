"""Backend for OpenAI-compatible chat-completion endpoints."""

from __future__ import annotations

import base64
import logging
import math
import mimetypes
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from ..model import AgentOutput, AgentRole, TaskInput, TokenDistribution
from .backends import BackendError
from .context import DebateContext, build_messages

__all__ = ["HttpBackend", "HttpBackendConfig", "distributions_from_logprobs"]

logger = logging.getLogger(__name__)

_RETRY_STATUS = {408, 409, 429}


@dataclass(frozen=True)
class HttpBackendConfig:
    base_url: str
    model: str
    api_key: str | None = None
    timeout: float = 60.0
    max_attempts: int = 3
    backoff: float = 0.5
    max_backoff: float = 8.0
    top_logprobs: int | None = 5  # None: do not ask for logprobs
    vocab_size: int = 32000
    temperature: float = 0.0
    max_tokens: int | None = None
    send_images: bool = True
    serial: bool = False

    def __post_init__(self):
        if not self.base_url:
            raise ValueError("http backend needs a base_url")
        if not self.model:
            raise ValueError("http backend needs a model name")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be positive")


def distributions_from_logprobs(content, vocab_size: int) -> tuple[TokenDistribution, ...] | None:
    """Convert ``choices[0].logprobs.content`` into renormalized top-K distributions."""
    if not content:
        return None
    dists = []
    for position in content:
        candidates = position.get("top_logprobs") or [position]
        probs: dict[str, float] = {}
        for cand in candidates:
            if cand.get("logprob") is None:
                continue
            token = cand.get("token", "")
            probs[token] = max(probs.get(token, 0.0), math.exp(float(cand["logprob"])))
        total = sum(probs.values())
        if not probs or total <= 0:
            continue
        pairs = sorted(((t, p / total) for t, p in probs.items()), key=lambda tp: -tp[1])
        dists.append(TokenDistribution(tuple(pairs), max(vocab_size, len(pairs))))
    return tuple(dists) or None


def _image_part(ref: str) -> dict:
    if ref.startswith(("http://", "https://", "data:")):
        url = ref
    else:
        path = Path(ref)
        mime = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        url = f"data:{mime};base64," + base64.b64encode(path.read_bytes()).decode("ascii")
    return {"type": "image_url", "image_url": {"url": url}}


class HttpBackend:
    """Calls ``POST {base_url}/chat/completions`` with bounded retries.

    Transport errors, timeouts, 429 and 5xx responses are retried with
    exponential backoff; other 4xx responses fail immediately.
    """

    def __init__(self, config: HttpBackendConfig, client: httpx.Client | None = None, sleep=time.sleep):
        self.config = config
        self.serial = config.serial
        self._sleep = sleep
        headers = {"Content-Type": "application/json"}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        self._client = client or httpx.Client(timeout=config.timeout, headers=headers)
        self._url = config.base_url.rstrip("/") + "/chat/completions"

    def close(self) -> None:
        self._client.close()

    def payload(self, role: AgentRole, task: TaskInput, context: DebateContext) -> dict:
        system, user = build_messages(role, task, context)
        content: str | list = user
        if task.media and self.config.send_images:
            try:
                content = [{"type": "text", "text": user}] + [_image_part(m) for m in task.media]
            except OSError as exc:
                raise BackendError(f"cannot read media for task {task.task_id!r}: {exc}") from exc
        body = {
            "model": self.config.model,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": content}],
            "temperature": self.config.temperature,
        }
        if self.config.max_tokens is not None:
            body["max_tokens"] = self.config.max_tokens
        if self.config.top_logprobs is not None:
            body["logprobs"] = True
            body["top_logprobs"] = self.config.top_logprobs
        return body

    def _post(self, body: dict) -> dict:
        cfg = self.config
        last = "no attempt made"
        for attempt in range(cfg.max_attempts):
            if attempt:
                self._sleep(min(cfg.max_backoff, cfg.backoff * 2 ** (attempt - 1)))
            try:
                resp = self._client.post(self._url, json=body, timeout=cfg.timeout)
            except httpx.TimeoutException:
                last = f"timed out after {cfg.timeout}s"
                continue
            except httpx.TransportError as exc:
                last = f"transport error: {exc}"
                continue
            if resp.status_code in _RETRY_STATUS or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                logger.info("attempt %d/%d to %s failed: %s", attempt + 1, cfg.max_attempts, self._url, last)
                continue
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code} from {self._url}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError:
                raise BackendError(f"non-JSON response from {self._url}") from None
        raise BackendError(f"{self._url} failed after {cfg.max_attempts} attempt(s): {last}")

    def generate(self, role: AgentRole, task: TaskInput, context: DebateContext) -> AgentOutput:
        data = self._post(self.payload(role, task, context))
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"] or ""
        except (KeyError, IndexError, TypeError):
            raise BackendError("response has no choices[0].message.content") from None
        logprobs = choice.get("logprobs") or {}
        dists = distributions_from_logprobs(logprobs.get("content"), self.config.vocab_size)
        usage = data.get("usage") or {}
        cost = usage.get("total_tokens")
        if cost is None:
            cost = (usage.get("prompt_tokens") or 0) + (usage.get("completion_tokens") or 0)
        return AgentOutput(text=text, token_distributions=dists, token_cost=int(cost))
