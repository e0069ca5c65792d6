"""Provider-agnostic chat-completion and embedding access.

Remote providers speak the common HTTP+JSON interfaces: a chat-completions
endpoint (message list in, first choice text out) and an embeddings
endpoint (input text in, float array out).  The bearer token comes from the
``LLM_API_KEY`` environment variable; endpoint and model always come from
the config.

Mock providers make the whole pipeline runnable offline and are pure
functions of (model_id, input text):

* ``mock-chat`` finds the line starting with ``DESC:`` in the prompt and
  answers "1" iff it contains any configured hardware keyword, else "0".
  A prompt whose last content is a ``Keywords:`` line is answered with
  ``topic: <first four keywords>``.
* ``mock-embed`` draws the vector from a counter-based (Philox) stream
  keyed by digest(model_id, text) and L2-normalizes it.  Texts containing a
  hardware keyword get that keyword's fixed class direction mixed in before
  normalization, so clusters of same-keyword texts are well separated.

Mock model-id grammar: a ``flaky<N>`` token makes the first N attempts per
distinct input fail with a retryable error; a ``fail`` token makes every
attempt fail; a trailing integer token sets the embedding dimension
(default 64).
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import requests

from .errors import DimensionError, ProviderError
from .vectors import EmbeddingVector

CHAT_KINDS = ("remote-chat", "mock-chat")
EMBED_KINDS = ("remote-embed", "mock-embed")

DEFAULT_HW_KEYWORDS = (
    "firmware", "bios", "spi", "jtag", "dram",
    "cpu", "soc", "bootloader", "debug port", "physical access",
)

MOCK_EMBED_DIM = 64
MOCK_CLASS_WEIGHT = 3.0

RETRYABLE_STATUS = {429, 500, 502, 503, 504}
BACKOFF_BASE_S = 0.5

_jitter = random.Random()


@dataclass
class ProviderConfig:
    """How to reach one provider and how hard to push it."""

    kind: str
    model_id: str
    endpoint: str | None = None
    max_parallel: int = 4
    retry_limit: int = 3
    timeout: float = 30.0
    temperature: float = 0.0

    def __post_init__(self):
        if self.kind not in CHAT_KINDS + EMBED_KINDS:
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        if not 0 <= self.retry_limit <= 10:
            raise ValueError("retry_limit must be in [0, 10]")
        if self.kind.startswith("remote-") and not self.endpoint:
            raise ValueError(f"{self.kind} requires an endpoint")

    @property
    def is_chat(self) -> bool:
        return self.kind in CHAT_KINDS

    @property
    def is_mock(self) -> bool:
        return self.kind.startswith("mock-")


@dataclass
class CompletionResult:
    text: str
    model_id: str
    latency: float
    attempts: int
    cached: bool = False


@dataclass
class BatchItem:
    """One slot of a batch result: either a value or the per-item error."""

    index: int
    value: object | None = None
    error: Exception | None = None


def cache_key(kind: str, model_id: str, text: str) -> str:
    """Stable digest of (kind, model, NFC-normalized input)."""
    normalized = unicodedata.normalize("NFC", text)
    h = hashlib.sha256()
    for part in (kind, model_id, normalized):
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


class ResponseCache:
    """Append-only jsonl store keyed by digest; safe for threaded use."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, object] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                self._entries[obj["key"]] = obj["value"]

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str):
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, kind: str, model_id: str, value) -> None:
        line = json.dumps({"key": key, "kind": kind, "model": model_id, "value": value,
                           "created_at": datetime.now(timezone.utc).isoformat()},
                          ensure_ascii=False)
        with self._lock:
            if key in self._entries:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
            self._entries[key] = value


# --- mock providers ---------------------------------------------------------

class _Transient(Exception):
    """Internal: a failure the retry loop is allowed to absorb."""

    def __init__(self, status, body):
        super().__init__(body)
        self.status = status
        self.body = body


_flaky_lock = threading.Lock()
_flaky_counts: dict[tuple[str, str], int] = {}

# Failure injection for tests: a "fail"/"flaky<N>" token in the model id
# applies to every input; the markers below apply to a single input text.
TEXT_FAIL_MARKER = "mock::fail"
_TEXT_FLAKY = re.compile(r"mock::flaky(\d+)")


def reset_flaky_state() -> None:
    """Forget per-input failure counters of flaky mock models (test helper)."""
    with _flaky_lock:
        _flaky_counts.clear()


def _mock_tokens(model_id: str) -> list[str]:
    return model_id.lower().split("-")


def mock_embed_dim(model_id: str) -> int:
    tokens = _mock_tokens(model_id)
    if tokens and tokens[-1].isdigit():
        return int(tokens[-1])
    return MOCK_EMBED_DIM


def _mock_maybe_fail(model_id: str, text: str) -> None:
    tokens = _mock_tokens(model_id)
    if "fail" in tokens or TEXT_FAIL_MARKER in text:
        raise _Transient(503, "mock provider configured to fail")
    flaky = next((t for t in tokens if t.startswith("flaky") and t[5:].isdigit()), None)
    budget = int(flaky[5:]) if flaky else 0
    marker = _TEXT_FLAKY.search(text)
    if marker:
        budget = max(budget, int(marker.group(1)))
    if budget > 0:
        key = (model_id, text)
        with _flaky_lock:
            seen = _flaky_counts.get(key, 0)
            _flaky_counts[key] = seen + 1
        if seen < budget:
            raise _Transient(503, f"flaky mock failure {seen + 1}/{budget}")


def keyword_class(text: str, keywords=DEFAULT_HW_KEYWORDS) -> str | None:
    """First configured hardware keyword contained in the text, if any."""
    lowered = text.lower()
    for term in keywords:
        if term in lowered:
            return term
    return None


def mock_chat_reply(model_id: str, prompt: str, keywords=DEFAULT_HW_KEYWORDS) -> str:
    for line in prompt.splitlines():
        if line.startswith("DESC:"):
            return "1" if keyword_class(line, keywords) else "0"
    for line in prompt.splitlines():
        if line.startswith("Keywords:"):
            terms = [t.strip() for t in line[len("Keywords:"):].split(",") if t.strip()]
            return "topic: " + " ".join(terms[:4])
    raise _Transient(None, "mock chat cannot interpret prompt")


def _philox(material: str) -> np.random.Generator:
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def mock_embed_vector(model_id: str, text: str, keywords=DEFAULT_HW_KEYWORDS) -> np.ndarray:
    dim = mock_embed_dim(model_id)
    vec = _philox(model_id + "\x00" + text).standard_normal(dim)
    cls = keyword_class(text, keywords)
    if cls is not None:
        direction = _philox(model_id + "\x00class:" + cls).standard_normal(dim)
        direction /= np.linalg.norm(direction)
        # scale with sqrt(dim) so the class direction dominates the noise
        # (whose norm grows like sqrt(dim)) by the same factor at any dim
        vec = vec + MOCK_CLASS_WEIGHT * np.sqrt(dim) * direction
    return vec / np.linalg.norm(vec)


# --- remote providers -------------------------------------------------------

def _auth_headers() -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    token = os.environ.get("LLM_API_KEY")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


def _check_response(resp: requests.Response) -> dict:
    if resp.status_code in RETRYABLE_STATUS:
        raise _Transient(resp.status_code, resp.text)
    if resp.status_code != 200:
        raise ProviderError(resp.status_code, resp.text)
    try:
        return resp.json()
    except ValueError:
        raise ProviderError(resp.status_code, f"non-json response: {resp.text[:200]}")


def _remote_chat(config: ProviderConfig, prompt: str) -> str:
    payload = {
        "model": config.model_id,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
    }
    try:
        resp = requests.post(config.endpoint, json=payload,
                             headers=_auth_headers(), timeout=config.timeout)
    except requests.Timeout:
        raise _Transient(None, "timeout")
    except requests.RequestException as exc:
        raise _Transient(None, f"connection failure: {exc}")
    data = _check_response(resp)
    try:
        return str(data["choices"][0]["message"]["content"])
    except (KeyError, IndexError, TypeError):
        raise ProviderError(200, f"malformed chat response: {json.dumps(data)[:200]}")


def _remote_embed(config: ProviderConfig, text: str) -> list[float]:
    payload = {"model": config.model_id, "input": text}
    try:
        resp = requests.post(config.endpoint, json=payload,
                             headers=_auth_headers(), timeout=config.timeout)
    except requests.Timeout:
        raise _Transient(None, "timeout")
    except requests.RequestException as exc:
        raise _Transient(None, f"connection failure: {exc}")
    data = _check_response(resp)
    try:
        return [float(x) for x in data["data"][0]["embedding"]]
    except (KeyError, IndexError, TypeError, ValueError):
        raise ProviderError(200, f"malformed embedding response: {json.dumps(data)[:200]}")


# --- retry loop and public operations ---------------------------------------

def _with_retries(config: ProviderConfig, call, backoff_base: float, sleep):
    """Run `call` with up to retry_limit retries on transient failures.

    Backoff is exponential with full jitter: uniform(0, base * 2^attempt).
    Returns (value, attempts).
    """
    attempts = 0
    while True:
        attempts += 1
        try:
            return call(), attempts
        except _Transient as exc:
            if attempts > config.retry_limit:
                if exc.status is None and exc.body == "timeout":
                    raise TimeoutError(f"{config.model_id}: timed out after {attempts} attempts")
                raise ProviderError(exc.status, exc.body)
            sleep(_jitter.uniform(0.0, backoff_base * (2 ** (attempts - 1))))


def complete(config: ProviderConfig, prompt: str, cache: ResponseCache | None = None,
             backoff_base: float = BACKOFF_BASE_S, sleep=time.sleep) -> CompletionResult:
    """One chat completion; cache hits short-circuit the provider entirely."""
    if not config.is_chat:
        raise ValueError(f"complete() needs a chat provider, got {config.kind}")
    key = cache_key("chat", config.model_id, prompt)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return CompletionResult(str(hit), config.model_id, 0.0, attempts=0, cached=True)

    def call() -> str:
        if config.is_mock:
            _mock_maybe_fail(config.model_id, prompt)
            return mock_chat_reply(config.model_id, prompt)
        return _remote_chat(config, prompt)

    start = time.perf_counter()
    text, attempts = _with_retries(config, call, backoff_base, sleep)
    latency = time.perf_counter() - start
    if cache is not None:
        cache.put(key, "chat", config.model_id, text)
    return CompletionResult(text, config.model_id, latency, attempts=attempts)


def embed(config: ProviderConfig, text: str, cache: ResponseCache | None = None,
          backoff_base: float = BACKOFF_BASE_S, sleep=time.sleep) -> EmbeddingVector:
    """Embed one text; the vector's dimension is recorded alongside it."""
    if config.is_chat:
        raise ValueError(f"embed() needs an embed provider, got {config.kind}")
    if not text:
        raise ValueError("cannot embed empty text")
    key = cache_key("embed", config.model_id, text)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            values = np.array(hit, dtype=np.float64)
            return EmbeddingVector(values, len(values), config.model_id)

    def call() -> list[float]:
        if config.is_mock:
            _mock_maybe_fail(config.model_id, text)
            return [float(x) for x in mock_embed_vector(config.model_id, text)]
        return _remote_embed(config, text)

    values, _ = _with_retries(config, call, backoff_base, sleep)
    if config.is_mock and len(values) != mock_embed_dim(config.model_id):
        raise DimensionError(f"mock returned {len(values)} values, declared {mock_embed_dim(config.model_id)}")
    if cache is not None:
        cache.put(key, "embed", config.model_id, values)
    return EmbeddingVector(np.array(values, dtype=np.float64), len(values), config.model_id)


def run_batch(config: ProviderConfig, inputs: list[str], op: str,
              cache: ResponseCache | None = None,
              backoff_base: float = BACKOFF_BASE_S, sleep=time.sleep) -> list[BatchItem]:
    """Run an operation over many inputs with bounded parallelism.

    The result list is index-aligned with the inputs regardless of
    completion order; a failing item carries its error instead of aborting
    the batch.  At most config.max_parallel requests are in flight at once.
    """
    if not inputs:
        raise ValueError("run_batch needs at least one input")
    if op not in ("complete", "embed"):
        raise ValueError(f"unknown batch op {op!r}")
    fn = complete if op == "complete" else embed

    def worker(i: int) -> BatchItem:
        try:
            return BatchItem(i, value=fn(config, inputs[i], cache=cache,
                                         backoff_base=backoff_base, sleep=sleep))
        except Exception as exc:  # per-item isolation
            return BatchItem(i, error=exc)

    items: list[BatchItem | None] = [None] * len(inputs)
    with ThreadPoolExecutor(max_workers=config.max_parallel) as pool:
        for item in pool.map(worker, range(len(inputs))):
            items[item.index] = item
    return items  # type: ignore[return-value]
