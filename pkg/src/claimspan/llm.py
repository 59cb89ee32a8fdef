"""Prompt construction, cached chat completion, and LLM evaluation runs.

The prompt template is fixed: the instruction stem on the first line, then
k example blocks, then the query post, all separated by blank lines. Each
example block is a "Post:" line followed by a "Claim:" line (with a leading
"Language:" line for the language-targeted kind). The prompt ends with the
query "Post:" line; the model is expected to answer with claim text.

Responses are cached on disk keyed by a hash of (model id, prompt), which
makes runs reproducible and resumable: replaying an interrupted run issues
requests only for posts without a cached response.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import random
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import requests

from .annotate import AnnotateConfig, normalize_llm_response
from .corpus import AnnotatedSample, LANGUAGE_NAMES, PostRecord
from .errors import (
    ConfigurationError,
    EmptyResponseError,
    JsonlError,
    NoAlignmentError,
    TransportError,
    ValidationError,
)
from .evaluation import SpanEvalResult, corpus_eval


class PromptKind(str, enum.Enum):
    IDENTIFY = "identify"
    EXTRACT = "extract"
    SPAN = "span"
    LANGUAGE = "language"


_STEMS = {
    PromptKind.IDENTIFY: "Identify the central claim",
    PromptKind.EXTRACT: "Extract the central claim",
    PromptKind.SPAN: "Extract the central claim span",
    PromptKind.LANGUAGE: "Extract the central claim in {language}",
}

# The in-context grid used throughout; other non-negative counts work too.
SUPPORTED_SHOT_COUNTS = (0, 1, 4, 7, 10)


@dataclass(frozen=True)
class LlmConfig:
    model: str
    temperature: float = 0.0
    max_retries: int = 3
    backoff_base: float = 0.5
    cache_dir: str | Path = "llm-cache"

    def __post_init__(self):
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValidationError("max retries must be >= 0")
        if self.backoff_base < 0:
            raise ValidationError("backoff base must be >= 0")


class ChatClient(Protocol):
    def send(self, prompt: str, cfg: LlmConfig) -> str:
        ...


class FixtureChatClient:
    """Deterministic replayer over recorded prompt → response pairs.

    When a prompt is missing and a default response was given, the default
    is returned; otherwise the miss is a configuration error. The call
    counter lets tests assert cache behavior.
    """

    def __init__(
        self,
        responses: Mapping[str, str] | None = None,
        default: str | None = None,
    ):
        self.responses = dict(responses or {})
        self.default = default
        self.calls = 0

    def send(self, prompt: str, cfg: LlmConfig) -> str:
        self.calls += 1
        if prompt in self.responses:
            return self.responses[prompt]
        if self.default is not None:
            return self.default
        raise ConfigurationError("fixture client has no recorded response for prompt")

    @classmethod
    def from_file(cls, path, default: str | None = None) -> "FixtureChatClient":
        """Load JSONL lines of {"prompt": ..., "response": ...}."""
        responses = {}
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise JsonlError(f"invalid JSON: {exc.msg}", str(path), line_no)
                if not isinstance(obj, dict) or not isinstance(
                    obj.get("prompt"), str
                ) or not isinstance(obj.get("response"), str):
                    raise JsonlError(
                        "expected string fields 'prompt' and 'response'",
                        str(path),
                        line_no,
                    )
                responses[obj["prompt"]] = obj["response"]
        return cls(responses, default)


class HttpChatClient:
    """Chat-completion client for an OpenAI-style HTTP endpoint.

    The API key is read from the environment (CLAIMSPAN_API_KEY by
    default). Connection problems and server errors raise TransportError so
    complete() can retry; authentication failures raise ConfigurationError
    and are not retried.
    """

    def __init__(self, endpoint: str, api_key_env: str = "CLAIMSPAN_API_KEY"):
        if not endpoint:
            raise ConfigurationError("endpoint URL must be nonempty")
        self.endpoint = endpoint
        self.api_key_env = api_key_env

    def send(self, prompt: str, cfg: LlmConfig) -> str:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": cfg.model,
            "temperature": cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=120
            )
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}")
        if response.status_code in (401, 403):
            raise ConfigurationError(
                f"authentication failed with status {response.status_code}"
            )
        if response.status_code >= 400:
            raise TransportError(f"endpoint returned status {response.status_code}")
        try:
            return str(response.json()["choices"][0]["message"]["content"])
        except (ValueError, KeyError, IndexError, TypeError):
            raise TransportError("malformed completion response")


def build_prompt(
    kind: PromptKind,
    post: PostRecord,
    language_name: str = "",
    examples: Sequence[tuple[str, str, str]] = (),
) -> str:
    """Assemble the prompt for one post.

    examples are (post text, claim span text, language name) triples,
    rendered in order before the query. The language-targeted kind requires
    language_name and labels each example with its language.
    """
    if kind is PromptKind.LANGUAGE and not language_name:
        raise ValidationError("language prompt kind requires a language name")
    stem = _STEMS[kind].format(language=language_name)
    blocks = [stem]
    for ex_post, ex_claim, ex_language in examples:
        lines = []
        if kind is PromptKind.LANGUAGE:
            lines.append(f"Language: {ex_language}")
        lines.append(f"Post: {ex_post}")
        lines.append(f"Claim: {ex_claim}")
        blocks.append("\n".join(lines))
    blocks.append(f"Post: {post.text}")
    return "\n\n".join(blocks)


def _cache_path(cfg: LlmConfig, prompt: str) -> Path:
    digest = hashlib.sha256(
        f"{cfg.model}\x00{prompt}".encode("utf-8")
    ).hexdigest()
    return Path(cfg.cache_dir) / f"{digest}.txt"


def complete(client: ChatClient, prompt: str, cfg: LlmConfig) -> str:
    """Send one prompt, with disk caching and exponential-backoff retries.

    A cache hit returns immediately without touching the client or
    rewriting the cache file. The raw response is cached; the returned text
    is whitespace-trimmed.
    """
    if not prompt:
        raise ValidationError("prompt must be nonempty")
    path = _cache_path(cfg, prompt)
    if path.exists():
        return path.read_text(encoding="utf-8").strip()
    response = None
    for attempt in range(cfg.max_retries + 1):
        try:
            response = client.send(prompt, cfg)
            break
        except TransportError:
            if attempt == cfg.max_retries:
                raise
            time.sleep(cfg.backoff_base * 2**attempt)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(response)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return response.strip()


def pick_examples(
    train: Sequence[AnnotatedSample],
    k: int,
    seed: int = 13,
    language_names: Mapping[str, str] = LANGUAGE_NAMES,
) -> list[tuple[str, str, str]]:
    """First k usable samples of the seed-shuffled training split."""
    pool = list(train)
    random.Random(seed).shuffle(pool)
    picked = []
    for sample in pool:
        if len(picked) == k:
            break
        if not sample.spans:
            continue
        language = sample.post.language
        picked.append(
            (
                sample.post.text,
                sample.span_texts()[0],
                language_names.get(language, language),
            )
        )
    if len(picked) < k:
        raise ConfigurationError(
            f"training split provides only {len(picked)} usable examples, need {k}"
        )
    return picked


def run_llm_eval(
    corpus: Sequence[AnnotatedSample],
    kind: PromptKind,
    k: int,
    client: ChatClient,
    annotate_cfg: AnnotateConfig,
    llm_cfg: LlmConfig,
    train: Sequence[AnnotatedSample] | None = None,
    seed: int = 13,
    language_names: Mapping[str, str] = LANGUAGE_NAMES,
) -> SpanEvalResult:
    """Prompt the model for every post and score the located spans.

    Posts whose response is empty or fails to align score as empty
    predictions. Transport and configuration errors abort the run; because
    every completed response is already cached, rerunning resumes where the
    failure happened.
    """
    if k < 0:
        raise ValidationError("example count k must be >= 0")
    examples: list[tuple[str, str, str]] = []
    if k > 0:
        if train is None:
            raise ConfigurationError("k > 0 requires a training split for examples")
        examples = pick_examples(train, k, seed, language_names)
    docs = []
    for sample in corpus:
        language = sample.post.language
        prompt = build_prompt(
            kind,
            sample.post,
            language_name=language_names.get(language, language),
            examples=examples,
        )
        response = complete(client, prompt, llm_cfg)
        try:
            predicted = normalize_llm_response(
                response, sample.post, annotate_cfg
            ).spans
        except (EmptyResponseError, NoAlignmentError):
            predicted = ()
        docs.append((sample.post.id, predicted, sample.spans))
    return corpus_eval(docs)
