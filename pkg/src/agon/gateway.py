"""Chat-completion clients: OpenAI-style, Replicate-style and a seeded mock.

Credentials come from the environment only (``AGON_OPENAI_API_KEY``,
``AGON_REPLICATE_API_TOKEN``).
"""

from __future__ import annotations

import enum
import hashlib
import math
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field, fields
from typing import Callable, Sequence

import httpx

from .game import Option

ENV_KEYS = {
    "openai": "AGON_OPENAI_API_KEY",
    "replicate": "AGON_REPLICATE_API_TOKEN",
}


class Provider(enum.Enum):
    OPENAI = "openai"
    REPLICATE = "replicate"
    MOCK = "mock"


@dataclass(frozen=True)
class ModelConfig:
    name: str
    provider: Provider = Provider.MOCK
    model_name: str = "mock"
    temperature: float = 1.0
    top_p: float = 1.0
    endpoint_url: str = ""
    timeout: float = 60.0
    max_retries: int = 3
    requests_per_second_cap: float = math.inf
    backoff_base: float = 1.0
    backoff_max: float = 30.0
    poll_interval: float = 1.0
    # mock-only knobs
    seed: int = 0
    mock_words: tuple[int, int] = (4, 30)
    mock_latency: float = 0.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"{self.name}: temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError(f"{self.name}: top_p must be in (0, 1]")
        if self.max_retries < 0:
            raise ValueError(f"{self.name}: max_retries must be >= 0")
        if self.requests_per_second_cap <= 0:
            raise ValueError(f"{self.name}: requests_per_second_cap must be positive")
        lo, hi = self.mock_words
        if not 1 <= lo <= hi:
            raise ValueError(f"{self.name}: mock_words must satisfy 1 <= min <= max")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        preset = data.pop("preset", None)
        base = dict(PRESETS[preset]) if preset else {}
        base.update(data)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(base) - known)
        if unknown:
            raise ValueError(f"unknown model config keys: {', '.join(unknown)}")
        base["provider"] = Provider(base.get("provider", "mock"))
        if "mock_words" in base:
            base["mock_words"] = tuple(base["mock_words"])
        cap = base.get("requests_per_second_cap")
        if cap is None or cap == "inf":
            base["requests_per_second_cap"] = math.inf
        return cls(**base)


PRESETS = {
    "gpt-4o": {
        "name": "gpt-4o",
        "provider": "openai",
        "model_name": "gpt-4o",
        "temperature": 1.0,
        "top_p": 1.0,
        "endpoint_url": "https://api.openai.com/v1",
    },
    "llama-4-maverick": {
        "name": "llama-4-maverick",
        "provider": "replicate",
        "model_name": "meta/llama-4-maverick-instruct",
        "temperature": 0.6,
        "top_p": 1.0,
        "endpoint_url": "https://api.replicate.com/v1",
    },
}


@dataclass
class ChatExchange:
    prompt: str
    response_text: str
    latency: float
    attempt_count: int
    provider_metadata: dict = field(default_factory=dict)


class GatewayError(Exception):
    def __init__(self, message: str, attempt_count: int = 1):
        super().__init__(message)
        self.attempt_count = attempt_count


class GatewayTimeout(GatewayError):
    pass


class HttpStatus(GatewayError):
    def __init__(self, code: int, message: str = "", attempt_count: int = 1):
        super().__init__(message or f"HTTP status {code}", attempt_count)
        self.code = code


class RateLimited(GatewayError):
    pass


class MalformedResponse(GatewayError):
    pass


class MissingCredentials(GatewayError):
    pass


class NoChoiceFound(ValueError):
    pass


_CHOICE_LINE = re.compile(r"^\s*CHOICE\s*:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)


def parse_choice(response: str, labels: Sequence[str]) -> Option:
    """Map a model response to an option.

    A final ``CHOICE: <label>`` line wins when it names a label exactly.
    Otherwise the label occurring last in the response is taken.
    """
    a, b = labels
    if not a or not b or a.casefold() == b.casefold():
        raise ValueError("option labels must be nonempty and distinct")
    folded = (a.casefold(), b.casefold())
    lines = [ln for ln in response.strip().splitlines() if ln.strip()]
    if lines:
        m = _CHOICE_LINE.match(lines[-1])
        if m:
            named = m.group(1).strip().strip(".*\"'`").casefold()
            if named in folded:
                return Option.A if named == folded[0] else Option.B
    text = response.casefold()
    pos_a, pos_b = text.rfind(folded[0]), text.rfind(folded[1])
    if pos_a < 0 and pos_b < 0:
        raise NoChoiceFound(f"neither {a!r} nor {b!r} occurs in the response")
    # a label that contains the other must not be shadowed by it
    if pos_a == pos_b:
        return Option.A if len(folded[0]) > len(folded[1]) else Option.B
    return Option.A if pos_a > pos_b else Option.B


class Throttle:
    """Token bucket of size one: admits at most ``rate`` requests per second."""

    def __init__(self, rate: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.interval = 0.0 if math.isinf(rate) else 1.0 / rate
        self._next = 0.0
        self._lock = threading.Lock()
        self._clock = clock
        self._sleep = sleep

    def acquire(self) -> float:
        """Block until admitted; returns the time spent waiting."""
        if self.interval == 0.0:
            return 0.0
        with self._lock:
            now = self._clock()
            slot = max(now, self._next)
            self._next = slot + self.interval
        wait = slot - now
        if wait > 0:
            self._sleep(wait)
        return wait


# -- mock backend -------------------------------------------------------------

_WORDS = {
    "latin": (
        "trust", "together", "fair", "agree", "best", "outcome", "both", "we",
        "should", "work", "let", "us", "keep", "promise", "safe", "risk",
        "penalty", "reward", "plan", "honest", "help", "gain", "share", "stay",
        "consistent", "hope", "you", "will", "think", "mutual", "benefit", "again",
    ),
    "arabic": (
        "ثقة", "معا", "عادل", "نتفق", "أفضل", "نتيجة", "كلانا", "يجب", "نعمل",
        "وعد", "آمن", "خطر", "عقوبة", "مكافأة", "خطة", "صادق", "مساعدة", "مكسب",
        "نتشارك", "نبقى", "أمل", "أنت", "سوف", "أعتقد", "متبادل", "منفعة", "مرة",
    ),
    "vietnamese": (
        "tin", "tưởng", "cùng", "nhau", "công", "bằng", "đồng", "ý", "tốt", "nhất",
        "kết", "quả", "cả", "hai", "nên", "hợp", "tác", "giữ", "lời", "hứa", "an",
        "toàn", "rủi", "ro", "hình", "phạt", "thưởng", "kế", "hoạch", "trung", "thực",
    ),
}
_VIETNAMESE_MARKS = set("ăâđêôơưạảấầẩẫậắằẳẵặẹẻẽếềểễệỉịọỏốồổỗộớờởỡợụủứừửữựỳỵỷỹ")


def _script(prompt: str) -> str:
    if any("؀" <= ch <= "ۿ" for ch in prompt):
        return "arabic"
    if any(ch in _VIETNAMESE_MARKS for ch in prompt.lower()):
        return "vietnamese"
    return "latin"


def mock_seed(model_name: str, seed: int, prompt: str) -> int:
    prompt_hash = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
    key = f"{model_name}\x1f{seed}\x1f{prompt_hash}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


_FORCE = re.compile(r"FORCE:([AB])")


def mock_response(cfg: ModelConfig, prompt: str, seed: int | None = None) -> str:
    """Deterministic pseudo-natural reply for ``prompt``.

    Prompts that offer ``CHOICE: <label>`` lines get a reply ending in one of
    those lines; a ``FORCE:A``/``FORCE:B`` marker pins which one. Other
    prompts get a free-text message whose word count is uniform over
    ``cfg.mock_words``.
    """
    rng = random.Random(mock_seed(cfg.model_name, cfg.seed if seed is None else seed, prompt))
    words = _WORDS[_script(prompt)]
    labels = []
    for label in _CHOICE_LINE.findall(prompt):
        if label not in labels:
            labels.append(label)
    forced = _FORCE.search(prompt)
    lo, hi = cfg.mock_words
    n_words = rng.randint(lo, hi)
    sentence = " ".join(rng.choice(words) for _ in range(n_words))
    if len(labels) >= 2:
        index = Option(forced.group(1)).index if forced else rng.randrange(2)
        return f"{sentence}\nCHOICE: {labels[index]}"
    if forced:
        return f"{sentence}\nCHOICE: Option {forced.group(1)}"
    return sentence


# -- gateway ------------------------------------------------------------------


class Gateway:
    """Shared client for all providers; throttling is per provider."""

    def __init__(self, sleep: Callable[[float], None] = time.sleep,
                 client: httpx.Client | None = None, capture_prompts: bool = False):
        self._sleep = sleep
        self._client = client
        self._client_lock = threading.Lock()
        self._throttles: dict[Provider, Throttle] = {}
        self._throttle_lock = threading.Lock()
        self.captured: list[tuple[str, str]] | None = [] if capture_prompts else None
        self._capture_lock = threading.Lock()

    @property
    def client(self) -> httpx.Client:
        with self._client_lock:
            if self._client is None:
                self._client = httpx.Client()
            return self._client

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def throttle(self, cfg: ModelConfig) -> float:
        with self._throttle_lock:
            bucket = self._throttles.get(cfg.provider)
            if bucket is None:
                bucket = self._throttles[cfg.provider] = Throttle(
                    cfg.requests_per_second_cap, sleep=self._sleep
                )
        return bucket.acquire()

    def backoff_delay(self, cfg: ModelConfig, attempt: int) -> float:
        """Delay before retry number ``attempt`` (1-based); non-decreasing."""
        return min(cfg.backoff_max, cfg.backoff_base * 2 ** (attempt - 1))

    def complete(self, cfg: ModelConfig, prompt: str, seed: int | None = None) -> ChatExchange:
        if not prompt:
            raise ValueError("prompt must be nonempty")
        if self.captured is not None:
            with self._capture_lock:
                self.captured.append((cfg.name, prompt))
        start = time.monotonic()
        if cfg.provider is Provider.MOCK:
            self.throttle(cfg)
            if cfg.mock_latency:
                self._sleep(cfg.mock_latency)
            text = mock_response(cfg, prompt, seed)
            return ChatExchange(prompt, text, time.monotonic() - start, 1,
                                {"provider": "mock", "seed": cfg.seed if seed is None else seed})

        send = self._openai if cfg.provider is Provider.OPENAI else self._replicate
        token = credentials(cfg)
        last: GatewayError | None = None
        for attempt in range(1, cfg.max_retries + 2):
            if attempt > 1:
                self._sleep(self.backoff_delay(cfg, attempt - 1))
            self.throttle(cfg)
            try:
                text, meta = send(cfg, prompt, token)
            except httpx.TimeoutException as exc:
                last = GatewayTimeout(f"request timed out: {exc}", attempt)
                continue
            except httpx.TransportError as exc:
                last = GatewayTimeout(f"endpoint unreachable: {exc}", attempt)
                continue
            except HttpStatus as exc:
                exc.attempt_count = attempt
                if exc.code == 429:
                    last = RateLimited("rate limited (HTTP 429)", attempt)
                    continue
                if exc.code >= 500:
                    last = exc
                    continue
                raise
            except MalformedResponse as exc:
                exc.attempt_count = attempt
                raise
            return ChatExchange(prompt, text, time.monotonic() - start, attempt, meta)
        assert last is not None
        raise last

    def _post(self, url: str, token: str, payload: dict, timeout: float) -> dict:
        resp = self.client.post(
            url, json=payload, timeout=timeout,
            headers={"Authorization": f"Bearer {token}"},
        )
        return _json_or_raise(resp)

    def _openai(self, cfg: ModelConfig, prompt: str, token: str) -> tuple[str, dict]:
        url = cfg.endpoint_url.rstrip("/") + "/chat/completions"
        body = self._post(url, token, {
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
        }, cfg.timeout)
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponse("response has no choices[0].message.content") from None
        if not isinstance(text, str):
            raise MalformedResponse("message content is not text")
        return text, {"provider": "openai", "id": body.get("id"), "model": body.get("model")}

    def _replicate(self, cfg: ModelConfig, prompt: str, token: str) -> tuple[str, dict]:
        base = cfg.endpoint_url.rstrip("/")
        body = self._post(f"{base}/models/{cfg.model_name}/predictions", token, {
            "input": {"prompt": prompt, "temperature": cfg.temperature, "top_p": cfg.top_p},
        }, cfg.timeout)
        deadline = time.monotonic() + cfg.timeout
        while body.get("status") not in ("succeeded", "failed", "canceled"):
            if time.monotonic() > deadline:
                raise httpx.ReadTimeout("prediction did not finish in time")
            self._sleep(cfg.poll_interval)
            poll_url = (body.get("urls") or {}).get("get")
            if not poll_url:
                if "id" not in body:
                    raise MalformedResponse("prediction has neither status URL nor id")
                poll_url = f"{base}/predictions/{body['id']}"
            resp = self.client.get(poll_url, timeout=cfg.timeout,
                                   headers={"Authorization": f"Bearer {token}"})
            body = _json_or_raise(resp)
        if body["status"] != "succeeded":
            raise MalformedResponse(f"prediction {body['status']}: {body.get('error')}")
        output = body.get("output")
        if isinstance(output, str):
            text = output
        elif isinstance(output, list) and all(isinstance(t, str) for t in output):
            text = "".join(output)
        else:
            raise MalformedResponse("prediction output is not text")
        return text, {"provider": "replicate", "id": body.get("id")}


def _json_or_raise(resp: httpx.Response) -> dict:
    if resp.status_code >= 400:
        raise HttpStatus(resp.status_code, f"HTTP status {resp.status_code}: {resp.text[:200]}")
    try:
        body = resp.json()
    except ValueError:
        raise MalformedResponse("response body is not JSON") from None
    if not isinstance(body, dict):
        raise MalformedResponse("response body is not a JSON object")
    return body


def credentials(cfg: ModelConfig) -> str:
    var = ENV_KEYS[cfg.provider.value]
    token = os.environ.get(var)
    if not token:
        raise MissingCredentials(f"{cfg.name}: set {var} to use the {cfg.provider.value} provider")
    return token

