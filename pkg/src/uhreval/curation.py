"""Dataset manifest model, resolution filtering, summary statistics, and the
captioning interface.

Manifests are JSON Lines, one record per line, UTF-8. Unknown fields on a
record survive a read/write round-trip untouched. Captioning talks to a
pluggable backend; the bundled HTTP backend targets a chat-completion
style endpoint and is configured through environment variables or a JSON
config file. Auth tokens are never logged or echoed.
"""

from __future__ import annotations

import json
import os
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

ENV_ENDPOINT = "UHREVAL_CAPTION_ENDPOINT"
ENV_TOKEN = "UHREVAL_CAPTION_TOKEN"
ENV_MODEL = "UHREVAL_CAPTION_MODEL"

#: Caption-request text sent verbatim to the captioning backend.
IMAGE_CAPTION_PROMPT = (
    "Directly describe with brevity and as brief as possible the scene or "
    "characters without any introductory phrase like 'This image shows', "
    "'In the scene', 'This image depicts' or similar phrases. Just start "
    "describing the scene please."
)

#: Pairwise preference-study prompts, stored for reference only.
PREFERENCE_STUDY_SYSTEM_PROMPT = (
    "As an AI visual assistant, you are analyzing two specific images. When "
    "presented with a specific caption, it is required to evaluate visual "
    "aesthetics, prompt coherence and fine details."
)
PREFERENCE_STUDY_USER_PROMPT = (
    "The caption for the two images is: <prompt>. Please answer the following questions:\n"
    "1. Visual Aesthetics: Given the prompt, which image is of higher-quality "
    "and aesthetically more pleasing?\n"
    "2. Prompt Adherence: Which image looks more representative to the text "
    "shown above and faithfully follows it?\n"
    "3. Fine Details: Which image more accurately represents the fine visual "
    "details? Focus on clarity, sharpness, and texture. Assess the fidelity of "
    "fine elements such as edges, patterns, and nuances in color. The more "
    "precise representation of these details is preferred! Ignore other aspects.\n"
    "Please respond me strictly in the following format:\n"
    "1. Visual Aesthetics: <the first image is better> or <the second image is "
    "better>. The reason is <give your reason here>.\n"
    "2. Prompt Adherence: <the first image is better> or <the second image is "
    "better>. The reason is <give your reason here>.\n"
    "3. Fine Details: <the first image is better> or <the second image is "
    "better>. The reason is <give your reason here>."
)

_KNOWN_FIELDS = ("path", "width", "height", "caption", "aesthetic_score", "source", "approved")


class ManifestError(ValueError):
    """Malformed manifest file or record."""


class CaptionTransportError(RuntimeError):
    """Retryable transport failure while talking to a caption backend."""


@dataclass
class ManifestRecord:
    """One curated image entry. `extra` holds fields this tool does not model."""

    path: str
    width: int
    height: int
    caption: str | None = None
    aesthetic_score: float | None = None
    source: str | None = None
    approved: bool | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.path:
            raise ManifestError("record path must be non-empty")
        if self.width < 1 or self.height < 1:
            raise ManifestError(f"record dims must be >= 1, got {self.width}x{self.height}")

    @property
    def short_side(self) -> int:
        return min(self.width, self.height)

    @classmethod
    def from_json(cls, obj: dict) -> "ManifestRecord":
        if not isinstance(obj, dict):
            raise ManifestError(f"manifest line must be a JSON object, got {type(obj).__name__}")
        known = {k: obj[k] for k in _KNOWN_FIELDS if k in obj}
        extra = {k: v for k, v in obj.items() if k not in _KNOWN_FIELDS}
        try:
            return cls(
                path=str(known["path"]),
                width=int(known["width"]),
                height=int(known["height"]),
                caption=known.get("caption"),
                aesthetic_score=None if known.get("aesthetic_score") is None else float(known["aesthetic_score"]),
                source=known.get("source"),
                approved=known.get("approved"),
                extra=extra,
            )
        except KeyError as exc:
            raise ManifestError(f"manifest record missing required field {exc}") from exc

    def to_json(self) -> dict:
        obj: dict = {"path": self.path, "width": self.width, "height": self.height}
        for name in ("caption", "aesthetic_score", "source", "approved"):
            value = getattr(self, name)
            if value is not None:
                obj[name] = value
        obj.update(self.extra)
        return obj


def read_manifest(path) -> list[ManifestRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(ManifestRecord.from_json(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    return records


def write_manifest(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


def filter_short_side(records, threshold: int, inclusive: bool = False) -> list[ManifestRecord]:
    """Keep records whose shorter side exceeds the threshold.

    "Exceeds" is strict by default; pass inclusive=True for >=.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if inclusive:
        return [r for r in records if r.short_side >= threshold]
    return [r for r in records if r.short_side > threshold]


@dataclass(frozen=True)
class DatasetStats:
    count: int
    median_height: int
    median_width: int
    mean_height: float
    mean_width: float


def _lower_median(values: list[int]) -> int:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def dataset_stats(records) -> DatasetStats:
    """Lower medians and arithmetic means of record heights and widths."""
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty manifest")
    heights = [r.height for r in records]
    widths = [r.width for r in records]
    return DatasetStats(
        count=len(records),
        median_height=_lower_median(heights),
        median_width=_lower_median(widths),
        mean_height=sum(heights) / len(records),
        mean_width=sum(widths) / len(records),
    )


def proportion_above(records, threshold: int, inclusive: bool = False) -> float:
    records = list(records)
    if not records:
        raise ValueError("cannot compute a proportion over an empty manifest")
    return len(filter_short_side(records, threshold, inclusive)) / len(records)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str


IMAGE_CAPTION_TEMPLATE = PromptTemplate("image-caption", IMAGE_CAPTION_PROMPT)

TEMPLATES = {IMAGE_CAPTION_TEMPLATE.name: IMAGE_CAPTION_TEMPLATE}


class CaptionBackend:
    """Interface: produce a caption for an image reference and prompt text."""

    def complete(self, image_ref: str, prompt: str) -> str:
        raise NotImplementedError


class StubCaptionBackend(CaptionBackend):
    """Deterministic offline backend: returns "caption:<path>"."""

    def complete(self, image_ref: str, prompt: str) -> str:
        return f"caption:{image_ref}"


class HttpCaptionBackend(CaptionBackend):
    """Thin client for a chat-completion style endpoint."""

    def __init__(self, endpoint: str, model: str, token: str | None = None, timeout: float = 60.0):
        if not endpoint:
            raise ValueError("endpoint must be non-empty")
        self.endpoint = endpoint
        self.model = model
        self._token = token
        self.timeout = timeout

    def __repr__(self):
        return f"HttpCaptionBackend(endpoint={self.endpoint!r}, model={self.model!r})"

    def complete(self, image_ref: str, prompt: str) -> str:
        body = json.dumps(
            {
                "model": self.model,
                "messages": [
                    {
                        "role": "user",
                        "content": [
                            {"type": "text", "text": prompt},
                            {"type": "image_url", "image_url": {"url": image_ref}},
                        ],
                    }
                ],
            }
        ).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"
        request = urllib.request.Request(self.endpoint, data=body, headers=headers)
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise CaptionTransportError(f"caption request failed: {exc}") from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise CaptionTransportError(f"malformed caption response: {exc}") from exc


def backend_from_env(env=None) -> HttpCaptionBackend:
    env = os.environ if env is None else env
    endpoint = env.get(ENV_ENDPOINT)
    if not endpoint:
        raise ValueError(f"{ENV_ENDPOINT} is not set")
    return HttpCaptionBackend(endpoint=endpoint, model=env.get(ENV_MODEL, ""), token=env.get(ENV_TOKEN))


def backend_from_config(path) -> HttpCaptionBackend:
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    return HttpCaptionBackend(
        endpoint=cfg.get("endpoint", ""), model=cfg.get("model", ""), token=cfg.get("token")
    )


def request_caption(
    record: ManifestRecord,
    template: PromptTemplate,
    backend: CaptionBackend,
    max_retries: int = 3,
    backoff: float = 0.5,
    sleep=time.sleep,
) -> str:
    """Fetch and store a caption for one record.

    Transport failures are retried up to `max_retries` times with exponential
    backoff; an empty caption is a validation error.
    """
    if max_retries < 0:
        raise ValueError(f"max_retries must be >= 0, got {max_retries}")
    attempts = max_retries + 1
    for attempt in range(attempts):
        try:
            caption = backend.complete(record.path, template.text)
            break
        except CaptionTransportError:
            if attempt + 1 == attempts:
                raise
            sleep(backoff * (2**attempt))
    if not caption or not caption.strip():
        raise ValueError(f"backend returned an empty caption for {record.path}")
    record.caption = caption
    return caption


def caption_records(
    records,
    template: PromptTemplate,
    backend: CaptionBackend,
    concurrency: int = 4,
    max_retries: int = 3,
    backoff: float = 0.5,
) -> list[str]:
    """Caption many records with a bounded request pool, in manifest order."""
    records = list(records)
    if concurrency < 1:
        raise ValueError(f"concurrency must be >= 1, got {concurrency}")
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(
            pool.map(lambda r: request_caption(r, template, backend, max_retries, backoff), records)
        )
