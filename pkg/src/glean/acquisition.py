"""Prompt loading, the generation-server client, and the provenance manifest.

The generation server is addressed through a *transport profile*: a JSON
description of the submit / poll / download request shapes, so the client
works against any node-graph workflow server that can be described that way.
A profile for a ComfyUI-style server ships as the default.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import requests

__all__ = [
    "PromptFileError",
    "TransportError",
    "JobFailedError",
    "PartialDownloadError",
    "MalformedNameError",
    "PromptSet",
    "GenConfig",
    "ImageRecord",
    "JobHandle",
    "TransportProfile",
    "load_prompts",
    "slugify",
    "format_record_name",
    "parse_record_name",
    "submit_batch",
    "poll_and_download",
    "build_manifest",
    "save_manifest",
    "load_manifest",
]

SERVER_URL_ENV = "GLEAN_SERVER_URL"
SERVER_TOKEN_ENV = "GLEAN_SERVER_TOKEN"
_TIMESTAMP_FMT = "%Y%m%dT%H%M%SZ"
_NAME_RE = re.compile(
    r"^(?P<model>[^_]+)_(?P<slug>[a-z0-9-]+)_(?P<index>\d+)_(?P<ts>\d{8}T\d{6}Z)\.png$"
)


class PromptFileError(ValueError):
    pass


class TransportError(RuntimeError):
    """A request failed; carries HTTP status and body when available."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body


class JobFailedError(TransportError):
    pass


class PartialDownloadError(TransportError):
    """Some images of a completed job could not be fetched."""

    def __init__(self, message: str, records, failed_indices):
        super().__init__(message)
        self.records = list(records)
        self.failed_indices = list(failed_indices)


class MalformedNameError(ValueError):
    pass


@dataclass(frozen=True)
class PromptSet:
    prompts: tuple[str, ...]
    source_path: Path | None = None

    def __post_init__(self):
        if not self.prompts:
            raise PromptFileError("prompt set is empty")
        if len(set(self.prompts)) != len(self.prompts):
            raise PromptFileError("prompt set contains duplicates")
        if any(not p.strip() for p in self.prompts):
            raise PromptFileError("prompt set contains blank entries")


def load_prompts(path: str | Path) -> PromptSet:
    """One prompt per line, UTF-8; blank lines skipped, duplicates rejected."""
    path = Path(path)
    if not path.is_file():
        raise PromptFileError(f"prompt file not found: {path}")
    prompts: list[str] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        text = raw.strip()
        if not text:
            continue
        if text in seen:
            raise PromptFileError(
                f"duplicate prompt {text!r} at line {lineno} "
                f"(first seen at line {seen[text]})"
            )
        seen[text] = lineno
        prompts.append(text)
    if not prompts:
        raise PromptFileError(f"prompt file has no prompts: {path}")
    return PromptSet(prompts=tuple(prompts), source_path=path)


def slugify(prompt: str) -> str:
    """Filesystem-safe prompt slug: lowercase, spaces to hyphens, the rest
    of the non-alphanumerics dropped."""
    slug = re.sub(r"\s+", "-", prompt.strip().lower())
    slug = re.sub(r"[^a-z0-9-]", "", slug)
    slug = re.sub(r"-{2,}", "-", slug).strip("-")
    if not slug:
        raise ValueError(f"prompt {prompt!r} has no sluggable characters")
    return slug


@dataclass(frozen=True)
class GenConfig:
    sampler_name: str = "euler"
    scheduler: str = "normal"
    steps: int = 50
    cfg_scale: float = 8.0
    denoise: float = 1.0
    width: int = 1024
    height: int = 1024
    batch_size: int = 8
    negative_prompt: str = "watermark, text"
    server_url: str = field(
        default_factory=lambda: os.environ.get(SERVER_URL_ENV, "http://127.0.0.1:8188")
    )
    timeout: float = 30.0
    poll_interval: float = 2.0
    poll_deadline: float = 600.0

    def __post_init__(self):
        if self.steps <= 0:
            raise ValueError("steps must be positive")
        if self.cfg_scale <= 0:
            raise ValueError("cfg_scale must be positive")
        if not 0.0 < self.denoise <= 1.0:
            raise ValueError("denoise must lie in (0, 1]")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be positive")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")


@dataclass(frozen=True, order=True)
class ImageRecord:
    model: str
    prompt: str
    index: int
    timestamp: datetime
    path: Path

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("index must be non-negative")
        if self.timestamp.tzinfo is None:
            raise ValueError("timestamp must be timezone-aware (UTC)")


@dataclass(frozen=True)
class JobHandle:
    job_id: str
    prompt: str
    n: int


def format_record_name(
    model: str, prompt: str, index: int, timestamp: datetime
) -> str:
    """`{model}_{prompt-slug}_{index}_{timestamp}.png`; model must be free
    of underscores so the name stays parseable."""
    if "_" in model or not model:
        raise ValueError(f"model id must be non-empty and underscore-free: {model!r}")
    ts = timestamp.astimezone(timezone.utc).strftime(_TIMESTAMP_FMT)
    return f"{model}_{slugify(prompt)}_{index:04d}_{ts}.png"


def parse_record_name(filename: str) -> tuple[str, str, int, datetime]:
    """Inverse of the naming scheme: (model, prompt-slug, index, timestamp)."""
    m = _NAME_RE.match(filename)
    if m is None:
        raise MalformedNameError(f"filename does not follow the naming scheme: {filename!r}")
    ts = datetime.strptime(m.group("ts"), _TIMESTAMP_FMT).replace(tzinfo=timezone.utc)
    return m.group("model"), m.group("slug"), int(m.group("index")), ts


# ---------------------------------------------------------------------------
# transport profile


def _dig(obj, dotted: str, vars: dict | None = None):
    """Walk a dotted path through nested JSON; `*` fans out over dict values
    and concatenates list results; `{name}` segments are substituted."""
    current = [obj]
    for seg in dotted.split("."):
        if vars:
            seg = seg.format(**vars) if "{" in seg else seg
        nxt = []
        for node in current:
            if seg == "*":
                if isinstance(node, dict):
                    nxt.extend(node.values())
                elif isinstance(node, list):
                    nxt.extend(node)
                else:
                    raise KeyError(f"cannot fan out over {type(node).__name__}")
            elif isinstance(node, dict):
                if seg not in node:
                    raise KeyError(f"path segment {seg!r} missing")
                nxt.append(node[seg])
            elif isinstance(node, list):
                nxt.append(node[int(seg)])
            else:
                raise KeyError(f"cannot descend into {type(node).__name__} at {seg!r}")
        current = nxt
    if len(current) == 1:
        return current[0]
    merged = []
    for item in current:
        merged.extend(item if isinstance(item, list) else [item])
    return merged


def _substitute(template, vars: dict):
    """Fill `{name}` placeholders; a string that is exactly one placeholder
    takes the variable's native type."""
    if isinstance(template, dict):
        return {k: _substitute(v, vars) for k, v in template.items()}
    if isinstance(template, list):
        return [_substitute(v, vars) for v in template]
    if isinstance(template, str):
        exact = re.fullmatch(r"\{(\w+)\}", template)
        if exact and exact.group(1) in vars:
            return vars[exact.group(1)]
        return re.sub(
            r"\{(\w+)\}",
            lambda m: str(vars[m.group(1)]) if m.group(1) in vars else m.group(0),
            template,
        )
    return template


@dataclass(frozen=True)
class TransportProfile:
    """Request shapes for one workflow server."""

    submit: dict
    poll: dict
    download: dict
    name: str = "unnamed"

    @classmethod
    def load(cls, path: str | Path) -> "TransportProfile":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "TransportProfile":
        for section in ("submit", "poll", "download"):
            if section not in raw:
                raise ValueError(f"transport profile missing {section!r} section")
        return cls(
            submit=raw["submit"],
            poll=raw["poll"],
            download=raw["download"],
            name=raw.get("name", "unnamed"),
        )

    @classmethod
    def default(cls) -> "TransportProfile":
        text = (
            resources.files("glean.data").joinpath("transport_profile.json").read_text()
        )
        return cls.from_dict(json.loads(text))


def _auth_headers() -> dict:
    token = os.environ.get(SERVER_TOKEN_ENV)
    return {"Authorization": f"Bearer {token}"} if token else {}


def _request(method: str, url: str, *, timeout: float, json_body=None, params=None):
    try:
        resp = requests.request(
            method,
            url,
            json=json_body,
            params=params,
            timeout=timeout,
            headers=_auth_headers(),
        )
    except requests.exceptions.RequestException as exc:
        raise TransportError(f"request to {url} failed: {exc}") from exc
    if not 200 <= resp.status_code < 300:
        raise TransportError(
            f"{method} {url} returned {resp.status_code}: {resp.text[:500]}",
            status=resp.status_code,
            body=resp.text,
        )
    return resp


def submit_batch(
    prompt: str,
    n: int,
    cfg: GenConfig,
    profile: TransportProfile | None = None,
    *,
    model: str = "sdxl",
    seed: int = 0,
) -> JobHandle:
    """Submit one generation batch; returns the server-assigned job id."""
    if n < 1:
        raise ValueError("n must be >= 1")
    profile = profile or TransportProfile.default()
    cfg = replace(cfg, batch_size=n)
    vars = {
        "prompt": prompt,
        "negative_prompt": cfg.negative_prompt,
        "steps": cfg.steps,
        "cfg_scale": cfg.cfg_scale,
        "denoise": cfg.denoise,
        "sampler_name": cfg.sampler_name,
        "scheduler": cfg.scheduler,
        "width": cfg.width,
        "height": cfg.height,
        "batch_size": n,
        "seed": seed,
        "model": model,
        "file_prefix": slugify(prompt),
    }
    body = _substitute(profile.submit.get("body", {}), vars)
    url = cfg.server_url.rstrip("/") + profile.submit["path"]
    resp = _request(
        profile.submit.get("method", "POST"), url, timeout=cfg.timeout, json_body=body
    )
    job_id = _dig(resp.json(), profile.submit["job_id_path"])
    return JobHandle(job_id=str(job_id), prompt=prompt, n=n)


def _poll_until_done(
    job: JobHandle, cfg: GenConfig, profile: TransportProfile, sleep, clock
):
    url = cfg.server_url.rstrip("/") + profile.poll["path"].format(job_id=job.job_id)
    deadline = clock() + cfg.poll_deadline
    vars = {"job_id": job.job_id}
    while True:
        resp = _request(
            profile.poll.get("method", "GET"), url, timeout=cfg.timeout
        ).json()
        try:
            status = _dig(resp, profile.poll["status_path"], vars)
        except KeyError:
            status = None  # job not in history yet
        if status in profile.poll.get("failed_values", ()):
            raise JobFailedError(
                f"job {job.job_id} failed on server (status {status!r})"
            )
        if status in profile.poll.get("done_values", ()):
            return _dig(resp, profile.poll["images_path"], vars)
        if clock() > deadline:
            raise TransportError(
                f"job {job.job_id} did not finish within {cfg.poll_deadline}s"
            )
        sleep(cfg.poll_interval)


def _item_vars(item) -> dict:
    if isinstance(item, dict):
        return {f"item_{k}": v for k, v in item.items()}
    return {"item": item}


def poll_and_download(
    job: JobHandle,
    dest: str | Path,
    cfg: GenConfig,
    profile: TransportProfile | None = None,
    *,
    model: str = "sdxl",
    generated_at: datetime | None = None,
    sleep=time.sleep,
    clock=time.monotonic,
) -> list[ImageRecord]:
    """Poll a submitted job until terminal, then download every image into
    `dest` under the provenance naming scheme."""
    profile = profile or TransportProfile.default()
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    items = _poll_until_done(job, cfg, profile, sleep, clock)
    if generated_at is None:
        generated_at = datetime.now(timezone.utc)

    records: list[ImageRecord] = []
    failures: list[tuple[int, str]] = []
    for index, item in enumerate(items):
        vars = _item_vars(item)
        path_t = profile.download["path"]
        url = cfg.server_url.rstrip("/") + _substitute(path_t, vars)
        params = _substitute(profile.download.get("query", {}), vars) or None
        try:
            resp = _request(
                profile.download.get("method", "GET"),
                url,
                timeout=cfg.timeout,
                params=params,
            )
        except TransportError as exc:
            failures.append((index, str(exc)))
            continue
        name = format_record_name(model, job.prompt, index, generated_at)
        out_path = dest / name
        out_path.write_bytes(resp.content)
        records.append(
            ImageRecord(
                model=model,
                prompt=job.prompt,
                index=index,
                timestamp=generated_at,
                path=out_path,
            )
        )
    if failures:
        raise PartialDownloadError(
            f"job {job.job_id}: {len(failures)} of {len(items)} downloads failed "
            f"(succeeded indices: {[r.index for r in records]})",
            records=records,
            failed_indices=[i for i, _ in failures],
        )
    return records


# ---------------------------------------------------------------------------
# manifest


def build_manifest(
    corpus_root: str | Path, prompt_set: PromptSet
) -> tuple[list[ImageRecord], list[str]]:
    """Scan a corpus directory for scheme-named PNGs belonging to the prompt
    set. Returns (records sorted by (prompt, index), skipped filenames)."""
    corpus_root = Path(corpus_root)
    slug_to_prompt = {slugify(p): p for p in prompt_set.prompts}
    records: list[ImageRecord] = []
    skipped: list[str] = []
    for path in sorted(corpus_root.glob("*.png")):
        try:
            model, slug, index, ts = parse_record_name(path.name)
        except MalformedNameError:
            skipped.append(path.name)
            continue
        prompt = slug_to_prompt.get(slug)
        if prompt is None:
            skipped.append(path.name)
            continue
        records.append(
            ImageRecord(model=model, prompt=prompt, index=index, timestamp=ts, path=path)
        )
    records.sort(key=lambda r: (r.prompt, r.index))
    keys = [(r.model, r.prompt, r.index) for r in records]
    if len(set(keys)) != len(keys):
        dupes = sorted({k for k in keys if keys.count(k) > 1})
        raise ValueError(f"duplicate (model, prompt, index) in corpus: {dupes}")
    return records, skipped


def save_manifest(records: list[ImageRecord], path: str | Path) -> None:
    payload = [
        {
            "model": r.model,
            "prompt": r.prompt,
            "index": r.index,
            "timestamp": r.timestamp.astimezone(timezone.utc).isoformat(),
            "path": str(r.path),
        }
        for r in records
    ]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> list[ImageRecord]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        ImageRecord(
            model=rec["model"],
            prompt=rec["prompt"],
            index=rec["index"],
            timestamp=datetime.fromisoformat(rec["timestamp"]),
            path=Path(rec["path"]),
        )
        for rec in payload
    ]
