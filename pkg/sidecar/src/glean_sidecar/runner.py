"""Batch execution over an image directory with atomic interchange output."""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


@dataclass(frozen=True)
class SidecarConfig:
    input_dir: Path
    output_file: Path
    backend: str = "auto"
    workers: int = 4
    min_confidence: float = 0.5
    model_name: str = "clip-ViT-B-32"
    device: str | None = None
    prompt_manifest: Path | None = None

    def __post_init__(self):
        if not Path(self.input_dir).is_dir():
            raise FileNotFoundError(f"input directory not found: {self.input_dir}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def list_images(input_dir: Path) -> list[Path]:
    return sorted(
        p for p in Path(input_dir).iterdir()
        if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    )


def load_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def atomic_write_json(payload: dict, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_lock_manifest(path: Path, kind: str, backend) -> Path:
    """Record which model produced an interchange file, for reproducibility."""
    lock_path = Path(path).with_suffix(".models.json")
    atomic_write_json(
        {
            "artifact": str(Path(path).name),
            "kind": kind,
            "backend": backend.name,
            "version": getattr(backend, "version", "unknown"),
        },
        lock_path,
    )
    return lock_path


def _process(paths, worker, max_workers):
    """Map worker over images with a thread pool; results keep name order.
    Unreadable images come back as (name, None) warnings."""

    def safe(path: Path):
        try:
            rgb = load_rgb(path)
        except (UnidentifiedImageError, OSError):
            return path.name, None
        return path.name, worker(rgb)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(safe, paths))


def run_landmarks(cfg: SidecarConfig) -> dict:
    from .landmark_backends import make_backend

    backend = make_backend(cfg.backend, cfg.min_confidence)
    paths = list_images(cfg.input_dir)
    sizes = {}

    def worker(rgb):
        return backend.detect(rgb), rgb.shape

    results = _process(paths, worker, cfg.workers)
    images, warnings = [], []
    for name, result in results:
        if result is None:
            warnings.append(name)
            continue
        (detected, points), shape = result
        entry = {
            "file": name,
            "width": int(shape[1]),
            "height": int(shape[0]),
            "detected": bool(detected),
            "points": [[float(x), float(y)] for x, y in points],
        }
        images.append(entry)
    payload = {"images": images}
    if warnings:
        payload["warnings"] = [{"file": n, "error": "unreadable image"} for n in warnings]
    atomic_write_json(payload, cfg.output_file)
    write_lock_manifest(cfg.output_file, "landmarks", backend)
    return payload


def run_similarities(cfg: SidecarConfig) -> dict:
    from .prompts import SCORING_PROMPTS, load_prompt_manifest
    from .similarity_backends import make_backend, score_all

    prompts = (
        load_prompt_manifest(cfg.prompt_manifest)
        if cfg.prompt_manifest
        else SCORING_PROMPTS
    )
    if len(prompts) != 8:
        raise ValueError(f"prompt manifest must define 8 prompts, got {len(prompts)}")
    backend = make_backend(cfg.backend, cfg.model_name, cfg.device)
    paths = list_images(cfg.input_dir)

    def worker(rgb):
        return score_all(backend, rgb, prompts)

    results = _process(paths, worker, cfg.workers)
    images, warnings = [], []
    for name, scores in results:
        if scores is None:
            warnings.append(name)
            continue
        images.append({"file": name, "similarities": scores})
    payload = {"images": images}
    if warnings:
        payload["warnings"] = [{"file": n, "error": "unreadable image"} for n in warnings]
    atomic_write_json(payload, cfg.output_file)
    write_lock_manifest(cfg.output_file, "similarities", backend)
    return payload
