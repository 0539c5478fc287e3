"""Image-text similarity backends.

`clip` encodes images and the eight scoring prompts with a pretrained
image-text model (import and weights deferred). `feature_grid` is a
deterministic structural stand-in for environments without model access: it
embeds images as normalized luminance-grid statistics and prompts as
hash-seeded unit vectors, yielding schema-valid cosine similarities that
exercise the pipeline but carry no semantic meaning (the emitted lock
manifest records which backend produced a file).
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image

from .prompts import SCORING_PROMPTS


class BackendUnavailable(RuntimeError):
    pass


class ClipBackend:
    """Pretrained image-text encoder via sentence-transformers."""

    name = "clip"

    def __init__(self, model_name: str = "clip-ViT-B-32", device: str | None = None):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise BackendUnavailable(
                "sentence-transformers is not installed; install the 'clip' "
                "extra or select --backend feature_grid"
            ) from exc
        try:
            self._model = SentenceTransformer(model_name, device=device)
        except Exception as exc:  # hub unreachable, weights missing
            raise BackendUnavailable(
                f"could not load {model_name!r}: {exc}"
            ) from exc
        self.version = model_name

    def score(self, rgb: np.ndarray, prompt_texts: list[str]) -> list[float]:
        image = Image.fromarray(rgb)
        img_emb = self._model.encode([image], normalize_embeddings=True)[0]
        txt_emb = self._model.encode(prompt_texts, normalize_embeddings=True)
        return [float(np.dot(img_emb, t)) for t in txt_emb]


class FeatureGridBackend:
    """Deterministic downsampled-luminance embedding; no model required."""

    name = "feature_grid"
    version = "feature-grid-1"
    _GRID = 8

    def _embed_image(self, rgb: np.ndarray) -> np.ndarray:
        gray = np.mean(rgb, axis=2)
        img = Image.fromarray(gray.astype(np.uint8))
        small = np.asarray(
            img.resize((self._GRID, self._GRID), Image.BILINEAR), dtype=np.float64
        ).ravel()
        small -= small.mean()
        norm = np.linalg.norm(small)
        if norm == 0.0:
            vec = np.zeros(self._GRID * self._GRID)
            vec[0] = 1.0
            return vec
        return small / norm

    def _embed_text(self, text: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self._GRID * self._GRID)
        return vec / np.linalg.norm(vec)

    def score(self, rgb: np.ndarray, prompt_texts: list[str]) -> list[float]:
        img = self._embed_image(rgb)
        return [float(np.clip(np.dot(img, self._embed_text(t)), -1.0, 1.0))
                for t in prompt_texts]


_BACKENDS = {ClipBackend.name: ClipBackend, FeatureGridBackend.name: FeatureGridBackend}


def make_backend(name: str = "auto", model_name: str = "clip-ViT-B-32",
                 device: str | None = None):
    """Instantiate a backend; `auto` prefers the pretrained encoder and
    falls back to the deterministic grid embedder."""
    if name == "auto":
        try:
            return ClipBackend(model_name, device)
        except BackendUnavailable:
            return FeatureGridBackend()
    if name == ClipBackend.name:
        return ClipBackend(model_name, device)
    if name == FeatureGridBackend.name:
        return FeatureGridBackend()
    raise ValueError(f"unknown similarity backend {name!r} (have {sorted(_BACKENDS)})")


def score_all(backend, rgb: np.ndarray, prompts=SCORING_PROMPTS) -> dict[str, float]:
    ids = list(prompts)
    texts = [prompts[pid] for pid in ids]
    values = backend.score(rgb, texts)
    return dict(zip(ids, values))
