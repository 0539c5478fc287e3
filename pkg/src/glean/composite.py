"""Median-pixel composition of aligned portrait stacks.

The stack is conceptually an (N, canvas_h, canvas_w, 3) tensor; the
composite takes the per-pixel, per-channel median across N. The median is
used instead of the mean for robustness to outliers, which
`robustness_probe` makes directly testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .acquisition import slugify
from .align import AlignedImage


@dataclass(frozen=True)
class ImageStack:
    """N same-sized aligned images for one prompt."""

    images: tuple[AlignedImage, ...]
    prompt: str = ""

    def __post_init__(self):
        if not self.images:
            raise ValueError("stack must contain at least one image")
        shape = self.images[0].pixels.shape
        for img in self.images:
            if img.pixels.shape != shape:
                raise ValueError(
                    f"stack dimension mismatch: {img.pixels.shape} vs {shape}"
                )

    def as_array(self) -> np.ndarray:
        return np.stack([img.pixels for img in self.images], axis=0)

    def __len__(self) -> int:
        return len(self.images)


@dataclass(frozen=True)
class CompositeImage:
    pixels: np.ndarray
    n_sources: int
    prompt: str = ""

    def __post_init__(self):
        if self.pixels.dtype != np.uint8:
            raise ValueError("composite pixels must be uint8")
        if self.n_sources < 1:
            raise ValueError("n_sources must be >= 1")


def median_composite(stack: ImageStack) -> CompositeImage:
    """Per-pixel, per-channel median over the stack; even N averages the two
    middle order statistics with half-to-even rounding."""
    arr = stack.as_array()
    return CompositeImage(
        pixels=kernels.median_reduce(arr),
        n_sources=len(stack),
        prompt=stack.prompt,
    )


def robustness_probe(
    stack: ImageStack, outliers: list[AlignedImage]
) -> CompositeImage:
    """Composite of the stack plus injected outliers; with at most
    floor((N-1)/2) outliers a majority of clean images pins the median.
    n_sources records the full reduction input (clean + outliers)."""
    limit = math.floor((len(stack) - 1) / 2)
    if len(outliers) > limit:
        raise ValueError(
            f"too many outliers: {len(outliers)} > floor((N-1)/2) = {limit}"
        )
    combined = ImageStack(images=stack.images + tuple(outliers), prompt=stack.prompt)
    return median_composite(combined)


def load_exclusion_list(path: str | Path) -> frozenset[str]:
    """Newline-delimited image names removed before stacking (manual cleanup
    of non-photorealistic candidates)."""
    names = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        name = raw.strip()
        if name and not name.startswith("#"):
            names.add(name)
    return frozenset(names)


def composite_filename(model: str, prompt: str, n_sources: int) -> str:
    return f"{model}_{slugify(prompt)}_composite_N{n_sources}.png"
