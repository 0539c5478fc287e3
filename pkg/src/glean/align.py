"""Rotate-scale-translate normalization onto the composition canvas.

Each accepted face is mapped so its eye line is horizontal, the inter-eye
distance is exactly `inter_eye_px`, and the canonical left eye lands on a
fixed canvas point. The three conceptual stages are composed into a single
inverse-mapped resampling pass so the image is only interpolated once.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .landmarks import FaceAnchors, RawAnchors


class CoincidentEyesError(ValueError):
    pass


@dataclass(frozen=True)
class AlignmentTarget:
    canvas_w: int = 800
    canvas_h: int = 800
    inter_eye_px: float = 120.0
    left_eye_target: tuple[float, float] = (340.0, 300.0)
    fill: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if self.canvas_w < 1 or self.canvas_h < 1:
            raise ValueError("canvas dimensions must be positive")
        if self.inter_eye_px <= 0:
            raise ValueError("inter_eye_px must be positive")
        tx, ty = self.left_eye_target
        if not (0 <= tx < self.canvas_w and 0 <= ty < self.canvas_h):
            raise ValueError("left_eye_target must lie inside the canvas")

    @property
    def right_eye_target(self) -> tuple[float, float]:
        return (self.left_eye_target[0] + self.inter_eye_px, self.left_eye_target[1])


@dataclass(frozen=True)
class SimilarityTransform:
    """p' = scale * R(rotation) * p + translation."""

    rotation_rad: float
    scale: float
    translation: tuple[float, float]

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if not -math.pi < self.rotation_rad <= math.pi:
            raise ValueError("rotation must lie in (-pi, pi]")

    def apply(self, point: tuple[float, float]) -> tuple[float, float]:
        c = math.cos(self.rotation_rad)
        s = math.sin(self.rotation_rad)
        x, y = point
        tx, ty = self.translation
        return (
            self.scale * (c * x - s * y) + tx,
            self.scale * (s * x + c * y) + ty,
        )

    def inverse_coeffs(self) -> tuple[float, float, float, float, float, float]:
        """Affine (a, b, c, d, e, f) mapping canvas (x, y) back to source."""
        cth = math.cos(self.rotation_rad)
        sth = math.sin(self.rotation_rad)
        tx, ty = self.translation
        inv_s = 1.0 / self.scale
        a = cth * inv_s
        b = sth * inv_s
        d = -sth * inv_s
        e = cth * inv_s
        c = -(a * tx + b * ty)
        f = -(d * tx + e * ty)
        return (a, b, c, d, e, f)


@dataclass(frozen=True)
class AlignedImage:
    pixels: np.ndarray  # (canvas_h, canvas_w, 3) uint8
    source_name: str = ""

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("aligned pixels must be (H, W, 3)")
        if self.pixels.dtype != np.uint8:
            raise ValueError("aligned pixels must be uint8")


def compute_alignment(
    a: FaceAnchors | RawAnchors, target: AlignmentTarget | None = None
) -> SimilarityTransform:
    """Similarity transform placing the canonical left eye (the smaller-x
    anchor) on the target point with a level, fixed-length eye line."""
    target = target or AlignmentTarget()
    eyes = sorted([a.left_eye, a.right_eye])
    left, right = eyes[0], eyes[1]
    dx = right[0] - left[0]
    dy = right[1] - left[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        raise CoincidentEyesError("eye anchors coincide, alignment undefined")
    rotation = -math.atan2(dy, dx)
    scale = target.inter_eye_px / dist
    c = math.cos(rotation)
    s = math.sin(rotation)
    tx = target.left_eye_target[0] - scale * (c * left[0] - s * left[1])
    ty = target.left_eye_target[1] - scale * (s * left[0] + c * left[1])
    return SimilarityTransform(rotation_rad=rotation, scale=scale, translation=(tx, ty))


def apply_transform(
    image: np.ndarray,
    xf: SimilarityTransform,
    target: AlignmentTarget | None = None,
    *,
    source_name: str = "",
) -> AlignedImage:
    """Resample the source through the inverse transform in one pass;
    regions outside the source take the canvas fill color."""
    target = target or AlignmentTarget()
    out = kernels.warp_bilinear(
        image, xf.inverse_coeffs(), target.canvas_h, target.canvas_w, target.fill
    )
    return AlignedImage(pixels=out, source_name=source_name)


TRANSFORM_LOG_FIELDS = ("file", "rotation_rad", "scale", "tx", "ty")


def write_transform_log(
    rows: list[tuple[str, SimilarityTransform]], path: str | Path
) -> None:
    """Audit CSV of the transform applied to each accepted image."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRANSFORM_LOG_FIELDS)
        for name, xf in rows:
            writer.writerow(
                [
                    name,
                    f"{xf.rotation_rad:.12f}",
                    f"{xf.scale:.12f}",
                    f"{xf.translation[0]:.12f}",
                    f"{xf.translation[1]:.12f}",
                ]
            )


def read_transform_log(path: str | Path) -> dict[str, SimilarityTransform]:
    out: dict[str, SimilarityTransform] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out[rec["file"]] = SimilarityTransform(
                rotation_rad=float(rec["rotation_rad"]),
                scale=float(rec["scale"]),
                translation=(float(rec["tx"]), float(rec["ty"])),
            )
    return out
