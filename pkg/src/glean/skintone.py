"""Masked-median CIELAB skin color and Monk scale classification.

The skin mask is the face-oval polygon minus the eye, brow, lip and nose
polygons, every polygon defined by landmark-index lists in a region config
and rasterized in canvas space. The masked pixels are converted to CIELAB
(sRGB, D65, 2 degree observer), reduced to a component-wise median, and
matched to the nearest of the ten Monk reference tones by Euclidean
distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .align import AlignmentTarget, SimilarityTransform
from .landmarks import FaceLandmarks

# sRGB -> XYZ (D65, 2 degree observer)
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE = np.array([0.95047, 1.0, 1.08883])
_DELTA = 6.0 / 29.0


class DegenerateMaskError(ValueError):
    pass


@dataclass(frozen=True)
class LabColor:
    L: float
    a: float
    b: float

    def __post_init__(self):
        for v in (self.L, self.a, self.b):
            if not math.isfinite(v):
                raise ValueError("Lab components must be finite")
        if not -1e-9 <= self.L <= 100.0 + 1e-9:
            raise ValueError(f"L out of range: {self.L}")

    def distance(self, other: "LabColor") -> float:
        return math.sqrt(
            (self.L - other.L) ** 2 + (self.a - other.a) ** 2 + (self.b - other.b) ** 2
        )


def _linearize(channels: np.ndarray) -> np.ndarray:
    c = channels / 255.0
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _delinearize(linear: np.ndarray) -> np.ndarray:
    return np.where(
        linear <= 0.0031308,
        linear * 12.92,
        1.055 * np.maximum(linear, 0.0) ** (1.0 / 2.4) - 0.055,
    )


def _f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3.0 * _DELTA**2) + 4.0 / 29.0)


def _f_inv(u: np.ndarray) -> np.ndarray:
    return np.where(u > _DELTA, u**3, 3.0 * _DELTA**2 * (u - 4.0 / 29.0))


def srgb_to_lab_array(rgb: np.ndarray) -> np.ndarray:
    """Vectorized sRGB [0, 255] -> CIELAB. Input (..., 3), output (..., 3)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError("last axis must hold RGB channels")
    if rgb.min() < 0 or rgb.max() > 255:
        raise ValueError("channel values must lie in [0, 255]")
    xyz = _linearize(rgb) @ _RGB_TO_XYZ.T
    fxyz = _f(xyz / _WHITE)
    lab = np.empty_like(fxyz)
    lab[..., 0] = 116.0 * fxyz[..., 1] - 16.0
    lab[..., 1] = 500.0 * (fxyz[..., 0] - fxyz[..., 1])
    lab[..., 2] = 200.0 * (fxyz[..., 1] - fxyz[..., 2])
    return lab


def srgb_to_lab(rgb) -> LabColor:
    lab = srgb_to_lab_array(np.asarray(rgb, dtype=np.float64))
    # clamp the white point's ~4e-6 matrix rounding excess
    return LabColor(L=min(float(lab[0]), 100.0), a=float(lab[1]), b=float(lab[2]))


def lab_to_srgb(lab: LabColor) -> tuple[int, int, int]:
    """Inverse conversion; channels clipped to [0, 255] and rounded
    half-to-even."""
    fy = (lab.L + 16.0) / 116.0
    fx = fy + lab.a / 500.0
    fz = fy - lab.b / 200.0
    xyz = _f_inv(np.array([fx, fy, fz])) * _WHITE
    rgb = np.clip(_delinearize(xyz @ _XYZ_TO_RGB.T), 0.0, 1.0) * 255.0
    r, g, b = (int(v) for v in np.rint(rgb))
    return (r, g, b)


# ---------------------------------------------------------------------------
# Monk palette


@dataclass(frozen=True)
class MonkReference:
    rank: int
    hex: str
    lab: LabColor


@dataclass(frozen=True)
class MonkPalette:
    references: tuple[MonkReference, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.references, key=lambda r: r.rank))
        if [r.rank for r in ordered] != list(range(1, 11)):
            raise ValueError(
                f"palette must hold ranks 1..10, got {[r.rank for r in self.references]}"
            )
        object.__setattr__(self, "references", ordered)

    @classmethod
    def from_hex_list(cls, swatches: list[str]) -> "MonkPalette":
        if len(swatches) != 10:
            raise ValueError(f"expected 10 swatches, got {len(swatches)}")
        refs = []
        for rank, code in enumerate(swatches, start=1):
            rgb = _parse_hex(code)
            refs.append(MonkReference(rank=rank, hex=code.lower(), lab=srgb_to_lab(rgb)))
        return cls(references=tuple(refs))

    @classmethod
    def load(cls, path: str | Path) -> "MonkPalette":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        swatches = raw["swatches"] if isinstance(raw, dict) else raw
        return cls.from_hex_list(swatches)

    @classmethod
    def default(cls) -> "MonkPalette":
        text = resources.files("glean.data").joinpath("monk_palette.json").read_text()
        return cls.from_hex_list(json.loads(text)["swatches"])


def _parse_hex(code: str) -> tuple[int, int, int]:
    code = code.strip().lstrip("#")
    if len(code) != 6:
        raise ValueError(f"bad hex color: {code!r}")
    return tuple(int(code[i : i + 2], 16) for i in (0, 2, 4))


@dataclass(frozen=True)
class SkinToneResult:
    median_lab: LabColor
    monk_rank: int
    distance: float

    def __post_init__(self):
        if not 1 <= self.monk_rank <= 10:
            raise ValueError(f"monk rank out of range: {self.monk_rank}")
        if self.distance < 0:
            raise ValueError("distance must be non-negative")


def classify_monk(lab: LabColor, palette: MonkPalette | None = None) -> SkinToneResult:
    """Nearest reference in Lab space; exact ties resolve to the lower rank."""
    palette = palette or MonkPalette.default()
    best_rank = 0
    best_dist = math.inf
    for ref in palette.references:
        d = lab.distance(ref.lab)
        if d < best_dist:
            best_dist = d
            best_rank = ref.rank
    return SkinToneResult(median_lab=lab, monk_rank=best_rank, distance=best_dist)


# ---------------------------------------------------------------------------
# skin mask


@dataclass(frozen=True)
class RegionConfig:
    """Landmark-index polygons: the face oval and the excluded features."""

    face_oval: tuple[int, ...]
    exclusions: dict[str, tuple[int, ...]]

    def __post_init__(self):
        if len(self.face_oval) < 3:
            raise ValueError("face oval needs at least 3 vertices")
        for name, idx in self.exclusions.items():
            if len(idx) < 3:
                raise ValueError(f"exclusion region {name!r} needs >= 3 vertices")

    @classmethod
    def load(cls, path: str | Path) -> "RegionConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            face_oval=tuple(raw["face_oval"]),
            exclusions={k: tuple(v) for k, v in raw["exclusions"].items()},
        )

    @classmethod
    def default(cls) -> "RegionConfig":
        text = resources.files("glean.data").joinpath("face_regions.json").read_text()
        raw = json.loads(text)
        return cls(
            face_oval=tuple(raw["face_oval"]),
            exclusions={k: tuple(v) for k, v in raw["exclusions"].items()},
        )


@dataclass(frozen=True)
class SkinMask:
    bitmap: np.ndarray  # (H, W) bool
    coverage: float

    def __post_init__(self):
        if self.bitmap.dtype != bool:
            raise ValueError("mask bitmap must be boolean")
        if not 0.0 < self.coverage < 1.0:
            raise ValueError(f"coverage must lie in (0, 1): {self.coverage}")


def rasterize_polygon(vertices, height: int, width: int) -> np.ndarray:
    """Even-odd scanline fill; a pixel is inside when its center
    (col + 0.5, row + 0.5) is. Integer-aligned rectangles therefore cover
    exactly width * height pixels."""
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
        raise ValueError("polygon needs at least 3 (x, y) vertices")
    mask = np.zeros((height, width), dtype=bool)
    x1 = verts[:, 0]
    y1 = verts[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    non_horizontal = y1 != y2
    for row in range(height):
        yc = row + 0.5
        crosses = non_horizontal & (((y1 <= yc) & (yc < y2)) | ((y2 <= yc) & (yc < y1)))
        if not crosses.any():
            continue
        t = (yc - y1[crosses]) / (y2[crosses] - y1[crosses])
        xs = np.sort(x1[crosses] + t * (x2[crosses] - x1[crosses]))
        for lo, hi in zip(xs[0::2], xs[1::2]):
            start = max(0, math.ceil(lo - 0.5))
            stop = min(width, math.ceil(hi - 0.5))
            if stop > start:
                mask[row, start:stop] = True
    return mask


def build_skin_mask(
    lm: FaceLandmarks,
    xf: SimilarityTransform,
    target: AlignmentTarget | None = None,
    regions: RegionConfig | None = None,
    *,
    min_coverage: float = 0.01,
) -> SkinMask:
    """Face-oval interior minus the excluded feature polygons, with all
    polygon vertices pushed through the alignment transform first."""
    if not lm.detected:
        raise DegenerateMaskError("cannot build a skin mask without landmarks")
    target = target or AlignmentTarget()
    regions = regions or RegionConfig.default()
    h, w = target.canvas_h, target.canvas_w

    def polygon(indices) -> np.ndarray:
        pts = [xf.apply(lm.pixel(i)) for i in indices]
        return rasterize_polygon(pts, h, w)

    mask = polygon(regions.face_oval)
    for indices in regions.exclusions.values():
        mask &= ~polygon(indices)
    coverage = float(mask.sum()) / float(h * w)
    if coverage < min_coverage:
        raise DegenerateMaskError(
            f"skin mask covers {coverage:.4%} of the canvas, below the "
            f"{min_coverage:.2%} floor"
        )
    return SkinMask(bitmap=mask, coverage=coverage)


def masked_median_lab(image: np.ndarray, mask: SkinMask) -> LabColor:
    """Component-wise median of the masked pixels in Lab space (each of L,
    a, b reduced independently; even counts averaged)."""
    if image.shape[:2] != mask.bitmap.shape:
        raise ValueError("image and mask dimensions differ")
    pixels = image[mask.bitmap]
    if pixels.size == 0:
        raise DegenerateMaskError("mask selects no pixels")
    lab = srgb_to_lab_array(pixels)
    med = np.median(lab, axis=0)
    return LabColor(L=float(med[0]), a=float(med[1]), b=float(med[2]))
