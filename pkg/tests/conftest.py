"""Shared factories: synthetic face landmarks and rendered corpora.

The synthetic mesh places the anchor-driving indices exactly where a test
asks (both corners of each eye collapse onto the requested center, so the
midpoint rule returns it verbatim), puts the face-oval indices on a circle
around the anchors, and parks small feature polygons at their anatomical
spots so the default region config produces a usable skin mask.
"""

from __future__ import annotations

import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from glean.landmarks import (
    LEFT_EYE_CORNERS,
    MESH_POINT_COUNT,
    NOSE_TIP,
    RIGHT_EYE_CORNERS,
    FaceLandmarks,
)
from glean.skintone import RegionConfig

FIXED_TS = datetime(2025, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def synthetic_landmarks(
    nose: tuple[float, float],
    left_eye: tuple[float, float],
    right_eye: tuple[float, float],
    width: int = 1000,
    height: int = 1000,
    face_radius: float | None = None,
) -> FaceLandmarks:
    """FaceLandmarks whose derived anchors equal the given pixel points."""
    regions = RegionConfig.default()
    pts = np.empty((MESH_POINT_COUNT, 2), dtype=np.float64)
    cx = (left_eye[0] + right_eye[0]) / 2.0
    cy = (left_eye[1] + right_eye[1] + nose[1]) / 3.0
    pts[:] = (cx, cy)

    pts[NOSE_TIP] = nose
    for i in LEFT_EYE_CORNERS:
        pts[i] = left_eye
    for i in RIGHT_EYE_CORNERS:
        pts[i] = right_eye

    inter_eye = math.hypot(right_eye[0] - left_eye[0], right_eye[1] - left_eye[1])
    radius = face_radius if face_radius is not None else max(1.6 * inter_eye, 40.0)
    oval = regions.face_oval
    for k, idx in enumerate(oval):
        ang = 2.0 * math.pi * k / len(oval)
        pts[idx] = (cx + radius * math.cos(ang), cy + radius * math.sin(ang))

    def small_box(indices, center, half):
        for k, idx in enumerate(indices):
            ang = 2.0 * math.pi * k / len(indices)
            pts[idx] = (center[0] + half * math.cos(ang), center[1] + half * math.sin(ang))

    feature = max(2.0, inter_eye / 12.0)
    small_box(regions.exclusions["left_eye"], left_eye, feature)
    small_box(regions.exclusions["right_eye"], right_eye, feature)
    small_box(regions.exclusions["left_eyebrow"], (left_eye[0], left_eye[1] - 2 * feature), feature)
    small_box(regions.exclusions["right_eyebrow"], (right_eye[0], right_eye[1] - 2 * feature), feature)
    small_box(regions.exclusions["lips"], (nose[0], nose[1] + 3 * feature), feature)
    small_box(regions.exclusions["nose"], nose, feature)
    # the anchor indices take priority over any overlapping feature index
    pts[NOSE_TIP] = nose
    for i in LEFT_EYE_CORNERS:
        pts[i] = left_eye
    for i in RIGHT_EYE_CORNERS:
        pts[i] = right_eye

    norm = pts / np.array([width, height], dtype=np.float64)
    return FaceLandmarks(
        image_width=width,
        image_height=height,
        detected=True,
        points=tuple((float(x), float(y)) for x, y in norm),
    )


def render_face(
    width: int,
    height: int,
    center: tuple[float, float],
    radius: float,
    skin_rgb: tuple[int, int, int],
    background: tuple[int, int, int] = (30, 50, 70),
) -> np.ndarray:
    """Flat disc on a flat background; enough structure for mask and
    composite tests without a real generator."""
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:] = background
    yy, xx = np.mgrid[0:height, 0:width]
    disc = (xx - center[0]) ** 2 + (yy - center[1]) ** 2 <= radius**2
    img[disc] = skin_rgb
    return img


@pytest.fixture
def kernel_backends():
    from glean import kernels

    return kernels.available_backends()


@pytest.fixture
def tmp_corpus(tmp_path: Path):
    """Directory factory for synthetic corpora."""
    root = tmp_path / "corpus"
    root.mkdir()
    return root
