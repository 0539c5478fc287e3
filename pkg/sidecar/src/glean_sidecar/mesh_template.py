"""Canonical 468-point mesh template in unit face-box coordinates.

Used by the box-fitting landmark backend: a face detector supplies a
bounding box and the template is scaled into it. The indices that drive the
downstream pipeline (nose tip, eye-corner pairs, and the contour polygons)
sit at anatomically sensible spots; the remaining indices are filled
deterministically on concentric rings so every template is a valid,
repeatable 468-point mesh. The index sets follow the common face-mesh
contour conventions.
"""

from __future__ import annotations

import math

import numpy as np

MESH_POINT_COUNT = 468

NOSE_TIP = 1
LEFT_EYE_CORNERS = (33, 133)
RIGHT_EYE_CORNERS = (362, 263)

FACE_OVAL = (
    10, 338, 297, 332, 284, 251, 389, 356, 454, 323, 361, 288,
    397, 365, 379, 378, 400, 377, 152, 148, 176, 149, 150, 136,
    172, 58, 132, 93, 234, 127, 162, 21, 54, 103, 67, 109,
)
LEFT_EYE = (33, 246, 161, 160, 159, 158, 157, 173, 133, 155, 154, 153, 145, 144, 163, 7)
RIGHT_EYE = (362, 398, 384, 385, 386, 387, 388, 466, 263, 249, 390, 373, 374, 380, 381, 382)
LEFT_BROW = (70, 63, 105, 66, 107, 55, 65, 52, 53, 46)
RIGHT_BROW = (300, 293, 334, 296, 336, 285, 295, 282, 283, 276)
LIPS = (61, 185, 40, 39, 37, 0, 267, 269, 270, 409, 291, 375, 321, 405, 314, 17, 84, 181, 91, 146)
NOSE = (168, 122, 196, 198, 49, 64, 98, 97, 2, 326, 327, 294, 279, 420, 419, 351)

_LEFT_EYE_CENTER = (0.32, 0.42)
_RIGHT_EYE_CENTER = (0.68, 0.42)
_NOSE_TIP_POS = (0.50, 0.62)


def _ellipse(indices, center, rx, ry, start=0.0):
    pts = {}
    for k, idx in enumerate(indices):
        ang = start + 2.0 * math.pi * k / len(indices)
        pts[idx] = (center[0] + rx * math.cos(ang), center[1] + ry * math.sin(ang))
    return pts


def unit_template() -> np.ndarray:
    """(468, 2) template with all coordinates in the unit face box."""
    pts = np.zeros((MESH_POINT_COUNT, 2), dtype=np.float64)

    placed: dict[int, tuple[float, float]] = {}
    # oval starts at the forehead midpoint (index 10) and walks clockwise
    placed.update(_ellipse(FACE_OVAL, (0.5, 0.5), 0.48, 0.49, start=-math.pi / 2))
    placed.update(_ellipse(LEFT_EYE, _LEFT_EYE_CENTER, 0.085, 0.035, start=math.pi))
    placed.update(_ellipse(RIGHT_EYE, _RIGHT_EYE_CENTER, 0.085, 0.035, start=math.pi))
    placed.update(_ellipse(LEFT_BROW, (0.32, 0.33), 0.11, 0.025))
    placed.update(_ellipse(RIGHT_BROW, (0.68, 0.33), 0.11, 0.025))
    placed.update(_ellipse(LIPS, (0.5, 0.80), 0.16, 0.055, start=math.pi))
    placed.update(_ellipse(NOSE, (0.5, 0.55), 0.10, 0.13, start=-math.pi / 2))

    # anchor indices take their exact anatomical spots
    placed[NOSE_TIP] = _NOSE_TIP_POS
    placed[LEFT_EYE_CORNERS[0]] = (_LEFT_EYE_CENTER[0] - 0.085, _LEFT_EYE_CENTER[1])
    placed[LEFT_EYE_CORNERS[1]] = (_LEFT_EYE_CENTER[0] + 0.085, _LEFT_EYE_CENTER[1])
    placed[RIGHT_EYE_CORNERS[0]] = (_RIGHT_EYE_CENTER[0] - 0.085, _RIGHT_EYE_CENTER[1])
    placed[RIGHT_EYE_CORNERS[1]] = (_RIGHT_EYE_CENTER[0] + 0.085, _RIGHT_EYE_CENTER[1])

    for idx, xy in placed.items():
        pts[idx] = xy

    # remaining indices fill concentric rings inside the oval so the mesh is
    # dense and deterministic
    free = [i for i in range(MESH_POINT_COUNT) if i not in placed]
    for k, idx in enumerate(free):
        ring = k / len(free)
        ang = 2.0 * math.pi * (k * 0.6180339887498949 % 1.0)
        r = 0.05 + 0.38 * ring
        pts[idx] = (0.5 + r * math.cos(ang), 0.5 + r * 0.9 * math.sin(ang))
    return pts


def fit_to_box(
    box_col: float, box_row: float, box_w: float, box_h: float,
    image_w: int, image_h: int,
) -> tuple[tuple[float, float], ...]:
    """Scale the unit template into a detector box; returns 468 points
    normalized to the full image."""
    template = unit_template()
    xs = (box_col + template[:, 0] * box_w) / float(image_w)
    ys = (box_row + template[:, 1] * box_h) / float(image_h)
    return tuple((float(x), float(y)) for x, y in zip(xs, ys))
