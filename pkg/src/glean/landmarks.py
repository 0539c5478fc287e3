"""Face-mesh landmark data model and the three-anchor extraction.

The landmark interchange file is the sole contract between this pipeline and
the perception sidecar: a JSON document mapping each image to 468 normalized
(x, y) mesh points, or to a detected=false entry when no face was found.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

MESH_POINT_COUNT = 468

# mesh indices driving anchor extraction
NOSE_TIP = 1
LEFT_EYE_CORNERS = (33, 133)
RIGHT_EYE_CORNERS = (362, 263)


class LandmarkSchemaError(ValueError):
    pass


class NoFaceError(ValueError):
    pass


@dataclass(frozen=True)
class FaceLandmarks:
    """468 normalized mesh points for one image; z is discarded upstream."""

    image_width: int
    image_height: int
    detected: bool
    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.image_width < 1 or self.image_height < 1:
            raise LandmarkSchemaError("image dimensions must be >= 1")
        if self.detected:
            if len(self.points) != MESH_POINT_COUNT:
                raise LandmarkSchemaError(
                    f"expected {MESH_POINT_COUNT} points, got {len(self.points)}"
                )
            for x, y in self.points:
                if not (_finite(x) and _finite(y)):
                    raise LandmarkSchemaError("landmark coordinates must be finite")
        elif self.points:
            raise LandmarkSchemaError("undetected faces must carry no points")

    def pixel(self, index: int) -> tuple[float, float]:
        x, y = self.points[index]
        return x * self.image_width, y * self.image_height


@dataclass(frozen=True)
class FaceAnchors:
    """Nose tip and the two eye centers, in pixels, validated in-frame."""

    nose: tuple[float, float]
    left_eye: tuple[float, float]
    right_eye: tuple[float, float]
    image_width: int
    image_height: int

    def __post_init__(self):
        for px, py in (self.nose, self.left_eye, self.right_eye):
            if not (_finite(px) and _finite(py)):
                raise ValueError("anchor coordinates must be finite")
            if not (0 <= px <= self.image_width and 0 <= py <= self.image_height):
                raise ValueError(f"anchor ({px}, {py}) outside the image")


class RawAnchors(NamedTuple):
    """Anchor geometry without the in-frame validation of FaceAnchors.
    Detectors may place mesh points slightly outside the frame; the pose
    checks and the alignment math are well-defined there regardless."""

    nose: tuple[float, float]
    left_eye: tuple[float, float]
    right_eye: tuple[float, float]
    image_width: int
    image_height: int


def _finite(v) -> bool:
    return isinstance(v, (int, float)) and v == v and abs(v) != float("inf")


def compute_anchor_points(lm: FaceLandmarks) -> RawAnchors:
    """Nose = point 1; eye centers = midpoints of the corner pairs (33, 133)
    and (362, 263), all scaled to pixel coordinates.

    The (33, 133) pair is labeled "left_eye" by convention; the alignment
    stage canonicalizes eyes by x-coordinate, so a flipped topology cannot
    change the result.
    """
    if not lm.detected:
        raise NoFaceError("cannot extract anchors from an undetected face")

    def midpoint(i: int, j: int) -> tuple[float, float]:
        xi, yi = lm.pixel(i)
        xj, yj = lm.pixel(j)
        return (xi + xj) / 2.0, (yi + yj) / 2.0

    return RawAnchors(
        nose=lm.pixel(NOSE_TIP),
        left_eye=midpoint(*LEFT_EYE_CORNERS),
        right_eye=midpoint(*RIGHT_EYE_CORNERS),
        image_width=lm.image_width,
        image_height=lm.image_height,
    )


def extract_anchors(lm: FaceLandmarks) -> FaceAnchors:
    """compute_anchor_points with the FaceAnchors in-frame invariant
    enforced."""
    raw = compute_anchor_points(lm)
    return FaceAnchors(
        nose=raw.nose,
        left_eye=raw.left_eye,
        right_eye=raw.right_eye,
        image_width=raw.image_width,
        image_height=raw.image_height,
    )


def parse_landmark_file(path: str | Path) -> dict[str, FaceLandmarks]:
    """Parse and validate a landmark interchange file.

    Schema: { "images": [ { "file", "width", "height", "detected",
    "points": [[x, y(, z)], ...468] } ] }. Any z coordinates are ignored.
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict) or "images" not in raw:
        raise LandmarkSchemaError(f"{path}: missing top-level 'images' list")
    out: dict[str, FaceLandmarks] = {}
    for entry in raw["images"]:
        name = entry.get("file")
        if not name:
            raise LandmarkSchemaError(f"{path}: entry without a 'file' name")
        try:
            detected = bool(entry.get("detected", False))
            points = ()
            if detected:
                raw_points = entry.get("points") or []
                points = tuple((float(p[0]), float(p[1])) for p in raw_points)
            lm = FaceLandmarks(
                image_width=int(entry["width"]),
                image_height=int(entry["height"]),
                detected=detected,
                points=points,
            )
        except (LandmarkSchemaError, KeyError, TypeError, ValueError, IndexError) as exc:
            raise LandmarkSchemaError(f"{path}: invalid entry for {name!r}: {exc}") from exc
        if name in out:
            raise LandmarkSchemaError(f"{path}: duplicate entry for {name!r}")
        out[name] = lm
    return out


def write_landmark_file(entries: dict[str, FaceLandmarks], path: str | Path) -> None:
    """Serialize entries back to the interchange schema (used by tests and
    by synthetic-corpus tooling; the sidecar emits the same shape)."""
    images = []
    for name in sorted(entries):
        lm = entries[name]
        images.append(
            {
                "file": name,
                "width": lm.image_width,
                "height": lm.image_height,
                "detected": lm.detected,
                "points": [[x, y] for x, y in lm.points],
            }
        )
    Path(path).write_text(
        json.dumps({"images": images}, indent=2) + "\n", encoding="utf-8"
    )
