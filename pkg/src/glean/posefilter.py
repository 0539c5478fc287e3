"""Three-step pose validation: nose centering, eye balance, and tilt.

Rejects side profiles and tilted heads from anchor geometry alone. All
thresholds are inclusive (a candidate exactly on the boundary is accepted)
and every failed check is reported, so rejection logs carry complete
diagnostics.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

from .landmarks import FaceAnchors, FaceLandmarks, RawAnchors, compute_anchor_points


class Reason(enum.Enum):
    NO_FACE = "NO_FACE"
    NOSE_OFFCENTER = "NOSE_OFFCENTER"
    EYE_IMBALANCE = "EYE_IMBALANCE"
    EXCESS_TILT = "EXCESS_TILT"


@dataclass(frozen=True)
class FilterConfig:
    nose_center_max_frac: float = 0.04
    eye_balance_min_ratio: float = 0.65
    tilt_min_hv_ratio: float = 3.0
    # the reference distance metric for the nose and balance checks is not
    # uniquely pinned down by the written rules; horizontal is the yaw
    # signal those checks target
    nose_metric: str = "horizontal"

    def __post_init__(self):
        if self.nose_center_max_frac <= 0:
            raise ValueError("nose_center_max_frac must be positive")
        if not 0 < self.eye_balance_min_ratio <= 1:
            raise ValueError("eye_balance_min_ratio must lie in (0, 1]")
        if self.tilt_min_hv_ratio <= 0:
            raise ValueError("tilt_min_hv_ratio must be positive")
        if self.nose_metric not in ("horizontal", "euclidean"):
            raise ValueError("nose_metric must be 'horizontal' or 'euclidean'")


@dataclass(frozen=True)
class FilterDecision:
    accepted: bool
    reasons: frozenset[Reason]

    def __post_init__(self):
        if self.accepted != (not self.reasons):
            raise ValueError("accepted must hold exactly when reasons is empty")


def _offset(a: FaceAnchors | RawAnchors, cfg: FilterConfig) -> float:
    mid_x = (a.left_eye[0] + a.right_eye[0]) / 2.0
    if cfg.nose_metric == "horizontal":
        return abs(mid_x - a.nose[0])
    mid_y = (a.left_eye[1] + a.right_eye[1]) / 2.0
    return math.hypot(mid_x - a.nose[0], mid_y - a.nose[1])


def check_nose_centering(a: FaceAnchors | RawAnchors, cfg: FilterConfig) -> bool:
    """Nose tip within the allowed fraction of image width of the eye midpoint."""
    return _offset(a, cfg) <= cfg.nose_center_max_frac * a.image_width


def _balance_distances(a: FaceAnchors | RawAnchors, cfg: FilterConfig) -> tuple[float, float]:
    if cfg.nose_metric == "horizontal":
        return (
            abs(a.nose[0] - a.left_eye[0]),
            abs(a.nose[0] - a.right_eye[0]),
        )
    return (
        math.hypot(a.nose[0] - a.left_eye[0], a.nose[1] - a.left_eye[1]),
        math.hypot(a.nose[0] - a.right_eye[0], a.nose[1] - a.right_eye[1]),
    )


def check_eye_balance(a: FaceAnchors | RawAnchors, cfg: FilterConfig) -> bool:
    """Nose-to-closer-eye distance at least the configured share of the
    nose-to-farther-eye distance. Degenerate anchors fail the check."""
    d_l, d_r = _balance_distances(a, cfg)
    hi = max(d_l, d_r)
    if hi == 0.0:
        return False
    return min(d_l, d_r) >= cfg.eye_balance_min_ratio * hi


def check_tilt(a: FaceAnchors | RawAnchors, cfg: FilterConfig) -> bool:
    """Horizontal-to-vertical eye distance ratio at least the minimum."""
    dx = abs(a.right_eye[0] - a.left_eye[0])
    dy = abs(a.right_eye[1] - a.left_eye[1])
    if dx == 0.0 and dy == 0.0:
        return False
    return dx >= cfg.tilt_min_hv_ratio * dy


def validate_pose(lm: FaceLandmarks, cfg: FilterConfig | None = None) -> FilterDecision:
    """Run every check (no short-circuiting) and accumulate failures."""
    cfg = cfg or FilterConfig()
    if not lm.detected:
        return FilterDecision(accepted=False, reasons=frozenset({Reason.NO_FACE}))
    return validate_anchors(compute_anchor_points(lm), cfg)


def validate_anchors(a: FaceAnchors | RawAnchors, cfg: FilterConfig | None = None) -> FilterDecision:
    cfg = cfg or FilterConfig()
    reasons = set()
    if not check_nose_centering(a, cfg):
        reasons.add(Reason.NOSE_OFFCENTER)
    if not check_eye_balance(a, cfg):
        reasons.add(Reason.EYE_IMBALANCE)
    if not check_tilt(a, cfg):
        reasons.add(Reason.EXCESS_TILT)
    return FilterDecision(accepted=not reasons, reasons=frozenset(reasons))


REJECTION_LOG_FIELDS = ("file", "reasons", "dL", "dR", "dx", "dy", "nose_offset_px")


def write_rejection_log(
    rows: list[tuple[str, FilterDecision, FaceAnchors | RawAnchors | None]],
    path: str | Path,
    cfg: FilterConfig | None = None,
) -> None:
    """Audit CSV of rejected candidates with the raw distances behind each
    decision. Entries with no detected face carry empty geometry columns."""
    cfg = cfg or FilterConfig()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REJECTION_LOG_FIELDS)
        for name, decision, anchors in rows:
            reasons = "|".join(sorted(r.value for r in decision.reasons))
            if anchors is None:
                writer.writerow([name, reasons, "", "", "", "", ""])
                continue
            d_l, d_r = _balance_distances(anchors, cfg)
            dx = abs(anchors.right_eye[0] - anchors.left_eye[0])
            dy = abs(anchors.right_eye[1] - anchors.left_eye[1])
            writer.writerow(
                [
                    name,
                    reasons,
                    f"{d_l:.3f}",
                    f"{d_r:.3f}",
                    f"{dx:.3f}",
                    f"{dy:.3f}",
                    f"{_offset(anchors, cfg):.3f}",
                ]
            )
