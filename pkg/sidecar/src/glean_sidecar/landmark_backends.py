"""Landmark detection backends.

`mediapipe` wraps the Face Mesh model and is the production choice.
`lbp_template` runs the LBP frontal-face cascade that ships with
scikit-image and fits the canonical mesh template into the detected box; it
needs no model downloads, which makes it the fallback for air-gapped
environments. Both emit 468 normalized (x, y) points or detected=false.
"""

from __future__ import annotations

import numpy as np

from . import mesh_template


class BackendUnavailable(RuntimeError):
    pass


class MediaPipeBackend:
    """Face Mesh via the mediapipe package (import deferred)."""

    name = "mediapipe"

    def __init__(self, min_confidence: float = 0.5):
        try:
            import mediapipe as mp
        except ImportError as exc:
            raise BackendUnavailable(
                "mediapipe is not installed; install the 'mediapipe' extra "
                "or select --backend lbp_template"
            ) from exc
        self._mp = mp
        self._mesh = mp.solutions.face_mesh.FaceMesh(
            static_image_mode=True,
            max_num_faces=1,
            min_detection_confidence=min_confidence,
        )
        self.version = getattr(mp, "__version__", "unknown")

    def detect(self, rgb: np.ndarray):
        result = self._mesh.process(rgb)
        faces = getattr(result, "multi_face_landmarks", None)
        if not faces:
            return False, ()
        points = tuple((float(p.x), float(p.y)) for p in faces[0].landmark)
        return True, points


class LbpTemplateBackend:
    """scikit-image LBP cascade detection + canonical template fitting."""

    name = "lbp_template"

    def __init__(self, min_confidence: float = 0.5):
        from skimage import data, feature

        self._cascade_file = data.lbp_frontal_face_cascade_filename()
        self._detector = feature.Cascade(self._cascade_file)
        import skimage

        self.version = f"scikit-image {skimage.__version__}"

    def detect(self, rgb: np.ndarray):
        gray = np.mean(rgb, axis=2).astype(np.uint8)
        h, w = gray.shape
        min_side = max(24, min(h, w) // 8)
        found = self._detector.detect_multi_scale(
            img=gray,
            scale_factor=1.2,
            step_ratio=1.2,
            min_size=(min_side, min_side),
            max_size=(h, w),
        )
        if not found:
            return False, ()
        best = max(found, key=lambda f: f["width"] * f["height"])
        points = mesh_template.fit_to_box(
            best["c"], best["r"], best["width"], best["height"], w, h
        )
        return True, points


_BACKENDS = {
    MediaPipeBackend.name: MediaPipeBackend,
    LbpTemplateBackend.name: LbpTemplateBackend,
}


def make_backend(name: str = "auto", min_confidence: float = 0.5):
    """Instantiate a backend; `auto` prefers mediapipe and falls back to the
    cascade-plus-template backend."""
    if name == "auto":
        try:
            return MediaPipeBackend(min_confidence)
        except BackendUnavailable:
            return LbpTemplateBackend(min_confidence)
    if name not in _BACKENDS:
        raise ValueError(f"unknown landmark backend {name!r} (have {sorted(_BACKENDS)})")
    return _BACKENDS[name](min_confidence)
