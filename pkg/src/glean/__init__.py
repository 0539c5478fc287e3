"""Median-composite portrait pipeline and bias report for text-to-image
model audits.

Stages: batch generation through a workflow server, landmark-based pose
filtering, similarity-transform alignment onto a fixed canvas, per-pixel
median composition, CIELAB / Monk skin-tone classification, zero-shot
gender aggregation, and tie-aware nonparametric statistics.
"""

__version__ = "0.1.0"
