"""Perception sidecar: wraps pretrained vision models to produce the
landmark and similarity interchange files the composite-portrait pipeline
consumes."""

__version__ = "0.1.0"
