"""Sidecar CLI: emit the two interchange files the main pipeline consumes."""

from __future__ import annotations

from pathlib import Path

import click

from .runner import SidecarConfig, run_landmarks, run_similarities

__version__ = "0.1.0"


@click.group()
@click.version_option(version=__version__)
def main():
    """Perception sidecar: landmarks and image-text similarity scores."""


@main.command()
@click.option("--in", "input_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "output_file", required=True, type=click.Path())
@click.option("--backend", default="auto", show_default=True,
              type=click.Choice(["auto", "mediapipe", "lbp_template"]))
@click.option("--min-confidence", type=float, default=0.5, show_default=True)
@click.option("--workers", type=int, default=4, show_default=True)
def landmarks(input_dir, output_file, backend, min_confidence, workers):
    """Detect 468-point face meshes for every image in a directory."""
    cfg = SidecarConfig(
        input_dir=Path(input_dir), output_file=Path(output_file),
        backend=backend, min_confidence=min_confidence, workers=workers,
    )
    payload = run_landmarks(cfg)
    detected = sum(1 for e in payload["images"] if e["detected"])
    click.echo(
        f"{len(payload['images'])} images, {detected} faces detected -> {output_file}"
    )


@main.command()
@click.option("--in", "input_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "output_file", required=True, type=click.Path())
@click.option("--backend", default="auto", show_default=True,
              type=click.Choice(["auto", "clip", "feature_grid"]))
@click.option("--model", "model_name", default="clip-ViT-B-32", show_default=True)
@click.option("--device", default=None)
@click.option("--prompt-manifest", type=click.Path(exists=True), default=None,
              help="JSON prompt manifest overriding the built-in eight prompts.")
@click.option("--workers", type=int, default=4, show_default=True)
def clipscores(input_dir, output_file, backend, model_name, device, prompt_manifest, workers):
    """Score every image against the eight gender prompts."""
    cfg = SidecarConfig(
        input_dir=Path(input_dir), output_file=Path(output_file),
        backend=backend, model_name=model_name, device=device,
        prompt_manifest=Path(prompt_manifest) if prompt_manifest else None,
        workers=workers,
    )
    payload = run_similarities(cfg)
    click.echo(f"{len(payload['images'])} images scored -> {output_file}")


if __name__ == "__main__":
    main()
