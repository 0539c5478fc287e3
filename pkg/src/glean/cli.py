"""Subcommand CLI over the pipeline stages.

Every stage reads and writes the documented interchange files, so stages
can run independently or as one `all` run. Exit codes: 0 success, 1 config
error, 2 completed with per-prompt failures.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
from PIL import Image

from . import __version__, genderagg
from .acquisition import (
    GenConfig,
    TransportProfile,
    build_manifest,
    load_prompts,
    parse_record_name,
    poll_and_download,
    save_manifest,
    slugify,
    submit_batch,
)
from .align import AlignmentTarget, apply_transform, compute_alignment, read_transform_log, write_transform_log
from .composite import ImageStack, composite_filename, load_exclusion_list, median_composite
from .genderagg import parse_similarity_file
from .landmarks import compute_anchor_points, parse_landmark_file
from .posefilter import FilterConfig, write_rejection_log
from .report import (
    IDENTITY_TRANSFORM,
    ConfigError,
    RunConfig,
    composite_skin_tone,
    fixture_report,
    load_emotions,
    load_rgb,
    mean_canvas_landmarks,
    render_markdown,
    run_pipeline,
    stage_filter,
    statistics_block,
    write_skintone_csv,
    write_statistics_csv,
)
from .skintone import MonkPalette, RegionConfig
from .stats import AttributeRow, AttributeTable, GroupConfig


def _filter_options(fn):
    fn = click.option("--nose-max-frac", type=float, default=0.04, show_default=True,
                      help="Nose-centering threshold as a fraction of image width.")(fn)
    fn = click.option("--eye-balance-min", type=float, default=0.65, show_default=True,
                      help="Minimum closer/farther nose-to-eye distance ratio.")(fn)
    fn = click.option("--tilt-min-ratio", type=float, default=3.0, show_default=True,
                      help="Minimum horizontal:vertical eye distance ratio.")(fn)
    fn = click.option("--nose-metric", type=click.Choice(["horizontal", "euclidean"]),
                      default="horizontal", show_default=True)(fn)
    return fn


def _make_filter_config(nose_max_frac, eye_balance_min, tilt_min_ratio, nose_metric):
    return FilterConfig(
        nose_center_max_frac=nose_max_frac,
        eye_balance_min_ratio=eye_balance_min,
        tilt_min_hv_ratio=tilt_min_ratio,
        nose_metric=nose_metric,
    )


@click.group()
@click.version_option(version=__version__)
def main():
    """Composite-portrait bias pipeline."""


@main.command()
@click.option("--prompts", "prompts_file", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--server-url", default=None, help="Overrides GLEAN_SERVER_URL.")
@click.option("--model", default="sdxl", show_default=True)
@click.option("--n", "n_images", type=int, default=8, show_default=True,
              help="Images per prompt batch.")
@click.option("--profile", "profile_file", type=click.Path(exists=True), default=None,
              help="Transport profile JSON (defaults to the shipped profile).")
@click.option("--steps", type=int, default=50, show_default=True)
@click.option("--cfg-scale", type=float, default=8.0, show_default=True)
@click.option("--denoise", type=float, default=1.0, show_default=True)
@click.option("--width", type=int, default=1024, show_default=True)
@click.option("--height", type=int, default=1024, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def generate(prompts_file, out_dir, server_url, model, n_images, profile_file,
             steps, cfg_scale, denoise, width, height, seed):
    """Submit one batch per prompt and download the results."""
    prompt_set = load_prompts(prompts_file)
    kwargs = dict(steps=steps, cfg_scale=cfg_scale, denoise=denoise,
                  width=width, height=height)
    if server_url:
        kwargs["server_url"] = server_url
    cfg = GenConfig(**kwargs)
    profile = TransportProfile.load(profile_file) if profile_file else TransportProfile.default()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    all_records = []
    for prompt in prompt_set.prompts:
        click.echo(f"generating {n_images} images for {prompt!r}")
        job = submit_batch(prompt, n_images, cfg, profile, model=model, seed=seed)
        records = poll_and_download(job, out, cfg, profile, model=model)
        all_records.extend(records)
    records, skipped = build_manifest(out, prompt_set)
    save_manifest(records, out / "manifest.json")
    click.echo(f"wrote {len(records)} records to {out / 'manifest.json'}")


@main.command("filter")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--landmarks", "landmark_file", required=True, type=click.Path(exists=True))
@click.option("--prompts", "prompts_file", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_filter_options
def filter_cmd(corpus_dir, landmark_file, prompts_file, out_dir,
               nose_max_frac, eye_balance_min, tilt_min_ratio, nose_metric):
    """Pose-validate the corpus; writes rejections.csv and accepted.json."""
    fcfg = _make_filter_config(nose_max_frac, eye_balance_min, tilt_min_ratio, nose_metric)
    prompt_set = load_prompts(prompts_file) if prompts_file else _shipped_prompts()
    records, _ = build_manifest(corpus_dir, prompt_set)
    landmark_map = parse_landmark_file(landmark_file)
    accepted, rejected = stage_filter(records, landmark_map, fcfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rejection_log(
        [(r.path.name, d, a) for r, d, a in rejected], out / "rejections.csv", fcfg
    )
    payload = [{"file": r.path.name, "prompt": r.prompt} for r, _ in accepted]
    (out / "accepted.json").write_text(json.dumps(payload, indent=2) + "\n")
    click.echo(f"accepted {len(accepted)} / rejected {len(rejected)}")


def _canvas_options(fn):
    fn = click.option("--canvas", type=int, default=800, show_default=True,
                      help="Square canvas side in pixels.")(fn)
    fn = click.option("--inter-eye", type=float, default=120.0, show_default=True)(fn)
    fn = click.option("--left-eye-x", type=float, default=340.0, show_default=True)(fn)
    fn = click.option("--left-eye-y", type=float, default=300.0, show_default=True)(fn)
    return fn


def _make_target(canvas, inter_eye, left_eye_x, left_eye_y):
    return AlignmentTarget(
        canvas_w=canvas, canvas_h=canvas, inter_eye_px=inter_eye,
        left_eye_target=(left_eye_x, left_eye_y),
    )


@main.command("align")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--landmarks", "landmark_file", required=True, type=click.Path(exists=True))
@click.option("--accepted", "accepted_file", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@_canvas_options
def align_cmd(corpus_dir, landmark_file, accepted_file, out_dir,
              canvas, inter_eye, left_eye_x, left_eye_y):
    """Warp accepted images onto the canvas; writes aligned/ and transforms.csv."""
    target = _make_target(canvas, inter_eye, left_eye_x, left_eye_y)
    landmark_map = parse_landmark_file(landmark_file)
    accepted = json.loads(Path(accepted_file).read_text())
    out = Path(out_dir)
    aligned_dir = out / "aligned"
    aligned_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for entry in accepted:
        name = entry["file"]
        lm = landmark_map[name]
        xf = compute_alignment(compute_anchor_points(lm), target)
        image = load_rgb(Path(corpus_dir) / name)
        aligned = apply_transform(image, xf, target, source_name=name)
        Image.fromarray(aligned.pixels).save(aligned_dir / name)
        rows.append((name, xf))
    write_transform_log(rows, out / "transforms.csv")
    click.echo(f"aligned {len(rows)} images into {aligned_dir}")


@main.command("compose")
@click.option("--aligned", "aligned_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--exclude", "exclude_file", type=click.Path(exists=True), default=None,
              help="Newline-delimited image names to drop before stacking.")
@click.option("--prompts", "prompts_file", type=click.Path(exists=True), default=None)
@click.option("--model", default="sdxl", show_default=True)
def compose_cmd(aligned_dir, out_dir, exclude_file, prompts_file, model):
    """Median-composite each prompt's aligned stack."""
    prompt_set = load_prompts(prompts_file) if prompts_file else _shipped_prompts()
    slug_to_prompt = {slugify(p): p for p in prompt_set.prompts}
    exclusions = load_exclusion_list(exclude_file) if exclude_file else frozenset()
    stacks: dict[str, list] = {}
    for path in sorted(Path(aligned_dir).glob("*.png")):
        if path.name in exclusions:
            continue
        try:
            _, slug, _, _ = parse_record_name(path.name)
        except ValueError:
            continue
        prompt = slug_to_prompt.get(slug)
        if prompt is None:
            continue
        stacks.setdefault(prompt, []).append(path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    from .align import AlignedImage

    for prompt in sorted(stacks):
        images = tuple(
            AlignedImage(pixels=load_rgb(p), source_name=p.name) for p in stacks[prompt]
        )
        composite = median_composite(ImageStack(images=images, prompt=prompt))
        name = composite_filename(model, prompt, composite.n_sources)
        Image.fromarray(composite.pixels).save(out / name)
        click.echo(f"{prompt}: composed {composite.n_sources} images -> {name}")


@main.command("analyze")
@click.option("--composites", "composites_dir", required=True, type=click.Path(exists=True))
@click.option("--landmarks", "landmark_file", required=True, type=click.Path(exists=True),
              help="Corpus landmark interchange file.")
@click.option("--transforms", "transforms_file", required=True, type=click.Path(exists=True))
@click.option("--accepted", "accepted_file", required=True, type=click.Path(exists=True))
@click.option("--composite-landmarks", "composite_landmark_file",
              type=click.Path(exists=True), default=None,
              help="Landmark interchange for the composites themselves.")
@click.option("--similarities", "similarity_file", type=click.Path(exists=True), default=None)
@click.option("--emotions", "emotion_file", type=click.Path(exists=True), default=None)
@click.option("--palette", "palette_file", type=click.Path(exists=True), default=None)
@click.option("--regions", "region_file", type=click.Path(exists=True), default=None)
@click.option("--groups", "groups_file", type=click.Path(exists=True), default=None)
@click.option("--tau", type=float, default=genderagg.DEFAULT_TAU, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_canvas_options
def analyze_cmd(composites_dir, landmark_file, transforms_file, accepted_file,
                composite_landmark_file, similarity_file, emotion_file,
                palette_file, region_file, groups_file, tau, out_dir,
                canvas, inter_eye, left_eye_x, left_eye_y):
    """Skin tone + gender attributes per composite; writes attributes.csv."""
    target = _make_target(canvas, inter_eye, left_eye_x, left_eye_y)
    landmark_map = parse_landmark_file(landmark_file)
    transforms = read_transform_log(transforms_file)
    accepted = json.loads(Path(accepted_file).read_text())
    by_prompt: dict[str, list[str]] = {}
    for entry in accepted:
        by_prompt.setdefault(entry["prompt"], []).append(entry["file"])
    palette = MonkPalette.load(palette_file) if palette_file else MonkPalette.default()
    regions = RegionConfig.load(region_file) if region_file else RegionConfig.default()
    composite_lms = (
        parse_landmark_file(composite_landmark_file) if composite_landmark_file else {}
    )
    similarity_map = parse_similarity_file(similarity_file) if similarity_file else {}
    emotions_map = load_emotions(emotion_file) if emotion_file else {}
    groups = GroupConfig.load(groups_file) if groups_file else None

    from .composite import CompositeImage

    rows = []
    skin_rows = []
    for comp_path in sorted(Path(composites_dir).glob("*_composite_N*.png")):
        slug = comp_path.name.split("_")[1]
        prompt = next((p for p in by_prompt if slugify(p) == slug), None)
        if prompt is None:
            continue
        pixels = load_rgb(comp_path)
        composite = CompositeImage(pixels=pixels, n_sources=len(by_prompt[prompt]), prompt=prompt)
        comp_lm = composite_lms.get(comp_path.name)
        if comp_lm is not None and comp_lm.detected:
            mask_lm = comp_lm
        else:
            pairs = [
                (landmark_map[f], transforms[f])
                for f in by_prompt[prompt]
                if f in landmark_map and f in transforms
            ]
            mask_lm = mean_canvas_landmarks(pairs, target)
        skin = composite_skin_tone(
            composite, mask_lm, IDENTITY_TRANSFORM, target, regions, palette
        )
        recs = [similarity_map[f] for f in by_prompt[prompt] if f in similarity_map]
        if recs:
            props = genderagg.corpus_gender_proportions(recs, tau=tau)
            predicted = "Man" if props.pct_man >= props.pct_woman else "Woman"
        else:
            predicted = "Man"
        emotions = emotions_map.get(prompt, {"happy": 0.0, "sad": 0.0, "angry": 0.0})
        group = groups.exclusive_label(prompt) if groups else ""
        skin_rows.append((prompt, skin))
        rows.append(
            AttributeRow(
                prompt=prompt, predicted_gender=predicted, monk_rank=skin.monk_rank,
                happy=emotions["happy"], sad=emotions["sad"], angry=emotions["angry"],
                group=group,
            )
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = AttributeTable(rows=tuple(sorted(rows, key=lambda r: r.prompt)),
                           config=groups or GroupConfig(groups={}))
    table.to_csv(out / "attributes.csv")
    write_skintone_csv(sorted(skin_rows), out / "skintones.csv")
    click.echo(f"wrote {len(rows)} attribute rows to {out / 'attributes.csv'}")


@main.command("report")
@click.option("--attributes", "attributes_file", required=True, type=click.Path(exists=True))
@click.option("--groups", "groups_file", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--with-emotions/--no-emotions", default=True, show_default=True)
def report_cmd(attributes_file, groups_file, out_dir, seed, with_emotions):
    """Corpus statistics from an attribute table."""
    config = GroupConfig.load(groups_file)
    table = AttributeTable.from_csv(attributes_file, config)
    block = statistics_block(table, seed=seed, with_emotions=with_emotions)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "statistics.json").write_text(
        json.dumps(block, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    write_statistics_csv(block, out / "statistics.csv")
    click.echo(json.dumps(block, sort_keys=True, indent=2))


@main.command("all")
@click.option("--corpus", "corpus_root", required=True, type=click.Path())
@click.option("--landmarks", "landmark_file", required=True, type=click.Path())
@click.option("--out", "output_dir", required=True, type=click.Path())
@click.option("--prompts", "prompts_file", type=click.Path(), default=None)
@click.option("--similarities", "similarity_file", type=click.Path(), default=None)
@click.option("--emotions", "emotion_file", type=click.Path(), default=None)
@click.option("--palette", "palette_file", type=click.Path(), default=None)
@click.option("--regions", "region_file", type=click.Path(), default=None)
@click.option("--groups", "groups_file", type=click.Path(), default=None)
@click.option("--composite-landmarks", "composite_landmark_file", type=click.Path(), default=None)
@click.option("--exclude", "exclusion_file", type=click.Path(), default=None)
@click.option("--tau", type=float, default=genderagg.DEFAULT_TAU, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--model", default="sdxl", show_default=True)
@click.option("--save-aligned", is_flag=True, default=False)
@click.option("--per-image-skintone", is_flag=True, default=False,
              help="Also classify every accepted image and report the "
                   "per-prompt average Monk value.")
@_filter_options
@_canvas_options
def all_cmd(corpus_root, landmark_file, output_dir, prompts_file, similarity_file,
            emotion_file, palette_file, region_file, groups_file,
            composite_landmark_file, exclusion_file, tau, seed, model, save_aligned,
            per_image_skintone,
            nose_max_frac, eye_balance_min, tilt_min_ratio, nose_metric,
            canvas, inter_eye, left_eye_x, left_eye_y):
    """Run every stage end to end over an existing corpus."""
    opt = lambda p: Path(p) if p else None
    cfg = RunConfig(
        corpus_root=Path(corpus_root),
        landmark_file=Path(landmark_file),
        output_dir=Path(output_dir),
        prompts_file=opt(prompts_file),
        similarity_file=opt(similarity_file),
        emotion_file=opt(emotion_file),
        palette_file=opt(palette_file),
        region_file=opt(region_file),
        groups_file=opt(groups_file),
        composite_landmark_file=opt(composite_landmark_file),
        exclusion_file=opt(exclusion_file),
        filter_config=_make_filter_config(
            nose_max_frac, eye_balance_min, tilt_min_ratio, nose_metric
        ),
        target=_make_target(canvas, inter_eye, left_eye_x, left_eye_y),
        tau=tau,
        seed=seed,
        model=model,
        save_aligned=save_aligned,
        per_image_skintone=per_image_skintone,
    )
    try:
        run = run_pipeline(cfg)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(render_markdown(run))
    if run.has_failures:
        click.echo("completed with per-prompt failures", err=True)
        sys.exit(2)


@main.command("fixtures")
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def fixtures_cmd(out_dir, seed):
    """Statistics over the shipped per-prompt attribute fixtures."""
    run = fixture_report(out_dir, seed=seed)
    click.echo(render_markdown(run))


def _shipped_prompts():
    from .report import _default_prompt_set

    return _default_prompt_set()


if __name__ == "__main__":
    main()
