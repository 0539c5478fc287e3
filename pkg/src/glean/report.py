"""Pipeline orchestration: ingest, filter, align, compose, analyze, report.

Each stage is a plain function over in-memory values; `run_pipeline` chains
them per prompt (fail-soft: one bad prompt cannot void the run) and writes
the interchange files the CLI subcommands also read and write. The
`fixture_report` entry point skips the image stages entirely and computes
the statistics block from the shipped attribute fixtures.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__, genderagg, stats
from .acquisition import ImageRecord, PromptSet, build_manifest, load_prompts, save_manifest
from .align import (
    AlignedImage,
    AlignmentTarget,
    SimilarityTransform,
    apply_transform,
    compute_alignment,
    write_transform_log,
)
from .composite import CompositeImage, ImageStack, composite_filename, load_exclusion_list, median_composite
from .genderagg import GenderProportions, parse_similarity_file
from .landmarks import MESH_POINT_COUNT, FaceLandmarks, compute_anchor_points, parse_landmark_file
from .posefilter import FilterConfig, FilterDecision, validate_pose, write_rejection_log
from .skintone import (
    DegenerateMaskError,
    MonkPalette,
    RegionConfig,
    SkinToneResult,
    build_skin_mask,
    classify_monk,
    masked_median_lab,
)
from .stats import (
    AttributeRow,
    AttributeTable,
    GroupConfig,
    TestResult,
    group_correlations,
    kruskal_wallis,
    mann_whitney,
    spearman,
)

IDENTITY_TRANSFORM = SimilarityTransform(rotation_rad=0.0, scale=1.0, translation=(0.0, 0.0))

# directional hypotheses for the emotion correlations in the report:
# darker skin is tested against higher anger/sadness and lower happiness
EMOTION_ALTERNATIVES = {"angry": "greater", "sad": "greater", "happy": "less"}
# classic difference-formula rank correlation for the emotion block
EMOTION_FORMULA = "difference"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    corpus_root: Path
    landmark_file: Path
    output_dir: Path
    prompts_file: Path | None = None
    similarity_file: Path | None = None
    palette_file: Path | None = None
    region_file: Path | None = None
    groups_file: Path | None = None
    emotion_file: Path | None = None
    composite_landmark_file: Path | None = None
    exclusion_file: Path | None = None
    filter_config: FilterConfig = field(default_factory=FilterConfig)
    target: AlignmentTarget = field(default_factory=AlignmentTarget)
    tau: float = genderagg.DEFAULT_TAU
    seed: int = 0
    model: str = "sdxl"
    save_aligned: bool = False
    # also classify every accepted image individually and report the
    # per-prompt average Monk value (the per-image analysis mode)
    per_image_skintone: bool = False

    def validate(self) -> None:
        required = {
            "corpus_root": self.corpus_root,
            "landmark_file": self.landmark_file,
        }
        optional = {
            "prompts_file": self.prompts_file,
            "similarity_file": self.similarity_file,
            "palette_file": self.palette_file,
            "region_file": self.region_file,
            "groups_file": self.groups_file,
            "emotion_file": self.emotion_file,
            "composite_landmark_file": self.composite_landmark_file,
            "exclusion_file": self.exclusion_file,
        }
        for name, path in required.items():
            if path is None or not Path(path).exists():
                raise ConfigError(f"{name} does not exist: {path}")
        for name, path in optional.items():
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{name} does not exist: {path}")
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)

    def config_hash(self) -> str:
        payload = {
            "corpus_root": str(self.corpus_root),
            "landmark_file": str(self.landmark_file),
            "prompts_file": str(self.prompts_file),
            "similarity_file": str(self.similarity_file),
            "palette_file": str(self.palette_file),
            "region_file": str(self.region_file),
            "groups_file": str(self.groups_file),
            "emotion_file": str(self.emotion_file),
            "composite_landmark_file": str(self.composite_landmark_file),
            "exclusion_file": str(self.exclusion_file),
            "filter": asdict(self.filter_config),
            "target": asdict(self.target),
            "tau": self.tau,
            "seed": self.seed,
            "model": self.model,
            "per_image_skintone": self.per_image_skintone,
            "version": __version__,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass
class PromptReport:
    prompt: str
    n_generated: int = 0
    n_rejected: dict[str, int] = field(default_factory=dict)
    n_composited: int = 0
    composite_file: str | None = None
    skin: SkinToneResult | None = None
    avg_image_monk: float | None = None
    gender: GenderProportions | None = None
    predicted_gender: str | None = None
    emotions: dict[str, float] | None = None
    error: str | None = None

    @property
    def n_rejected_total(self) -> int:
        return sum(self.n_rejected.values())


@dataclass
class RunReport:
    per_prompt: list[PromptReport]
    statistics: dict
    config_hash: str
    tool_version: str = __version__
    skipped_files: tuple[str, ...] = ()

    @property
    def has_failures(self) -> bool:
        return any(p.error for p in self.per_prompt)

    def to_json(self) -> str:
        payload = {
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "skipped_files": list(self.skipped_files),
            "per_prompt": [_prompt_payload(p) for p in self.per_prompt],
            "statistics": self.statistics,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _prompt_payload(p: PromptReport) -> dict:
    return {
        "prompt": p.prompt,
        "n_generated": p.n_generated,
        "n_rejected": dict(sorted(p.n_rejected.items())),
        "n_composited": p.n_composited,
        "composite_file": p.composite_file,
        "skin": None
        if p.skin is None
        else {
            "L": round(p.skin.median_lab.L, 6),
            "a": round(p.skin.median_lab.a, 6),
            "b": round(p.skin.median_lab.b, 6),
            "monk_rank": p.skin.monk_rank,
            "distance": round(p.skin.distance, 6),
        },
        "avg_image_monk": None
        if p.avg_image_monk is None
        else round(p.avg_image_monk, 6),
        "gender": None
        if p.gender is None
        else {
            "pct_man": round(p.gender.pct_man, 6),
            "pct_woman": round(p.gender.pct_woman, 6),
            "n": p.gender.n,
            "ties": p.gender.tie_count,
        },
        "predicted_gender": p.predicted_gender,
        "emotions": None
        if p.emotions is None
        else {k: round(v, 8) for k, v in sorted(p.emotions.items())},
        "error": p.error,
    }


def _result_payload(r: TestResult) -> dict:
    return {
        "statistic": round(r.statistic, 10),
        "p_value": round(r.p_value, 10),
        "effect_size": None if r.effect_size is None else round(r.effect_size, 10),
        "n": list(r.n),
        "method": r.method.value,
    }


STATISTICS_CSV_FIELDS = ("test", "statistic", "p_value", "effect_size", "method", "n")


def write_statistics_csv(block: dict, path: str | Path) -> None:
    """Flat CSV view of every test result in a statistics block."""
    import csv

    def rows():
        kw = block.get("kruskal_wallis_monk_by_group")
        if kw:
            yield ("kruskal_wallis_monk_by_group", kw)
        for name, res in sorted((block.get("emotion_correlations") or {}).items()):
            yield (f"spearman_monk_{name}", res)
        group_block = block.get("group_correlations") or {}
        if "error" not in group_block:
            for name, res in sorted(group_block.items()):
                yield (f"spearman_membership_{name}", res)
        mw = block.get("mann_whitney_monk_by_gender")
        if mw:
            yield ("mann_whitney_monk_by_gender", mw)

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATISTICS_CSV_FIELDS)
        for name, res in rows():
            writer.writerow(
                [
                    name,
                    res["statistic"],
                    res["p_value"],
                    "" if res["effect_size"] is None else res["effect_size"],
                    res["method"],
                    "|".join(str(v) for v in res["n"]),
                ]
            )


SKINTONE_CSV_FIELDS = ("prompt", "L", "a", "b", "monk_rank", "distance")


def write_skintone_csv(
    rows: list[tuple[str, SkinToneResult]], path: str | Path
) -> None:
    """Masked-median Lab color and Monk classification per prompt."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SKINTONE_CSV_FIELDS)
        for prompt, skin in rows:
            writer.writerow(
                [
                    prompt,
                    f"{skin.median_lab.L:.6f}",
                    f"{skin.median_lab.a:.6f}",
                    f"{skin.median_lab.b:.6f}",
                    skin.monk_rank,
                    f"{skin.distance:.6f}",
                ]
            )


# ---------------------------------------------------------------------------
# stages


def stage_filter(
    records: list[ImageRecord],
    landmark_map: dict[str, FaceLandmarks],
    cfg: FilterConfig,
) -> tuple[list[tuple[ImageRecord, FaceLandmarks]], list[tuple[ImageRecord, FilterDecision, object]]]:
    """Split manifest records into pose-accepted and rejected. Records with
    no landmark entry are rejected as NO_FACE (nothing was detected for
    them)."""
    accepted: list[tuple[ImageRecord, FaceLandmarks]] = []
    rejected: list[tuple[ImageRecord, FilterDecision, object]] = []
    for record in records:
        lm = landmark_map.get(record.path.name)
        if lm is None:
            lm = FaceLandmarks(image_width=1, image_height=1, detected=False)
        decision = validate_pose(lm, cfg)
        if decision.accepted:
            accepted.append((record, lm))
        else:
            anchors = compute_anchor_points(lm) if lm.detected else None
            rejected.append((record, decision, anchors))
    return accepted, rejected


def load_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def stage_align(
    accepted: list[tuple[ImageRecord, FaceLandmarks]],
    target: AlignmentTarget,
) -> list[tuple[ImageRecord, FaceLandmarks, SimilarityTransform, AlignedImage]]:
    out = []
    for record, lm in accepted:
        xf = compute_alignment(compute_anchor_points(lm), target)
        aligned = apply_transform(load_rgb(record.path), xf, target, source_name=record.path.name)
        out.append((record, lm, xf, aligned))
    return out


def mean_canvas_landmarks(
    pairs: list[tuple[FaceLandmarks, SimilarityTransform]],
    target: AlignmentTarget,
) -> FaceLandmarks:
    """Average of the aligned mesh positions across a prompt's accepted
    images, expressed as canvas-space landmarks. Stands in for re-detected
    composite landmarks when none are supplied."""
    if not pairs:
        raise ValueError("need at least one landmark set")
    acc = np.zeros((MESH_POINT_COUNT, 2))
    for lm, xf in pairs:
        pts = np.array([xf.apply(lm.pixel(i)) for i in range(MESH_POINT_COUNT)])
        acc += pts
    acc /= len(pairs)
    norm = acc / np.array([target.canvas_w, target.canvas_h], dtype=np.float64)
    return FaceLandmarks(
        image_width=target.canvas_w,
        image_height=target.canvas_h,
        detected=True,
        points=tuple((float(x), float(y)) for x, y in norm),
    )


def composite_skin_tone(
    composite: CompositeImage,
    mask_landmarks: FaceLandmarks,
    mask_transform: SimilarityTransform,
    target: AlignmentTarget,
    regions: RegionConfig,
    palette: MonkPalette,
) -> SkinToneResult:
    mask = build_skin_mask(mask_landmarks, mask_transform, target, regions)
    lab = masked_median_lab(composite.pixels, mask)
    return classify_monk(lab, palette)


def load_emotions(path: str | Path) -> dict[str, dict[str, float]]:
    """Optional external emotion attributes: CSV with columns
    prompt,happy_pct,sad_pct,angry_pct."""
    import csv

    out: dict[str, dict[str, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out[rec["prompt"]] = {
                "happy": float(rec["happy_pct"]) / 100.0,
                "sad": float(rec["sad_pct"]) / 100.0,
                "angry": float(rec["angry_pct"]) / 100.0,
            }
    return out


# ---------------------------------------------------------------------------
# statistics block


def emotion_correlations(table: AttributeTable, *, seed: int = 0) -> dict[str, TestResult]:
    """Directional rank correlations between the Monk rank and each emotion
    likelihood, using the difference-formula Spearman statistic."""
    monk = table.monk_ranks()
    out = {}
    for emotion, alternative in EMOTION_ALTERNATIVES.items():
        out[emotion] = spearman(
            monk,
            table.emotion(emotion),
            alternative=alternative,
            formula=EMOTION_FORMULA,
            seed=seed,
        )
    return out


def statistics_block(table: AttributeTable, *, seed: int = 0, with_emotions: bool = True) -> dict:
    """All corpus-level tests the report carries, JSON-ready."""
    block: dict = {}
    counts = table.gender_counts()
    n = len(table.rows)
    block["gender"] = {
        "n": n,
        "n_man": counts["Man"],
        "n_woman": counts["Woman"],
        "pct_woman": round(100.0 * counts["Woman"] / n, 6),
    }

    partition = table.exclusive_partition()
    if len(partition) >= 2:
        kw = kruskal_wallis(list(partition.values()))
        block["kruskal_wallis_monk_by_group"] = _result_payload(kw) | {
            "groups": list(partition)
        }
    else:
        block["kruskal_wallis_monk_by_group"] = None

    if with_emotions:
        emo = emotion_correlations(table, seed=seed)
        block["emotion_correlations"] = {
            name: _result_payload(res) | {"alternative": EMOTION_ALTERNATIVES[name]}
            for name, res in sorted(emo.items())
        }
    else:
        block["emotion_correlations"] = None

    try:
        block["group_correlations"] = {
            group: _result_payload(res)
            for group, res in group_correlations(table)
        }
    except stats.DegenerateDataError as exc:
        block["group_correlations"] = {"error": str(exc)}

    men = [r.monk_rank for r in table.rows if r.predicted_gender == "Man"]
    women = [r.monk_rank for r in table.rows if r.predicted_gender == "Woman"]
    if men and women:
        block["mann_whitney_monk_by_gender"] = _result_payload(mann_whitney(men, women))
    else:
        block["mann_whitney_monk_by_gender"] = None
    return block


# ---------------------------------------------------------------------------
# full pipeline


def run_pipeline(cfg: RunConfig) -> RunReport:
    """Execute every stage over the corpus and write all artifacts under
    `output_dir`. Deterministic for identical inputs and seed."""
    cfg.validate()
    out_dir = Path(cfg.output_dir)

    if cfg.prompts_file is not None:
        prompt_set = load_prompts(cfg.prompts_file)
    else:
        prompt_set = _default_prompt_set()
    records, skipped = build_manifest(cfg.corpus_root, prompt_set)
    if not records:
        raise ConfigError(f"no scheme-named corpus images under {cfg.corpus_root}")
    save_manifest(records, out_dir / "manifest.json")

    landmark_map = parse_landmark_file(cfg.landmark_file)
    palette = MonkPalette.load(cfg.palette_file) if cfg.palette_file else MonkPalette.default()
    regions = RegionConfig.load(cfg.region_file) if cfg.region_file else RegionConfig.default()
    similarity_map = (
        parse_similarity_file(cfg.similarity_file) if cfg.similarity_file else {}
    )
    emotions_map = load_emotions(cfg.emotion_file) if cfg.emotion_file else {}
    composite_lms = (
        parse_landmark_file(cfg.composite_landmark_file)
        if cfg.composite_landmark_file
        else {}
    )
    exclusions = (
        load_exclusion_list(cfg.exclusion_file) if cfg.exclusion_file else frozenset()
    )
    groups = GroupConfig.load(cfg.groups_file) if cfg.groups_file else None

    composites_dir = out_dir / "composites"
    composites_dir.mkdir(exist_ok=True)
    aligned_dir = out_dir / "aligned"
    if cfg.save_aligned:
        aligned_dir.mkdir(exist_ok=True)

    by_prompt: dict[str, list[ImageRecord]] = {}
    for record in records:
        by_prompt.setdefault(record.prompt, []).append(record)

    prompt_reports: list[PromptReport] = []
    rejection_rows = []
    transform_rows = []
    image_skin_rows: list[tuple[str, SkinToneResult]] = []
    attribute_rows: list[AttributeRow] = []

    for prompt in sorted(by_prompt):
        report = PromptReport(prompt=prompt, n_generated=len(by_prompt[prompt]))
        prompt_reports.append(report)
        try:
            accepted, rejected = stage_filter(
                by_prompt[prompt], landmark_map, cfg.filter_config
            )
            for record, decision, anchors in rejected:
                rejection_rows.append((record.path.name, decision, anchors))
            # one slot per record (a record may fail several checks), so
            # generated = rejected + composited stays conserved
            report.n_rejected = _reason_counts(rejected)

            kept = [(r, lm) for r, lm in accepted if r.path.name not in exclusions]
            n_excluded = len(accepted) - len(kept)
            if n_excluded:
                report.n_rejected["EXCLUDED"] = n_excluded

            if not kept:
                report.error = "no accepted images to composite"
                continue

            aligned = stage_align(kept, cfg.target)
            for record, _, xf, image in aligned:
                transform_rows.append((record.path.name, xf))
                if cfg.save_aligned:
                    Image.fromarray(image.pixels).save(aligned_dir / record.path.name)

            stack = ImageStack(
                images=tuple(img for _, _, _, img in aligned), prompt=prompt
            )
            composite = median_composite(stack)
            report.n_composited = composite.n_sources
            name = composite_filename(cfg.model, prompt, composite.n_sources)
            Image.fromarray(composite.pixels).save(composites_dir / name)
            report.composite_file = name

            comp_lm = composite_lms.get(name)
            if comp_lm is not None and comp_lm.detected:
                mask_lm, mask_xf = comp_lm, IDENTITY_TRANSFORM
            else:
                mask_lm = mean_canvas_landmarks(
                    [(lm, xf) for _, lm, xf, _ in aligned], cfg.target
                )
                mask_xf = IDENTITY_TRANSFORM
            report.skin = composite_skin_tone(
                composite, mask_lm, mask_xf, cfg.target, regions, palette
            )

            if cfg.per_image_skintone:
                ranks = []
                for record, lm, xf, image in aligned:
                    try:
                        mask = build_skin_mask(lm, xf, cfg.target, regions)
                        lab = masked_median_lab(image.pixels, mask)
                    except DegenerateMaskError:
                        continue
                    result = classify_monk(lab, palette)
                    ranks.append(result.monk_rank)
                    image_skin_rows.append((record.path.name, result))
                if ranks:
                    report.avg_image_monk = sum(ranks) / len(ranks)

            recs = [
                similarity_map[r.path.name]
                for r, _ in kept
                if r.path.name in similarity_map
            ]
            if recs:
                report.gender = genderagg.corpus_gender_proportions(recs, tau=cfg.tau)
                report.predicted_gender = (
                    "Man" if report.gender.pct_man >= report.gender.pct_woman else "Woman"
                )
            report.emotions = emotions_map.get(prompt)
        except Exception as exc:  # fail-soft per prompt
            report.error = f"{type(exc).__name__}: {exc}"
            # keep every record accounted for even on a mid-stage failure
            unaccounted = report.n_generated - report.n_rejected_total - report.n_composited
            if unaccounted > 0:
                report.n_rejected["ERROR"] = unaccounted

    write_rejection_log(rejection_rows, out_dir / "rejections.csv", cfg.filter_config)
    write_transform_log(transform_rows, out_dir / "transforms.csv")
    write_skintone_csv(
        [(p.prompt, p.skin) for p in prompt_reports if p.skin is not None],
        out_dir / "skintones.csv",
    )
    if cfg.per_image_skintone:
        write_skintone_csv(image_skin_rows, out_dir / "image_skintones.csv")

    statistics: dict = {}
    if groups is not None:
        for report in prompt_reports:
            if report.skin is None or report.predicted_gender is None:
                continue
            emotions = report.emotions or {"happy": 0.0, "sad": 0.0, "angry": 0.0}
            attribute_rows.append(
                AttributeRow(
                    prompt=report.prompt,
                    predicted_gender=report.predicted_gender,
                    monk_rank=report.skin.monk_rank,
                    happy=emotions["happy"],
                    sad=emotions["sad"],
                    angry=emotions["angry"],
                    group=groups.exclusive_label(report.prompt),
                )
            )
        if attribute_rows:
            table = AttributeTable(rows=tuple(attribute_rows), config=groups)
            table.to_csv(out_dir / "attributes.csv")
            try:
                statistics = statistics_block(
                    table, seed=cfg.seed, with_emotions=bool(emotions_map)
                )
            except (stats.DegenerateDataError, ValueError) as exc:
                statistics = {"error": f"{type(exc).__name__}: {exc}"}

    run_report = RunReport(
        per_prompt=prompt_reports,
        statistics=statistics,
        config_hash=cfg.config_hash(),
        skipped_files=tuple(skipped),
    )
    (out_dir / "statistics.json").write_text(
        json.dumps(statistics, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    write_statistics_csv(statistics, out_dir / "statistics.csv")
    (out_dir / "report.json").write_text(run_report.to_json(), encoding="utf-8")
    (out_dir / "report.md").write_text(render_markdown(run_report), encoding="utf-8")
    return run_report


def _reason_counts(rejected) -> dict[str, int]:
    counts: dict[str, int] = {}
    for _, decision, _ in rejected:
        key = "+".join(sorted(r.value for r in decision.reasons))
        counts[key] = counts.get(key, 0) + 1
    return counts


def _default_prompt_set() -> PromptSet:
    text = resources.files("glean.data").joinpath("prompts.txt").read_text()
    prompts = tuple(line.strip() for line in text.splitlines() if line.strip())
    return PromptSet(prompts=prompts)


# ---------------------------------------------------------------------------
# fixture statistics (no images required)


def load_fixture_table() -> AttributeTable:
    """The shipped per-prompt attribute fixtures with their group config."""
    data = resources.files("glean.data").joinpath("fixtures")
    with resources.as_file(data.joinpath("identity_groups.json")) as p:
        config = GroupConfig.load(p)
    with resources.as_file(data.joinpath("portrait_attributes.csv")) as p:
        return AttributeTable.from_csv(p, config)


def fixture_report(output_dir: str | Path | None = None, *, seed: int = 0) -> RunReport:
    """Statistics-only run over the shipped attribute fixtures."""
    table = load_fixture_table()
    statistics = statistics_block(table, seed=seed)
    report = RunReport(
        per_prompt=[],
        statistics=statistics,
        config_hash=hashlib.sha256(b"fixtures:" + __version__.encode()).hexdigest(),
    )
    if output_dir is not None:
        out_dir = Path(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "statistics.json").write_text(
            json.dumps(statistics, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        write_statistics_csv(statistics, out_dir / "statistics.csv")
        (out_dir / "report.md").write_text(render_markdown(report), encoding="utf-8")
    return report


# ---------------------------------------------------------------------------
# rendering


def render_markdown(report: RunReport) -> str:
    lines = [
        "# Composite portrait bias report",
        "",
        f"- tool version: {report.tool_version}",
        f"- config hash: `{report.config_hash}`",
        "",
    ]
    if report.per_prompt:
        lines += [
            "## Per-prompt pipeline results",
            "",
            "| prompt | generated | rejected | composited | monk | gender (% man) | error |",
            "|---|---|---|---|---|---|---|",
        ]
        for p in report.per_prompt:
            monk = p.skin.monk_rank if p.skin else "-"
            gender = f"{p.gender.pct_man:.1f}" if p.gender else "-"
            lines.append(
                f"| {p.prompt} | {p.n_generated} | {p.n_rejected_total} | "
                f"{p.n_composited} | {monk} | {gender} | {p.error or ''} |"
            )
        lines.append("")
    stats_block = report.statistics
    if stats_block:
        lines += ["## Corpus statistics", ""]
        gender = stats_block.get("gender")
        if gender:
            lines.append(
                f"- predicted Woman: {gender['n_woman']} of {gender['n']} "
                f"({gender['pct_woman']:.1f}%)"
            )
        kw = stats_block.get("kruskal_wallis_monk_by_group")
        if kw:
            lines.append(
                f"- Kruskal-Wallis (Monk rank by group): H={kw['statistic']:.4f}, "
                f"p={kw['p_value']:.3g}, eta^2={kw['effect_size']:.4f}"
            )
        emo = stats_block.get("emotion_correlations")
        if emo:
            for name, res in emo.items():
                lines.append(
                    f"- Spearman(Monk, {name}) [{res['alternative']}]: "
                    f"rho={res['statistic']:+.4f}, p={res['p_value']:.3g}"
                )
        gc = stats_block.get("group_correlations")
        if gc and "error" not in gc:
            for group, res in gc.items():
                lines.append(
                    f"- Spearman(membership[{group}], Monk): "
                    f"rho={res['statistic']:+.4f}, p={res['p_value']:.3g}"
                )
        mw = stats_block.get("mann_whitney_monk_by_gender")
        if mw:
            lines.append(
                f"- Mann-Whitney (Monk by gender): U={mw['statistic']:.1f}, "
                f"p={mw['p_value']:.3g}"
            )
        lines.append("")
    return "\n".join(lines)
