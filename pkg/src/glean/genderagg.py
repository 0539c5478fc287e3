"""Aggregate image-text similarity scores into gender predictions.

The similarity interchange file carries, per image, cosine similarities
against the eight fixed text prompts (four per class). The four scores per
class are averaged and a temperature-scaled softmax over the two class
scores yields calibrated-looking probabilities; the argmax is the predicted
gender. Exact ties predict MAN and are counted so they stay visible.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

DEFAULT_TAU = 0.02


class Gender(enum.Enum):
    MAN = "MAN"
    WOMAN = "WOMAN"


class SimilaritySchemaError(ValueError):
    pass


@dataclass(frozen=True)
class PromptManifest:
    """The eight scoring prompts: id -> (text, class), four per class."""

    prompts: dict[str, tuple[str, Gender]]

    def __post_init__(self):
        if len(self.prompts) != 8:
            raise ValueError(f"expected 8 prompt ids, got {len(self.prompts)}")
        per_class = {g: 0 for g in Gender}
        for _, (_, cls) in self.prompts.items():
            per_class[cls] += 1
        if per_class[Gender.MAN] != 4 or per_class[Gender.WOMAN] != 4:
            raise ValueError(f"expected 4 prompts per class, got {per_class}")

    @classmethod
    def load(cls, path: str | Path) -> "PromptManifest":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls._from_raw(raw)

    @classmethod
    def default(cls) -> "PromptManifest":
        text = resources.files("glean.data").joinpath("gender_prompts.json").read_text()
        return cls._from_raw(json.loads(text))

    @classmethod
    def _from_raw(cls, raw: dict) -> "PromptManifest":
        prompts = {
            pid: (entry["text"], Gender(entry["class"]))
            for pid, entry in raw["prompts"].items()
        }
        return cls(prompts=prompts)

    def class_of(self, prompt_id: str) -> Gender:
        return self.prompts[prompt_id][1]

    def ids(self) -> tuple[str, ...]:
        return tuple(self.prompts)


@dataclass(frozen=True)
class SimilarityRecord:
    file: str
    scores: dict[str, float]
    class_of: dict[str, Gender]

    def __post_init__(self):
        if len(self.scores) != 8:
            raise SimilaritySchemaError(
                f"{self.file}: expected 8 similarities, got {len(self.scores)}"
            )
        if set(self.scores) != set(self.class_of):
            raise SimilaritySchemaError(f"{self.file}: score ids do not match classes")
        counts = {g: 0 for g in Gender}
        for pid, cls in self.class_of.items():
            counts[cls] += 1
        if counts[Gender.MAN] != 4 or counts[Gender.WOMAN] != 4:
            raise SimilaritySchemaError(f"{self.file}: expected 4 ids per class")
        for pid, s in self.scores.items():
            if not math.isfinite(s) or not -1.0 <= s <= 1.0:
                raise SimilaritySchemaError(
                    f"{self.file}: similarity {pid}={s} outside [-1, 1]"
                )


@dataclass(frozen=True)
class GenderPrediction:
    p_man: float
    p_woman: float
    predicted: Gender
    tie: bool = False

    def __post_init__(self):
        if abs(self.p_man + self.p_woman - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")
        # equal probabilities leave the class to the score-level tie rule
        if self.p_man > self.p_woman and self.predicted is not Gender.MAN:
            raise ValueError("predicted class must be the argmax")
        if self.p_woman > self.p_man and self.predicted is not Gender.WOMAN:
            raise ValueError("predicted class must be the argmax")


def class_scores(rec: SimilarityRecord) -> tuple[float, float]:
    """Arithmetic mean of the four similarities per class: (man, woman)."""
    sums = {Gender.MAN: 0.0, Gender.WOMAN: 0.0}
    for pid, s in rec.scores.items():
        sums[rec.class_of[pid]] += s
    return sums[Gender.MAN] / 4.0, sums[Gender.WOMAN] / 4.0


def softmax_tau(
    s_man: float, s_woman: float, tau: float = DEFAULT_TAU
) -> GenderPrediction:
    """Two-class temperature-scaled softmax in the shifted (stable) form.

    Exact ties predict MAN and are flagged.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if not (math.isfinite(s_man) and math.isfinite(s_woman)):
        raise ValueError("scores must be finite")
    m = max(s_man, s_woman)
    e_man = math.exp((s_man - m) / tau)
    e_woman = math.exp((s_woman - m) / tau)
    total = e_man + e_woman
    p_man = e_man / total
    p_woman = e_woman / total
    tie = s_man == s_woman
    predicted = Gender.MAN if s_man >= s_woman else Gender.WOMAN
    return GenderPrediction(p_man=p_man, p_woman=p_woman, predicted=predicted, tie=tie)


def predict(rec: SimilarityRecord, tau: float = DEFAULT_TAU) -> GenderPrediction:
    return softmax_tau(*class_scores(rec), tau=tau)


@dataclass(frozen=True)
class GenderProportions:
    pct_man: float
    pct_woman: float
    n: int
    tie_count: int


def corpus_gender_proportions(
    records: list[SimilarityRecord], tau: float = DEFAULT_TAU
) -> GenderProportions:
    """Share of records predicted per class, as percentages summing to 100."""
    if not records:
        raise ValueError("cannot compute proportions of an empty corpus")
    n_man = 0
    ties = 0
    for rec in records:
        pred = predict(rec, tau=tau)
        if pred.tie:
            ties += 1
        if pred.predicted is Gender.MAN:
            n_man += 1
    n = len(records)
    pct_man = 100.0 * n_man / n
    return GenderProportions(
        pct_man=pct_man, pct_woman=100.0 - pct_man, n=n, tie_count=ties
    )


def parse_similarity_file(
    path: str | Path, manifest: PromptManifest | None = None
) -> dict[str, SimilarityRecord]:
    """Parse and validate a similarity interchange file.

    Schema: { "images": [ { "file": "<name>",
    "similarities": { "<prompt-id>": s, ...8 } } ] }.
    """
    manifest = manifest or PromptManifest.default()
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict) or "images" not in raw:
        raise SimilaritySchemaError(f"{path}: missing top-level 'images' list")
    expected = set(manifest.ids())
    out: dict[str, SimilarityRecord] = {}
    for entry in raw["images"]:
        name = entry.get("file")
        if not name:
            raise SimilaritySchemaError(f"{path}: entry without a 'file' name")
        sims = entry.get("similarities")
        if not isinstance(sims, dict):
            raise SimilaritySchemaError(f"{path}: {name!r} has no similarities map")
        if set(sims) != expected:
            raise SimilaritySchemaError(
                f"{path}: {name!r} ids {sorted(sims)} do not match the prompt "
                f"manifest {sorted(expected)}"
            )
        try:
            rec = SimilarityRecord(
                file=name,
                scores={pid: float(s) for pid, s in sims.items()},
                class_of={pid: manifest.class_of(pid) for pid in sims},
            )
        except SimilaritySchemaError:
            raise
        except (TypeError, ValueError) as exc:
            raise SimilaritySchemaError(f"{path}: invalid entry {name!r}: {exc}") from exc
        if name in out:
            raise SimilaritySchemaError(f"{path}: duplicate entry for {name!r}")
        out[name] = rec
    return out
