"""Tie-aware nonparametric tests over the per-prompt attribute table.

Spearman rank correlation, Kruskal-Wallis with an eta-squared effect size,
and the Mann-Whitney U test, each with a permutation mode that either
enumerates arrangements exactly (small samples) or samples them with a
seeded generator.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distributions import chi2_sf, normal_cdf, t_two_sided_p

__all__ = [
    "Method",
    "TestResult",
    "DegenerateDataError",
    "rank_with_ties",
    "spearman",
    "kruskal_wallis",
    "mann_whitney",
    "AttributeRow",
    "AttributeTable",
    "GroupConfig",
    "group_correlations",
]

# observed statistics sit exactly on permutation-statistic values, so tail
# counting needs a small slack against float noise
_TAIL_EPS = 1e-12


class Method(enum.Enum):
    T_APPROX = "t_approx"
    CHI2_APPROX = "chi2_approx"
    NORMAL_APPROX = "normal_approx"
    EXACT_PERM = "exact_perm"


class DegenerateDataError(ValueError):
    """Raised when a test statistic is undefined for the given data."""


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: tuple[int, ...]
    method: Method
    effect_size: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")


def rank_with_ties(values) -> list[float]:
    """Ranks 1..n; tied values receive the average of their positional ranks."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("cannot rank an empty sequence")
    if any(not math.isfinite(v) for v in vals):
        raise ValueError("cannot rank non-finite values")
    order = sorted(range(len(vals)), key=vals.__getitem__)
    ranks = [0.0] * len(vals)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise DegenerateDataError("zero variance, correlation undefined")
    return float(xc @ yc) / denom


def _tie_term(values: np.ndarray) -> float:
    # sum of (t^3 - t) over tie groups
    _, counts = np.unique(values, return_counts=True)
    return float(np.sum(counts.astype(np.float64) ** 3 - counts))


def _spearman_rho(rx: np.ndarray, ry: np.ndarray, formula: str) -> float:
    if formula == "ranks":
        return _pearson(rx, ry)
    if formula == "difference":
        # classic 1 - 6*sum(d^2)/(n^3 - n) on tie-averaged ranks; equals the
        # "ranks" form only when both variables are tie-free
        n = rx.size
        d = rx - ry
        return 1.0 - 6.0 * float(d @ d) / (n * (n * n - 1))
    raise ValueError(f"unknown formula: {formula!r}")


def _tail_p(null_stats: np.ndarray, observed: float, alternative: str) -> float:
    if alternative == "two-sided":
        hits = np.sum(np.abs(null_stats) >= abs(observed) - _TAIL_EPS)
    elif alternative == "greater":
        hits = np.sum(null_stats >= observed - _TAIL_EPS)
    elif alternative == "less":
        hits = np.sum(null_stats <= observed + _TAIL_EPS)
    else:
        raise ValueError(f"unknown alternative: {alternative!r}")
    return float(hits) / null_stats.size


def _t_approx_p(rho: float, n: int, alternative: str) -> float:
    if abs(rho) >= 1.0:
        two = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        two = t_two_sided_p(t, n - 2)
    if alternative == "two-sided":
        return two
    one = two / 2.0
    if alternative == "greater":
        return one if rho >= 0.0 else 1.0 - one
    if alternative == "less":
        return one if rho <= 0.0 else 1.0 - one
    raise ValueError(f"unknown alternative: {alternative!r}")


def spearman(
    x,
    y,
    *,
    alternative: str = "two-sided",
    formula: str = "ranks",
    method: Method = Method.T_APPROX,
    n_resamples: int = 10_000,
    seed: int = 0,
    exact_limit: int = 8,
) -> TestResult:
    """Spearman rank correlation with a t-approximation or permutation p.

    The default statistic is the Pearson correlation of tie-averaged ranks;
    ``formula="difference"`` selects the classic 1 - 6*sum(d^2)/(n^3-n)
    variant instead.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d sequences of equal length")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    rx = np.array(rank_with_ties(x))
    ry = np.array(rank_with_ties(y))
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        raise DegenerateDataError("zero rank variance, correlation undefined")
    rho = _spearman_rho(rx, ry, formula)

    if method is Method.T_APPROX:
        p = _t_approx_p(rho, n, alternative)
    elif method is Method.EXACT_PERM:
        if n <= exact_limit:
            perms = np.array(list(itertools.permutations(ry)))
        else:
            rng = np.random.default_rng(seed)
            perms = np.array([rng.permutation(ry) for _ in range(n_resamples)])
        null = np.array([_spearman_rho(rx, p_, formula) for p_ in perms])
        p = _tail_p(null, rho, alternative)
    else:
        raise ValueError(f"unsupported method for spearman: {method}")
    return TestResult(statistic=rho, p_value=p, n=(n,), method=method)


def _kw_h(ranks: np.ndarray, sizes: list[int], tie_sum: float) -> float:
    n = ranks.size
    start = 0
    ssq = 0.0
    for sz in sizes:
        r = float(ranks[start : start + sz].sum())
        ssq += r * r / sz
        start += sz
    h = 12.0 / (n * (n + 1)) * ssq - 3.0 * (n + 1)
    correction = 1.0 - tie_sum / (n**3 - n)
    if correction == 0.0:
        raise DegenerateDataError("all values identical, H undefined")
    return h / correction


def kruskal_wallis(
    groups,
    *,
    method: Method = Method.CHI2_APPROX,
    n_resamples: int = 10_000,
    seed: int = 0,
) -> TestResult:
    """Kruskal-Wallis H with the standard tie correction and eta-squared.

    The effect size is (H - k + 1) / (n - k).
    """
    samples = [np.asarray(g, dtype=np.float64) for g in groups]
    k = len(samples)
    if k < 2:
        raise ValueError("need at least 2 groups")
    if any(s.size == 0 for s in samples):
        raise ValueError("every group must be non-empty")
    sizes = [int(s.size) for s in samples]
    n = sum(sizes)
    if n < k + 1:
        raise ValueError("need total n >= k + 1")
    pooled = np.concatenate(samples)
    ranks = np.array(rank_with_ties(pooled))
    tie_sum = _tie_term(pooled)
    h = _kw_h(ranks, sizes, tie_sum)
    eta2 = (h - k + 1) / (n - k)

    if method is Method.CHI2_APPROX:
        p = chi2_sf(h, k - 1)
    elif method is Method.EXACT_PERM:
        rng = np.random.default_rng(seed)
        null = np.empty(n_resamples)
        for i in range(n_resamples):
            null[i] = _kw_h(rng.permutation(ranks), sizes, tie_sum)
        p = _tail_p(null, h, "greater")
    else:
        raise ValueError(f"unsupported method for kruskal_wallis: {method}")
    return TestResult(
        statistic=h, p_value=p, n=tuple(sizes), method=method, effect_size=eta2
    )


def _u_min(ranks: np.ndarray, n_a: int, n_b: int) -> float:
    r_a = float(ranks[:n_a].sum())
    u_a = r_a - n_a * (n_a + 1) / 2.0
    return min(u_a, n_a * n_b - u_a)


def mann_whitney(
    a,
    b,
    *,
    method: Method = Method.NORMAL_APPROX,
    n_resamples: int = 20_000,
    seed: int = 0,
    exact_limit: int = 20_000,
) -> TestResult:
    """Mann-Whitney U (the smaller of the two U statistics), two-sided.

    The default p uses the tie-corrected normal approximation with a
    continuity correction; EXACT_PERM enumerates group assignments when
    there are at most ``exact_limit`` of them and samples otherwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    n_a, n_b = int(a.size), int(b.size)
    n = n_a + n_b
    pooled = np.concatenate([a, b])
    ranks = np.array(rank_with_ties(pooled))
    u = _u_min(ranks, n_a, n_b)

    if method is Method.NORMAL_APPROX:
        mu = n_a * n_b / 2.0
        tie_sum = _tie_term(pooled)
        var = n_a * n_b / 12.0 * ((n + 1) - tie_sum / (n * (n - 1)))
        if var <= 0.0:
            p = 1.0
        else:
            z = (u - mu + 0.5) / math.sqrt(var)
            p = min(1.0, 2.0 * normal_cdf(z))
    elif method is Method.EXACT_PERM:
        total = math.comb(n, n_a)
        if total <= exact_limit:
            idx = np.arange(n)
            null = np.empty(total)
            for i, pick in enumerate(itertools.combinations(idx, n_a)):
                mask = np.zeros(n, dtype=bool)
                mask[list(pick)] = True
                null[i] = _u_min(
                    np.concatenate([ranks[mask], ranks[~mask]]), n_a, n_b
                )
        else:
            rng = np.random.default_rng(seed)
            null = np.empty(n_resamples)
            for i in range(n_resamples):
                null[i] = _u_min(rng.permutation(ranks), n_a, n_b)
        # min(U_a, U_b) folds both tails, so a small-tail count is two-sided
        null_arr = np.asarray(null)
        p = float(np.sum(null_arr <= u + _TAIL_EPS)) / null_arr.size
    else:
        raise ValueError(f"unsupported method for mann_whitney: {method}")
    return TestResult(statistic=u, p_value=p, n=(n_a, n_b), method=method)


# ---------------------------------------------------------------------------
# attribute table


GENDER_LABELS = ("Man", "Woman")


@dataclass(frozen=True)
class AttributeRow:
    prompt: str
    predicted_gender: str
    monk_rank: int
    happy: float
    sad: float
    angry: float
    group: str

    def __post_init__(self):
        if self.predicted_gender not in GENDER_LABELS:
            raise ValueError(f"bad gender label: {self.predicted_gender!r}")
        if not 1 <= self.monk_rank <= 10:
            raise ValueError(f"monk rank out of range: {self.monk_rank}")
        for name in ("happy", "sad", "angry"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} likelihood out of [0,1]: {v}")


@dataclass(frozen=True)
class GroupConfig:
    """Identity groups: inclusive membership plus the exclusive relabeling
    applied when a partition is required (Kruskal-Wallis)."""

    groups: dict[str, tuple[str, ...]]
    exclusive_overrides: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "GroupConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        groups = {k: tuple(v) for k, v in raw["groups"].items()}
        overrides = dict(raw.get("exclusive_overrides", {}))
        for prompt, grp in overrides.items():
            if grp not in groups:
                raise ValueError(f"override targets unknown group {grp!r}")
            if not any(prompt in members for members in groups.values()):
                raise ValueError(f"override for unknown prompt {prompt!r}")
        return cls(groups=groups, exclusive_overrides=overrides)

    def exclusive_label(self, prompt: str) -> str:
        if prompt in self.exclusive_overrides:
            return self.exclusive_overrides[prompt]
        hits = [g for g, members in self.groups.items() if prompt in members]
        if not hits:
            raise KeyError(f"prompt {prompt!r} belongs to no group")
        if len(hits) > 1:
            raise ValueError(
                f"prompt {prompt!r} is in {hits} and has no exclusive override"
            )
        return hits[0]


@dataclass(frozen=True)
class AttributeTable:
    rows: tuple[AttributeRow, ...]
    config: GroupConfig

    CSV_FIELDS = (
        "prompt",
        "predicted_gender",
        "monk_rank",
        "happy_pct",
        "sad_pct",
        "angry_pct",
        "group",
    )

    @classmethod
    def from_csv(cls, path: str | Path, config: GroupConfig) -> "AttributeTable":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = set(cls.CSV_FIELDS) - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"attribute CSV missing columns: {sorted(missing)}")
            for rec in reader:
                rows.append(
                    AttributeRow(
                        prompt=rec["prompt"],
                        predicted_gender=rec["predicted_gender"],
                        monk_rank=int(rec["monk_rank"]),
                        happy=float(rec["happy_pct"]) / 100.0,
                        sad=float(rec["sad_pct"]) / 100.0,
                        angry=float(rec["angry_pct"]) / 100.0,
                        group=rec["group"],
                    )
                )
        return cls(rows=tuple(rows), config=config)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_FIELDS)
            for r in self.rows:
                writer.writerow(
                    [
                        r.prompt,
                        r.predicted_gender,
                        r.monk_rank,
                        f"{r.happy * 100:.4f}",
                        f"{r.sad * 100:.4f}",
                        f"{r.angry * 100:.4f}",
                        r.group,
                    ]
                )

    def monk_ranks(self) -> np.ndarray:
        return np.array([r.monk_rank for r in self.rows], dtype=np.float64)

    def emotion(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=np.float64)

    def gender_counts(self) -> dict[str, int]:
        counts = {g: 0 for g in GENDER_LABELS}
        for r in self.rows:
            counts[r.predicted_gender] += 1
        return counts

    def membership_indicator(self, group: str) -> np.ndarray:
        """Inclusive 0/1 membership for one group across all rows."""
        if group not in self.config.groups:
            raise KeyError(f"unknown group {group!r}")
        members = set(self.config.groups[group])
        return np.array(
            [1.0 if r.prompt in members else 0.0 for r in self.rows]
        )

    def exclusive_partition(self) -> dict[str, list[float]]:
        """Monk ranks partitioned by exclusive group label."""
        out: dict[str, list[float]] = {g: [] for g in self.config.groups}
        for r in self.rows:
            out[self.config.exclusive_label(r.prompt)].append(float(r.monk_rank))
        return {g: v for g, v in out.items() if v}


def group_correlations(table: AttributeTable, **kwargs) -> list[tuple[str, TestResult]]:
    """Spearman correlation between each group's membership indicator and the
    Monk rank, across all prompts."""
    monk = table.monk_ranks()
    results = []
    for group in table.config.groups:
        indicator = table.membership_indicator(group)
        results.append((group, spearman(indicator, monk, **kwargs)))
    return results
