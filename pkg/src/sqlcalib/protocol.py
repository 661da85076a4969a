"""Evaluation procedure: schema-disjoint cross-validation, schema-level
calibration, aggregation across folds, and a seeded synthetic-data generator.

All randomness flows through numpy's PCG64 generator seeded from the config,
so fold assignments, splits, and synthetic datasets reproduce across runs
and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .calibrate import (
    PlattCalibrator,
    apply_isotonic,
    apply_platt,
    fit_isotonic,
    fit_platt,
    smooth_targets,
)
from .metrics import MetricsReport, SingleClassError, ThresholdMetrics, summarize
from .records import Dataset, PredictionRecord, make_dataset
from .scoring import ScoredRecord


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    schema_to_fold: Mapping[str, int]

    def schemas_in_fold(self, fold: int) -> tuple[str, ...]:
        return tuple(sorted(s for s, f in self.schema_to_fold.items() if f == fold))


@dataclass(frozen=True)
class ProtocolConfig:
    k: int = 5
    binning: str = "uniform"  # or "monotonic"
    n_bins: int = 10
    min_bin_count: int = 1
    thresholds: tuple[float, ...] = (0.9, 0.85, 0.8, 0.7)
    seed: int = 0
    scope: str = "schema_disjoint"  # or "schema_level"
    calibrator: str = "isotonic"  # scores used for thresholded P/R/F1
    tune_fraction: float = 0.2  # schema-level tuning share
    min_schema_records: int = 10  # schema-level minimum evaluable size

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.binning not in ("uniform", "monotonic"):
            raise ValueError(f"unknown binning mode {self.binning!r}")
        if self.scope not in ("schema_disjoint", "schema_level"):
            raise ValueError(f"unknown calibration scope {self.scope!r}")
        if self.calibrator not in ("platt", "isotonic"):
            raise ValueError(f"unknown calibrator {self.calibrator!r}")
        for t in self.thresholds:
            if not (0.0 <= t <= 1.0):
                raise ValueError(f"threshold {t!r} outside [0, 1]")
        if not (0.0 < self.tune_fraction < 1.0):
            raise ValueError(f"tune_fraction must lie in (0, 1), got {self.tune_fraction}")


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    n_tune: int
    n_test: int
    metrics: MetricsReport
    degenerate_tune: bool  # single-class or single-record tuning fold


@dataclass(frozen=True)
class EvaluationReport:
    method: str
    config: ProtocolConfig
    folds: tuple[FoldMetrics, ...]
    mean: Mapping[str, float]
    std: Mapping[str, float]
    prf_mean: tuple[ThresholdMetrics, ...]
    prf_std: tuple[ThresholdMetrics, ...]
    notes: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class SchemaMetrics:
    schema_id: str
    n_tune: int
    n_eval: int
    metrics: MetricsReport


@dataclass(frozen=True)
class SchemaLevelReport:
    method: str
    config: ProtocolConfig
    schemas: tuple[SchemaMetrics, ...]
    micro: MetricsReport
    skipped: tuple[tuple[str, str], ...]  # (schema_id, reason)


def _assign_folds(counts: Mapping[str, int], k: int, seed: int) -> dict[str, int]:
    """Shuffle schemas with a seeded PCG64 stream, then deal them round-robin
    in descending record-count order (the stable sort keeps the shuffled
    order among equal counts, balancing fold sizes)."""
    schemas = sorted(counts)
    if len(schemas) < k:
        raise ValueError(
            f"need ≥ k schemas for schema-disjoint folds: k={k}, dataset has {len(schemas)}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    shuffled = [schemas[i] for i in rng.permutation(len(schemas))]
    ordered = sorted(shuffled, key=lambda s: -counts[s])
    return {s: i % k for i, s in enumerate(ordered)}


def make_schema_disjoint_folds(dataset: Dataset, k: int, seed: int) -> FoldAssignment:
    counts: dict[str, int] = {}
    for r in dataset.records:
        counts[r.schema_id] = counts.get(r.schema_id, 0) + 1
    return FoldAssignment(k=k, schema_to_fold=_assign_folds(counts, k, seed))


def _fit_both(tune: Sequence[ScoredRecord]):
    """Fit Platt and isotonic calibrators on the tuning records.

    A single-record tuning fold cannot support the Platt optimizer; it falls
    back to the constant map at the smoothed base rate.
    """
    pairs = [(s.raw_score, s.label) for s in tune]
    if len(pairs) >= 2:
        platt = fit_platt(pairs)
    else:
        target = float(smooth_targets([p[1] for p in pairs]).mean())
        platt = PlattCalibrator(t=0.0, b=math.log(target / (1.0 - target)))
    return platt, fit_isotonic(pairs)


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    m = sum(values) / len(values)
    if len(values) < 2:
        return m, 0.0
    var = sum((v - m) ** 2 for v in values) / (len(values) - 1)
    return m, math.sqrt(var)


_METRIC_KEYS = ("bs_p", "bs_i", "auc", "ece_raw", "ece_p", "ece_i")


def _aggregate(folds: Sequence[FoldMetrics]) -> tuple[dict[str, float], dict[str, float]]:
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for key in _METRIC_KEYS:
        values = [getattr(f.metrics, key) for f in folds]
        if any(v is None for v in values):
            continue
        mean[key], std[key] = _mean_std(values)
    return mean, std


def _aggregate_prf(
    folds: Sequence[FoldMetrics],
) -> tuple[tuple[ThresholdMetrics, ...], tuple[ThresholdMetrics, ...]]:
    means: list[ThresholdMetrics] = []
    stds: list[ThresholdMetrics] = []
    n_thresholds = len(folds[0].metrics.prf)
    for i in range(n_thresholds):
        tau = folds[0].metrics.prf[i].threshold
        agg = {}
        for part in ("precision", "recall", "f1"):
            agg[part] = _mean_std([getattr(f.metrics.prf[i], part) for f in folds])
        means.append(ThresholdMetrics(tau, agg["precision"][0], agg["recall"][0], agg["f1"][0]))
        stds.append(ThresholdMetrics(tau, agg["precision"][1], agg["recall"][1], agg["f1"][1]))
    return tuple(means), tuple(stds)


def cross_validate(scored: Sequence[ScoredRecord], cfg: ProtocolConfig) -> EvaluationReport:
    """Schema-disjoint k-fold evaluation.

    Each fold in turn is the tuning split: calibrators are fitted on it and
    applied to the union of the other k-1 folds, where all metrics are
    computed. Reports per-fold metrics plus mean and sample standard
    deviation across folds.
    """
    if not scored:
        raise ValueError("no scored records to evaluate")
    methods = {s.method for s in scored}
    if len(methods) > 1:
        raise ValueError(f"mixed scoring methods in one evaluation: {sorted(methods)}")
    method = next(iter(methods))

    counts: dict[str, int] = {}
    for s in scored:
        counts[s.schema_id] = counts.get(s.schema_id, 0) + 1
    schema_to_fold = _assign_folds(counts, cfg.k, cfg.seed)

    folds: list[FoldMetrics] = []
    notes: list[str] = []
    for f in range(cfg.k):
        tune = [s for s in scored if schema_to_fold[s.schema_id] == f]
        test = sorted(
            (s for s in scored if schema_to_fold[s.schema_id] != f), key=lambda s: s.id
        )
        degenerate = len(tune) < 2 or len({s.label for s in tune}) == 1
        if degenerate:
            notes.append(f"fold {f}: degenerate tuning split (Platt reduces to a constant map)")
        platt, isotonic = _fit_both(tune)
        raw = [s.raw_score for s in test]
        labels = [s.label for s in test]
        platt_scores = [apply_platt(platt, x) for x in raw]
        iso_scores = [apply_isotonic(isotonic, x) for x in raw]
        threshold_scores = platt_scores if cfg.calibrator == "platt" else iso_scores
        try:
            report = summarize(
                raw,
                platt_scores,
                iso_scores,
                labels,
                binning=cfg.binning,
                n_bins=cfg.n_bins,
                min_bin_count=cfg.min_bin_count,
                thresholds=cfg.thresholds,
                threshold_scores=threshold_scores,
            )
        except SingleClassError:
            notes.append(f"fold {f}: single-class test split, AUC undefined")
            report = summarize(
                raw,
                platt_scores,
                iso_scores,
                labels,
                binning=cfg.binning,
                n_bins=cfg.n_bins,
                min_bin_count=cfg.min_bin_count,
                thresholds=cfg.thresholds,
                threshold_scores=threshold_scores,
                skip_auc=True,
            )
        folds.append(
            FoldMetrics(
                fold=f,
                n_tune=len(tune),
                n_test=len(test),
                metrics=report,
                degenerate_tune=degenerate,
            )
        )

    mean, std = _aggregate(folds)
    prf_mean, prf_std = _aggregate_prf(folds)
    return EvaluationReport(
        method=method,
        config=cfg,
        folds=tuple(folds),
        mean=mean,
        std=std,
        prf_mean=prf_mean,
        prf_std=prf_std,
        notes=tuple(notes),
    )


def schema_level_evaluate(
    scored: Sequence[ScoredRecord], cfg: ProtocolConfig
) -> SchemaLevelReport:
    """Per-schema calibration: within each schema a seeded split reserves a
    tuning fraction for calibrator fitting; metrics are computed on the
    remainder. Schemas below the minimum size are skipped with a reason.
    The micro row pools every held-out record across schemas."""
    if not scored:
        raise ValueError("no scored records to evaluate")
    methods = {s.method for s in scored}
    if len(methods) > 1:
        raise ValueError(f"mixed scoring methods in one evaluation: {sorted(methods)}")
    method = next(iter(methods))

    by_schema: dict[str, list[ScoredRecord]] = {}
    for s in scored:
        by_schema.setdefault(s.schema_id, []).append(s)

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    rows: list[SchemaMetrics] = []
    skipped: list[tuple[str, str]] = []
    pooled_raw: list[float] = []
    pooled_platt: list[float] = []
    pooled_iso: list[float] = []
    pooled_labels: list[int] = []

    for schema_id in sorted(by_schema):
        group = sorted(by_schema[schema_id], key=lambda s: s.id)
        n = len(group)
        if n < cfg.min_schema_records:
            skipped.append((schema_id, f"only {n} records, need {cfg.min_schema_records}"))
            continue
        perm = rng.permutation(n)
        n_tune = max(1, int(round(cfg.tune_fraction * n)))
        if n_tune >= n:
            n_tune = n - 1
        tune = [group[i] for i in perm[:n_tune]]
        evaluation = sorted((group[i] for i in perm[n_tune:]), key=lambda s: s.id)

        platt, isotonic = _fit_both(tune)
        raw = [s.raw_score for s in evaluation]
        labels = [s.label for s in evaluation]
        platt_scores = [apply_platt(platt, x) for x in raw]
        iso_scores = [apply_isotonic(isotonic, x) for x in raw]
        threshold_scores = platt_scores if cfg.calibrator == "platt" else iso_scores
        single_class = len(set(labels)) == 1
        report = summarize(
            raw,
            platt_scores,
            iso_scores,
            labels,
            binning=cfg.binning,
            n_bins=cfg.n_bins,
            min_bin_count=cfg.min_bin_count,
            thresholds=cfg.thresholds,
            threshold_scores=threshold_scores,
            skip_auc=single_class,
        )
        rows.append(
            SchemaMetrics(schema_id=schema_id, n_tune=n_tune, n_eval=len(evaluation), metrics=report)
        )
        pooled_raw.extend(raw)
        pooled_platt.extend(platt_scores)
        pooled_iso.extend(iso_scores)
        pooled_labels.extend(labels)

    if not rows:
        raise ValueError("no schema met the minimum record count")
    micro = summarize(
        pooled_raw,
        pooled_platt,
        pooled_iso,
        pooled_labels,
        binning=cfg.binning,
        n_bins=cfg.n_bins,
        min_bin_count=cfg.min_bin_count,
        thresholds=cfg.thresholds,
        threshold_scores=pooled_platt if cfg.calibrator == "platt" else pooled_iso,
        skip_auc=len(set(pooled_labels)) == 1,
    )
    return SchemaLevelReport(
        method=method, config=cfg, schemas=tuple(rows), micro=micro, skipped=tuple(skipped)
    )


def _logistic(r: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-(2.0 * r - 1.0)))


TRUE_MAPS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": lambda r: r,
    "half": lambda r: np.full_like(r, 0.5),
    "one": lambda r: np.ones_like(r),
    "logistic": _logistic,
}


def generate_synthetic(
    n: int,
    true_map: str | Callable[[np.ndarray], np.ndarray],
    seed: int,
    n_schemas: int = 10,
) -> Dataset:
    """Synthetic dataset for oracle tests.

    Raw scores are uniform on (0, 1), dealt round-robin over synthetic
    schema ids; labels are Bernoulli draws at true_map(score); each record
    carries a single token probability equal to its score, so prod pooling
    reproduces the score exactly.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    fn = TRUE_MAPS[true_map] if isinstance(true_map, str) else true_map
    rng = np.random.Generator(np.random.PCG64(seed))
    r = np.maximum(rng.random(n), 1e-12)
    p = np.clip(fn(r), 0.0, 1.0)
    labels = (rng.random(n) < p).astype(int)
    records = [
        PredictionRecord(
            id=f"syn-{i:06d}",
            schema_id=f"schema-{i % n_schemas:02d}",
            label=int(labels[i]),
            token_probs=(float(r[i]),),
        )
        for i in range(n)
    ]
    return make_dataset(records, source_name=f"synthetic-{true_map}-{seed}")
