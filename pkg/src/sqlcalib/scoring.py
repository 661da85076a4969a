"""Raw confidence scores for prediction records.

Four pooling rules reduce per-token probabilities to one sequence score
(prod, geo, min, avg); two self-check rules read follow-up probe outputs;
the variant rule scores a prediction relative to its best inequivalent
alternative.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .records import Alternative, Dataset, PredictionRecord

POOLING_METHODS = ("prod", "geo", "min", "avg")
SCORE_METHODS = POOLING_METHODS + ("self_check_bool", "self_check_probs", "variant_alt")


class SkipRecord(Exception):
    """The record lacks the fields a scoring method needs; skip, don't fail."""


@dataclass(frozen=True)
class ScoredRecord:
    id: str
    schema_id: str
    method: str
    raw_score: float
    label: int


@dataclass(frozen=True)
class ScoringResult:
    scored: tuple[ScoredRecord, ...]
    skipped: tuple[tuple[str, str], ...]  # (record id, reason)


def _check_probs(token_probs: Sequence[float]) -> None:
    if len(token_probs) == 0:
        raise ValueError("token probability list is empty")
    for p in token_probs:
        if not (0.0 < p <= 1.0):
            raise ValueError(f"token probability {p!r} outside (0, 1]")


def pool_prod(token_probs: Sequence[float]) -> float:
    """Product of token probabilities, computed in log space.

    The exponentiated result may underflow to 0.0 for very long sequences;
    downstream calibrators accept that.
    """
    _check_probs(token_probs)
    if len(token_probs) == 1:
        return float(token_probs[0])
    return math.exp(math.fsum(math.log(p) for p in token_probs))


def pool_geo(token_probs: Sequence[float]) -> float:
    """Geometric mean of token probabilities via the mean of logs."""
    _check_probs(token_probs)
    if len(token_probs) == 1:
        return float(token_probs[0])
    return math.exp(math.fsum(math.log(p) for p in token_probs) / len(token_probs))


def pool_min(token_probs: Sequence[float]) -> float:
    """Minimum token probability."""
    _check_probs(token_probs)
    return float(min(token_probs))


def pool_avg(token_probs: Sequence[float]) -> float:
    """Arithmetic mean of token probabilities."""
    _check_probs(token_probs)
    return math.fsum(token_probs) / len(token_probs)


def score_self_check_bool(p_true: float, p_false: float) -> float:
    """Normalized probability of the "correct" option token."""
    if p_true < 0 or p_false < 0:
        raise ValueError("self-check probabilities must be nonnegative")
    if p_true + p_false <= 0:
        raise ValueError("degenerate self-check: p_true + p_false must be positive")
    return p_true / (p_true + p_false)


def score_self_check_probs(verbalized_prob: float) -> float:
    """The model's stated probability, passed through unchanged."""
    if not (0.0 <= verbalized_prob <= 1.0):
        raise ValueError(f"verbalized probability {verbalized_prob!r} outside [0, 1]")
    return float(verbalized_prob)


def score_variant_alt(r_pred: float, alternatives: Sequence[Alternative]) -> float:
    """Predicted score minus the best score among inequivalent alternatives.

    With no inequivalent alternative the competing score is taken as 0, so
    an unrivaled prediction keeps its own confidence.
    """
    if not (0.0 <= r_pred <= 1.0):
        raise ValueError(f"predicted score {r_pred!r} outside [0, 1]")
    best = 0.0
    for alt in alternatives:
        if not (0.0 <= alt.score <= 1.0):
            raise ValueError(f"alternative score {alt.score!r} outside [0, 1]")
        if not alt.equivalent:
            best = max(best, alt.score)
    return r_pred - best


_POOLERS = {"prod": pool_prod, "geo": pool_geo, "min": pool_min, "avg": pool_avg}


def score_record(record: PredictionRecord, method: str) -> float:
    """Raw confidence of one record under `method`.

    Raises SkipRecord when the record lacks the fields the method needs.
    """
    if method not in SCORE_METHODS:
        raise ValueError(f"unknown scoring method {method!r}")
    if method in _POOLERS:
        if record.token_probs is None:
            raise SkipRecord("missing token_probs")
        return _POOLERS[method](record.token_probs)
    if method == "self_check_bool":
        if record.self_check_bool is None:
            raise SkipRecord("missing self_check_bool")
        return score_self_check_bool(*record.self_check_bool)
    if method == "self_check_probs":
        if record.verbalized_prob is None:
            raise SkipRecord("missing verbalized_prob")
        return score_self_check_probs(record.verbalized_prob)
    # variant_alt: the prediction's own score is its pooled sequence probability
    if record.alternatives is None:
        raise SkipRecord("missing alternatives")
    if record.token_probs is None:
        raise SkipRecord("missing token_probs")
    return score_variant_alt(pool_prod(record.token_probs), record.alternatives)


def score_dataset(dataset: Dataset, method: str, threads: int = 1) -> ScoringResult:
    """Score every applicable record; collect inapplicable ones in a skip report.

    Results keep dataset order regardless of thread count.
    """

    def one(record: PredictionRecord) -> ScoredRecord | tuple[str, str]:
        try:
            raw = score_record(record, method)
        except SkipRecord as exc:
            return (record.id, str(exc))
        return ScoredRecord(
            id=record.id,
            schema_id=record.schema_id,
            method=method,
            raw_score=raw,
            label=record.label,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, dataset.records))
    else:
        outcomes = [one(r) for r in dataset.records]

    scored = tuple(o for o in outcomes if isinstance(o, ScoredRecord))
    skipped = tuple(o for o in outcomes if not isinstance(o, ScoredRecord))
    return ScoringResult(scored=scored, skipped=skipped)


def write_scored(scored: Iterable[ScoredRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for s in scored:
            fh.write(
                json.dumps(
                    {
                        "id": s.id,
                        "schema_id": s.schema_id,
                        "method": s.method,
                        "raw_score": s.raw_score,
                        "label": s.label,
                    }
                )
                + "\n"
            )


def load_scored(path: str | Path) -> tuple[ScoredRecord, ...]:
    path = Path(path)
    out: list[ScoredRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                record = ScoredRecord(
                    id=str(obj["id"]),
                    schema_id=str(obj["schema_id"]),
                    method=str(obj["method"]),
                    raw_score=float(obj["raw_score"]),
                    label=int(obj["label"]),
                )
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: invalid scored record: {exc}") from exc
            if record.method not in SCORE_METHODS:
                raise ValueError(f"{path}:{lineno}: unknown method {record.method!r}")
            if record.label not in (0, 1):
                raise ValueError(f"{path}:{lineno}: label must be 0 or 1")
            low = -1.0 if record.method == "variant_alt" else 0.0
            if not (low <= record.raw_score <= 1.0):
                raise ValueError(
                    f"{path}:{lineno}: raw_score {record.raw_score!r} outside [{low}, 1] "
                    f"for method {record.method}"
                )
            out.append(record)
    if not out:
        raise ValueError(f"empty scored-record file: {path}")
    return tuple(out)
