"""Prediction records and their line-delimited file format.

One record per line, JSON-encoded, UTF-8. Recognized fields:

    id               string, unique within a file
    schema_id        string, database/schema the question targets
    question         string, optional
    token_probs      list of floats in (0, 1], optional, nonempty when present
    label            0 or 1 (execution-match correctness)
    self_check_bool  object {p_true, p_false}, optional; p_true + p_false > 0
    verbalized_prob  float in [0, 1], optional
    alternatives     list of {score, equivalent}, optional

Unknown fields are preserved on the record and written back by the
serializer, but are otherwise ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping


class RecordError(ValueError):
    """A single record violates the data model.

    Carries the offending record id and field name so callers can report
    precisely which input is bad.
    """

    def __init__(self, record_id: str, field_name: str, message: str):
        self.record_id = record_id
        self.field_name = field_name
        super().__init__(f"record {record_id!r}: field {field_name!r}: {message}")


class DatasetError(ValueError):
    """A file-level problem: malformed line, duplicate id, empty dataset."""


@dataclass(frozen=True)
class Alternative:
    """A candidate variant SQL: its raw score and whether it is semantically
    equivalent to the prediction."""

    score: float
    equivalent: bool


@dataclass(frozen=True)
class PredictionRecord:
    """One generated SQL with its probabilities, optional self-check outputs,
    optional alternatives, and 0/1 correctness label."""

    id: str
    schema_id: str
    label: int
    question: str | None = None
    token_probs: tuple[float, ...] | None = None
    self_check_bool: tuple[float, float] | None = None
    verbalized_prob: float | None = None
    alternatives: tuple[Alternative, ...] | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise RecordError(self.id, "label", f"must be 0 or 1, got {self.label!r}")
        if self.token_probs is not None:
            if len(self.token_probs) == 0:
                raise RecordError(self.id, "token_probs", "must be nonempty when present")
            for p in self.token_probs:
                if not (0.0 < p <= 1.0):
                    raise RecordError(
                        self.id, "token_probs", f"every probability must lie in (0, 1], got {p!r}"
                    )
        if self.self_check_bool is not None:
            p_true, p_false = self.self_check_bool
            if p_true < 0 or p_false < 0:
                raise RecordError(self.id, "self_check_bool", "probabilities must be nonnegative")
            if p_true + p_false <= 0:
                raise RecordError(self.id, "self_check_bool", "p_true + p_false must be positive")
        if self.verbalized_prob is not None and not (0.0 <= self.verbalized_prob <= 1.0):
            raise RecordError(
                self.id, "verbalized_prob", f"must lie in [0, 1], got {self.verbalized_prob!r}"
            )


@dataclass(frozen=True)
class Dataset:
    records: tuple[PredictionRecord, ...]
    source_name: str


@dataclass(frozen=True)
class DatasetSummary:
    n_records: int
    n_schemas: int
    pct_correct: float


# Fields the parser understands; everything else lands in `extra`.
_KNOWN_FIELDS = (
    "id",
    "schema_id",
    "question",
    "token_probs",
    "label",
    "self_check_bool",
    "verbalized_prob",
    "alternatives",
)


def make_dataset(records: Iterable[PredictionRecord], source_name: str) -> Dataset:
    """Assemble a Dataset, enforcing nonemptiness and id uniqueness."""
    recs = tuple(records)
    if not recs:
        raise DatasetError(f"empty dataset: {source_name}")
    seen: set[str] = set()
    for r in recs:
        if r.id in seen:
            raise DatasetError(f"duplicate record id {r.id!r} in {source_name}")
        seen.add(r.id)
    return Dataset(records=recs, source_name=source_name)


def _record_from_obj(obj: dict[str, Any]) -> PredictionRecord:
    if not isinstance(obj, dict):
        raise ValueError(f"expected an object, got {type(obj).__name__}")
    for required in ("id", "schema_id", "label"):
        if required not in obj:
            raise ValueError(f"missing required field {required!r}")
    rid = str(obj["id"])

    token_probs = None
    if obj.get("token_probs") is not None:
        raw = obj["token_probs"]
        if not isinstance(raw, list):
            raise RecordError(rid, "token_probs", "must be a list of numbers")
        token_probs = tuple(float(p) for p in raw)

    self_check = None
    if obj.get("self_check_bool") is not None:
        raw = obj["self_check_bool"]
        if not isinstance(raw, dict) or "p_true" not in raw or "p_false" not in raw:
            raise RecordError(rid, "self_check_bool", "must be an object with p_true and p_false")
        self_check = (float(raw["p_true"]), float(raw["p_false"]))

    alternatives = None
    if obj.get("alternatives") is not None:
        raw = obj["alternatives"]
        if not isinstance(raw, list):
            raise RecordError(rid, "alternatives", "must be a list of {score, equivalent}")
        alts = []
        for entry in raw:
            if not isinstance(entry, dict) or "score" not in entry or "equivalent" not in entry:
                raise RecordError(rid, "alternatives", "each entry needs score and equivalent")
            alts.append(Alternative(score=float(entry["score"]), equivalent=bool(entry["equivalent"])))
        alternatives = tuple(alts)

    label = obj["label"]
    if not isinstance(label, int) or isinstance(label, bool):
        raise RecordError(rid, "label", f"must be the integer 0 or 1, got {label!r}")

    verbalized = obj.get("verbalized_prob")
    extra = {k: v for k, v in obj.items() if k not in _KNOWN_FIELDS}

    return PredictionRecord(
        id=rid,
        schema_id=str(obj["schema_id"]),
        label=label,
        question=None if obj.get("question") is None else str(obj["question"]),
        token_probs=token_probs,
        self_check_bool=self_check,
        verbalized_prob=None if verbalized is None else float(verbalized),
        alternatives=alternatives,
        extra=extra,
    )


def load_dataset(path: str | Path) -> Dataset:
    """Read a line-delimited record file into a validated Dataset.

    Records keep file order. Malformed lines are reported with their line
    number; invariant violations with the record id and field name.
    """
    path = Path(path)
    records: list[PredictionRecord] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed line: {exc}") from exc
            try:
                record = _record_from_obj(obj)
            except RecordError:
                raise
            except (ValueError, TypeError) as exc:
                raise DatasetError(f"{path}:{lineno}: invalid record: {exc}") from exc
            if record.id in seen:
                raise DatasetError(f"{path}:{lineno}: duplicate record id {record.id!r}")
            seen.add(record.id)
            records.append(record)
    if not records:
        raise DatasetError(f"empty dataset: {path}")
    return Dataset(records=tuple(records), source_name=path.name)


def _record_to_obj(r: PredictionRecord) -> dict[str, Any]:
    obj: dict[str, Any] = {"id": r.id, "schema_id": r.schema_id, "label": r.label}
    if r.question is not None:
        obj["question"] = r.question
    if r.token_probs is not None:
        obj["token_probs"] = list(r.token_probs)
    if r.self_check_bool is not None:
        obj["self_check_bool"] = {"p_true": r.self_check_bool[0], "p_false": r.self_check_bool[1]}
    if r.verbalized_prob is not None:
        obj["verbalized_prob"] = r.verbalized_prob
    if r.alternatives is not None:
        obj["alternatives"] = [{"score": a.score, "equivalent": a.equivalent} for a in r.alternatives]
    for k in sorted(r.extra):
        obj[k] = r.extra[k]
    return obj


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Serialize a Dataset back to the line-delimited format.

    load_dataset(write_dataset(d)) reproduces semantically identical records.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in dataset.records:
            fh.write(json.dumps(_record_to_obj(r)) + "\n")


def dataset_summary(dataset: Dataset) -> DatasetSummary:
    """Record count, distinct schema count, and percent of correct labels."""
    n = len(dataset.records)
    schemas = {r.schema_id for r in dataset.records}
    pct = 100.0 * sum(r.label for r in dataset.records) / n
    return DatasetSummary(n_records=n, n_schemas=len(schemas), pct_correct=pct)
