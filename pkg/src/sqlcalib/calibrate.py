"""Monotone rescaling of raw confidence scores.

Two calibrators are provided:

* Platt scaling: fit sigma(t * r + b) to the labels by maximum likelihood,
  with the classic target smoothing that keeps the optimum finite on
  separable data.
* Isotonic regression: least-squares non-decreasing step fit of the labels
  against the scores, solved by pool adjacent violators; applied out of
  sample by linear interpolation between knots (a pure step mode is
  available for exact step semantics).

Raw scores outside [0, 1] (the variant method produces them) are accepted
unchanged; only calibrated outputs are required to lie in [0, 1].
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .scoring import ScoredRecord

GRAD_TOL = 1e-8
MAX_ITER = 200


@dataclass(frozen=True)
class PlattCalibrator:
    """Sigmoid rescaling map sigma(t * raw + b)."""

    t: float
    b: float


@dataclass(frozen=True)
class IsotonicCalibrator:
    """Monotone step/interpolation map defined by ascending knots.

    knots: (raw_score, fitted_value) pairs with strictly increasing raw
    scores and non-decreasing fitted values in [0, 1].
    mode: "interpolate" (default) draws straight lines between knots;
    "step" holds each fitted value until the next knot.
    """

    knots: tuple[tuple[float, float], ...]
    mode: str = "interpolate"


@dataclass(frozen=True)
class CalibratedRecord:
    id: str
    schema_id: str
    method: str
    raw_score: float
    calibrated_score: float
    label: int


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def smooth_targets(labels: Sequence[int]) -> np.ndarray:
    """Platt's smoothed regression targets.

    Positives become (n_pos + 1) / (n_pos + 2), negatives 1 / (n_neg + 2).
    Keeps the likelihood bounded even when the data are separable or
    single-class.
    """
    a = np.asarray(labels, dtype=float)
    n_pos = float(a.sum())
    n_neg = float(len(a) - a.sum())
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    return np.where(a > 0, hi, lo)


def platt_log_likelihood(
    t: float, b: float, scores: Sequence[float], targets: Sequence[float]
) -> float:
    """Mean smoothed log-likelihood of the targets under sigma(t * r + b)."""
    r = np.asarray(scores, dtype=float)
    g = np.asarray(targets, dtype=float)
    z = t * r + b
    # log sigma(z) and log(1 - sigma(z)) via logaddexp for stability
    log_p = -np.logaddexp(0.0, -z)
    log_q = -np.logaddexp(0.0, z)
    return float(np.mean(g * log_p + (1.0 - g) * log_q))


def platt_gradient(
    t: float, b: float, scores: Sequence[float], targets: Sequence[float]
) -> tuple[float, float]:
    """Partial derivatives of the mean smoothed log-likelihood w.r.t. (t, b)."""
    r = np.asarray(scores, dtype=float)
    g = np.asarray(targets, dtype=float)
    resid = g - _sigmoid(t * r + b)
    return float(np.mean(resid * r)), float(np.mean(resid))


def fit_platt(pairs: Sequence[tuple[float, int]]) -> PlattCalibrator:
    """Maximum-likelihood fit of the sigmoid rescaling map.

    Newton iterations with backtracking line search and a gradient-step
    fallback when the Hessian is near singular; stops when the mean
    log-likelihood gradient norm drops below 1e-8 or after 200 iterations
    (a warning is issued in the latter case).

    Args:
        pairs: (raw_score, label) tuples, label in {0, 1}. At least 2.

    Returns:
        PlattCalibrator with finite t and b.
    """
    if len(pairs) < 2:
        raise ValueError(f"need at least 2 pairs to fit, got {len(pairs)}")
    r = np.asarray([p[0] for p in pairs], dtype=float)
    a = np.asarray([p[1] for p in pairs], dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("non-finite raw score in calibration data")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError("labels must be 0 or 1")
    order = np.lexsort((a, r))  # input order must not affect the fitted bits
    r, a = r[order], a[order]

    g = smooth_targets(a)
    mean_target = float(np.mean(g))
    t = 0.0
    b = math.log(mean_target / (1.0 - mean_target))

    ll = platt_log_likelihood(t, b, r, g)
    converged = False
    for _ in range(MAX_ITER):
        p = _sigmoid(t * r + b)
        grad = np.array([np.mean((g - p) * r), np.mean(g - p)])
        if float(np.linalg.norm(grad)) <= GRAD_TOL:
            converged = True
            break
        w = p * (1.0 - p)
        h11 = float(np.mean(w * r * r))
        h12 = float(np.mean(w * r))
        h22 = float(np.mean(w))
        det = h11 * h22 - h12 * h12
        if det > 1e-12 * max(abs(h11 * h22), 1e-300):
            # ascent direction (-H)^-1 grad; -H is the positive matrix above
            step = np.array(
                [(h22 * grad[0] - h12 * grad[1]) / det, (h11 * grad[1] - h12 * grad[0]) / det]
            )
        else:
            step = grad

        alpha = 1.0
        directional = float(grad @ step)
        while alpha > 1e-12:
            t_new = t + alpha * step[0]
            b_new = b + alpha * step[1]
            ll_new = platt_log_likelihood(t_new, b_new, r, g)
            if ll_new >= ll + 1e-4 * alpha * directional:
                break
            alpha *= 0.5
        t, b = t + alpha * step[0], b + alpha * step[1]
        ll = platt_log_likelihood(t, b, r, g)

    if not converged:
        grad = platt_gradient(t, b, r, g)
        if float(np.hypot(*grad)) > GRAD_TOL:
            warnings.warn(
                f"Platt fit stopped at iteration cap with gradient norm {np.hypot(*grad):.3g}",
                RuntimeWarning,
                stacklevel=2,
            )
    return PlattCalibrator(t=float(t), b=float(b))


def apply_platt(calibrator: PlattCalibrator, raw: float) -> float:
    """sigma(t * raw + b)."""
    return float(_sigmoid(np.asarray(calibrator.t * raw + calibrator.b)))


def _pava_blocks(value_sums: Sequence[float], weights: Sequence[float]) -> list[tuple[float, float]]:
    """Pool adjacent violators on (weighted value sum, weight) pairs.

    Pools while a left block mean >= right block mean, so returned block
    means are strictly increasing. The induced step function is the
    least-squares monotone fit. Returns (weight, mean) per block.
    """
    w_stack: list[float] = []
    y_stack: list[float] = []  # weighted sums: exact integers for 0/1 labels with count weights
    for y, w in zip(value_sums, weights):
        cur_w, cur_y = float(w), float(y)
        # means compared via cross products: y1/w1 >= y2/w2  <=>  y1*w2 >= y2*w1
        while w_stack and y_stack[-1] * cur_w >= cur_y * w_stack[-1]:
            cur_w += w_stack.pop()
            cur_y += y_stack.pop()
        w_stack.append(cur_w)
        y_stack.append(cur_y)
    return [(w, y / w) for w, y in zip(w_stack, y_stack)]


def fit_isotonic(pairs: Sequence[tuple[float, int]]) -> IsotonicCalibrator:
    """Least-squares non-decreasing fit of labels as a function of raw score.

    Tied raw scores are merged (weighted by multiplicity) before pooling;
    fitted values are block means, hence in [min label, max label].
    """
    if len(pairs) < 1:
        raise ValueError("need at least 1 pair to fit")
    r = np.asarray([p[0] for p in pairs], dtype=float)
    a = np.asarray([p[1] for p in pairs], dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("non-finite raw score in calibration data")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError("labels must be 0 or 1")

    uniq, inverse, counts = np.unique(r, return_inverse=True, return_counts=True)
    label_sums = np.bincount(inverse, weights=a)

    blocks = _pava_blocks(label_sums.tolist(), counts.tolist())

    # Knots at block boundaries: first and last unique raw of each block.
    knots: list[tuple[float, float]] = []
    pos = 0
    for w, mean in blocks:
        size = int(round(w))
        # recover how many unique raws the block spans
        span = 0
        spent = 0
        while spent < size:
            spent += int(counts[pos + span])
            span += 1
        knots.append((float(uniq[pos]), float(mean)))
        if span > 1:
            knots.append((float(uniq[pos + span - 1]), float(mean)))
        pos += span
    return IsotonicCalibrator(knots=tuple(knots))


def apply_isotonic(calibrator: IsotonicCalibrator, raw: float) -> float:
    """Evaluate the fitted monotone map at `raw`.

    Interpolation mode draws straight lines between adjacent knots and
    clamps to the first/last fitted value outside the knot range. Step
    mode holds each knot's value until the next knot.
    """
    knots = calibrator.knots
    if not knots:
        raise ValueError("empty isotonic calibrator")
    xs = [k[0] for k in knots]
    ys = [k[1] for k in knots]
    if raw <= xs[0]:
        return ys[0]
    if raw >= xs[-1]:
        return ys[-1]
    # rightmost knot with x <= raw
    lo, hi = 0, len(xs) - 1
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if xs[mid] <= raw:
            lo = mid
        else:
            hi = mid
    if xs[lo] == raw or calibrator.mode == "step":
        return ys[lo]
    frac = (raw - xs[lo]) / (xs[hi] - xs[lo])
    return ys[lo] + frac * (ys[hi] - ys[lo])


def calibrate_records(
    calibrator: PlattCalibrator | IsotonicCalibrator, scored: Iterable[ScoredRecord]
) -> tuple[CalibratedRecord, ...]:
    """Apply a fitted calibrator to scored records."""
    if isinstance(calibrator, PlattCalibrator):
        apply = lambda raw: apply_platt(calibrator, raw)  # noqa: E731
    else:
        apply = lambda raw: apply_isotonic(calibrator, raw)  # noqa: E731
    return tuple(
        CalibratedRecord(
            id=s.id,
            schema_id=s.schema_id,
            method=s.method,
            raw_score=s.raw_score,
            calibrated_score=apply(s.raw_score),
            label=s.label,
        )
        for s in scored
    )


def save_calibrator(
    calibrator: PlattCalibrator | IsotonicCalibrator, path: str | Path
) -> None:
    if isinstance(calibrator, PlattCalibrator):
        obj = {"kind": "platt", "t": calibrator.t, "b": calibrator.b}
    else:
        obj = {
            "kind": "isotonic",
            "mode": calibrator.mode,
            "knots": [[x, y] for x, y in calibrator.knots],
        }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def load_calibrator(path: str | Path) -> PlattCalibrator | IsotonicCalibrator:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = obj.get("kind")
    if kind == "platt":
        return PlattCalibrator(t=float(obj["t"]), b=float(obj["b"]))
    if kind == "isotonic":
        knots = tuple((float(x), float(y)) for x, y in obj["knots"])
        return IsotonicCalibrator(knots=knots, mode=obj.get("mode", "interpolate"))
    raise ValueError(f"unknown calibrator kind {kind!r} in {path}")
