"""Training-free word segmentation and boundary evaluation.

Pipeline per utterance: per-channel mean/variance normalization, adjacent
frame dissimilarity, centered moving-average smoothing, and prominence
based peak picking. Detected peaks become boundaries at the frame edge
between t and t+1. Scoring uses greedy closest-first one-to-one matching
within a time tolerance, reported as precision/recall/F1/R-value
percentages.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import TooShortError, ValidationError
from .featurestore import FeatureSequence, FeatureStore, WordSpan, spans_by_utterance

log = logging.getLogger(__name__)

METRIC_EUCLIDEAN = "euclidean"
METRIC_COSINE = "cosine"
METRICS = (METRIC_EUCLIDEAN, METRIC_COSINE)

VARIANCE_FLOOR = 1e-8

DEFAULT_TOLERANCE_S = 0.02
DEFAULT_WINDOWS = (1, 3, 5, 7, 9)
DEFAULT_PROMINENCES = tuple(np.geomspace(0.05, 4.0, 16))


@dataclass
class DissimilarityCurve:
    """Adjacent-frame dissimilarities g_1..g_{T-1} after smoothing."""

    values: np.ndarray
    metric: str
    window: int
    frame_shift_s: float


@dataclass
class SegHypothesis:
    """Strictly increasing boundary times, exclusive of utterance edges."""

    boundaries: np.ndarray

    def __post_init__(self):
        self.boundaries = np.asarray(self.boundaries, dtype=np.float64)
        if self.boundaries.size and not (np.diff(self.boundaries) > 0).all():
            raise ValidationError("boundaries must be strictly increasing")


@dataclass
class SegScore:
    """Boundary detection quality, all fields in percent."""

    precision: float
    recall: float
    f1: float
    r_value: float


def normalize_utterance(features: FeatureSequence) -> FeatureSequence:
    """Standardize each channel across the utterance (population variance).

    Constant channels map to all-zeros through the variance floor.
    """
    if features.num_frames < 2:
        raise TooShortError(
            f"normalization needs >= 2 frames, got {features.num_frames}"
        )
    data = features.data.astype(np.float64)
    mean = data.mean(axis=0)
    var = data.var(axis=0)
    scaled = (data - mean) / np.sqrt(np.maximum(var, VARIANCE_FLOOR))
    return FeatureSequence(
        utterance_id=features.utterance_id,
        layer=features.layer,
        frame_shift_s=features.frame_shift_s,
        data=scaled,
    )


def _adjacent_dissimilarity(data: np.ndarray, metric: str) -> np.ndarray:
    if metric == METRIC_EUCLIDEAN:
        return np.linalg.norm(np.diff(data.astype(np.float64), axis=0), axis=1)
    if metric == METRIC_COSINE:
        x = data.astype(np.float64)
        norms = np.linalg.norm(x, axis=1)
        dots = (x[1:] * x[:-1]).sum(axis=1)
        denom = norms[1:] * norms[:-1]
        out = np.zeros(x.shape[0] - 1)
        ok = denom > 0
        out[ok] = 1.0 - dots[ok] / denom[ok]
        # zero-norm frames (all-constant channels) carry no direction: distance 0
        return np.clip(out, 0.0, 2.0)
    raise ValidationError(f"unknown metric {metric!r}")


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at edges."""
    if window < 1 or window % 2 == 0:
        raise ValidationError(f"window must be odd and >= 1, got {window}")
    if window == 1:
        return values.astype(np.float64).copy()
    n = values.size
    half = (window - 1) // 2
    idx = np.arange(n)
    radius = np.minimum(half, np.minimum(idx, n - 1 - idx))
    csum = np.concatenate(([0.0], np.cumsum(values, dtype=np.float64)))
    return (csum[idx + radius + 1] - csum[idx - radius]) / (2 * radius + 1)


def dissimilarity_curve(
    normalized: FeatureSequence, metric: str, window: int
) -> DissimilarityCurve:
    """Smoothed adjacent-frame dissimilarity of a normalized utterance."""
    if normalized.num_frames < 2:
        raise TooShortError("dissimilarity needs >= 2 frames")
    raw = _adjacent_dissimilarity(normalized.data, metric)
    return DissimilarityCurve(
        values=moving_average(raw, window),
        metric=metric,
        window=window,
        frame_shift_s=normalized.frame_shift_s,
    )


def peak_prominences(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interior local maxima and their prominences.

    A plateau of equal values counts once, collapsed to its center index
    (round-half-to-even). The prominence is the peak height minus the
    higher of the two base levels; each base level is the curve minimum
    between the peak and the nearest strictly higher sample on that side,
    or the signal edge.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    peaks = []
    proms = []
    i = 1
    while i < n - 1:
        if v[i] <= v[i - 1]:
            i += 1
            continue
        # run of equal values starting at i
        j = i
        while j + 1 < n and v[j + 1] == v[i]:
            j += 1
        if j >= n - 1 or v[j + 1] >= v[i]:
            i = j + 1
            continue
        center = round((i + j) / 2)
        height = v[i]

        left_min = height
        k = i - 1
        while k >= 0 and v[k] <= height:
            if v[k] < left_min:
                left_min = v[k]
            k -= 1
        right_min = height
        k = j + 1
        while k < n and v[k] <= height:
            if v[k] < right_min:
                right_min = v[k]
            k += 1

        peaks.append(center)
        proms.append(height - max(left_min, right_min))
        i = j + 1
    return np.array(peaks, dtype=np.int64), np.array(proms, dtype=np.float64)


def detect_peaks(curve: DissimilarityCurve, prominence_threshold: float) -> SegHypothesis:
    """Boundaries at (t+1) * frame_shift for peaks with prominence > threshold."""
    if not prominence_threshold > 0:
        raise ValidationError(f"prominence threshold must be > 0, got {prominence_threshold}")
    idx, prom = peak_prominences(curve.values)
    keep = idx[prom > prominence_threshold]
    return SegHypothesis(boundaries=(keep + 1) * curve.frame_shift_s)


def segment_utterance(
    features: FeatureSequence, metric: str, window: int, prominence: float
) -> SegHypothesis:
    """Full pipeline: normalize, dissimilarity, smooth, pick peaks."""
    curve = dissimilarity_curve(normalize_utterance(features), metric, window)
    return detect_peaks(curve, prominence)


# ---------------------------------------------------------------------------
# Boundary scoring
# ---------------------------------------------------------------------------


def reference_boundaries(spans: list[WordSpan]) -> np.ndarray:
    """Interior word boundary times from one utterance's aligned spans.

    Duplicate times from abutting words collapse; the utterance-initial and
    utterance-final boundaries are excluded.
    """
    if not spans:
        return np.empty(0, dtype=np.float64)
    times = np.unique(
        np.array([s.start_s for s in spans] + [s.end_s for s in spans], dtype=np.float64)
    )
    return times[1:-1]


def match_count(hyp_times, ref_times, tolerance_s: float = DEFAULT_TOLERANCE_S) -> int:
    """Greedy one-to-one matches within tolerance, closest pairs first.

    The comparison allows 1 ns of slack so boundaries exactly one frame
    apart are not rejected by float representation error.
    """
    hyp = np.asarray(hyp_times, dtype=np.float64)
    ref = np.asarray(ref_times, dtype=np.float64)
    if hyp.size == 0 or ref.size == 0:
        return 0
    candidates = []
    for i, h in enumerate(hyp):
        deltas = np.abs(ref - h)
        for j in np.flatnonzero(deltas <= tolerance_s + 1e-9):
            candidates.append((deltas[j], i, int(j)))
    candidates.sort()
    used_h = set()
    used_r = set()
    matches = 0
    for _, i, j in candidates:
        if i in used_h or j in used_r:
            continue
        used_h.add(i)
        used_r.add(j)
        matches += 1
    return matches


def rvalue(precision_pct: float, recall_pct: float) -> float:
    """R-value from precision/recall percentages, clipped below at 0.

    Over-segmentation OS = recall/precision - 1; with no matches at all
    (P = R = 0), OS is taken as 0.
    """
    p = precision_pct / 100.0
    r = recall_pct / 100.0
    if p == 0.0:
        os_rate = 0.0 if r == 0.0 else float("inf")
    else:
        os_rate = r / p - 1.0
    r1 = np.hypot(1.0 - r, os_rate)
    r2 = (-os_rate + r - 1.0) / np.sqrt(2.0)
    value = 100.0 * (1.0 - (abs(r1) + abs(r2)) / 2.0)
    return float(max(value, 0.0))


def score_from_counts(n_match: int, n_hyp: int, n_ref: int) -> SegScore:
    precision = 100.0 * n_match / n_hyp if n_hyp else 0.0
    recall = 100.0 * n_match / n_ref if n_ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SegScore(precision=precision, recall=recall, f1=f1,
                    r_value=rvalue(precision, recall))


def evaluate_boundaries(
    hyp: SegHypothesis | np.ndarray,
    ref_times,
    tolerance_s: float = DEFAULT_TOLERANCE_S,
) -> SegScore:
    """Score one hypothesis against interior reference boundaries."""
    hyp_times = hyp.boundaries if isinstance(hyp, SegHypothesis) else np.asarray(hyp)
    n_match = match_count(hyp_times, ref_times, tolerance_s)
    return score_from_counts(n_match, len(hyp_times), len(np.asarray(ref_times)))


# ---------------------------------------------------------------------------
# Corpus evaluation and grid search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SegConfig:
    metric: str
    window: int
    prominence: float


@dataclass
class GridCell:
    config: SegConfig
    score: SegScore
    n_match: int
    n_hyp: int
    n_ref: int


def evaluate_layer(
    store: FeatureStore,
    spans: list[WordSpan],
    layer: int,
    config: SegConfig,
    tolerance_s: float = DEFAULT_TOLERANCE_S,
) -> SegScore:
    """Micro-averaged boundary score of one config on one layer."""
    cells = grid_search_layer(
        store, spans, layer,
        metrics=(config.metric,), windows=(config.window,),
        prominences=(config.prominence,), tolerance_s=tolerance_s,
    )[1]
    return cells[0].score


def grid_search_layer(
    store: FeatureStore,
    spans: list[WordSpan],
    layer: int,
    metrics=METRICS,
    windows=DEFAULT_WINDOWS,
    prominences=DEFAULT_PROMINENCES,
    tolerance_s: float = DEFAULT_TOLERANCE_S,
) -> tuple[GridCell, list[GridCell]]:
    """Exhaustive grid evaluation on one layer; returns (best, all cells).

    Counts are aggregated over utterances before computing scores. The best
    cell maximizes F1 with deterministic tie-breaking: smaller window, then
    smaller threshold, then euclidean before cosine.
    """
    prominences = [float(p) for p in prominences]
    for w in windows:
        if w < 1 or w % 2 == 0:
            raise ValidationError(f"window must be odd and >= 1, got {w}")

    grouped = spans_by_utterance(spans)
    utterances = [u for u in store.utterances() if u in grouped]
    if not utterances:
        raise ValidationError("no utterances shared between manifest and alignments")

    counts = {
        SegConfig(m, w, p): [0, 0, 0]
        for m in metrics for w in windows for p in prominences
    }
    for utt in utterances:
        feats = store.load(utt, layer)
        if feats.num_frames < 2:
            log.warning("skipping %s (only %d frame)", utt, feats.num_frames)
            continue
        ref = reference_boundaries(grouped[utt])
        normalized = normalize_utterance(feats)
        for metric in metrics:
            raw = _adjacent_dissimilarity(normalized.data, metric)
            for window in windows:
                smoothed = moving_average(raw, window)
                idx, prom = peak_prominences(smoothed)
                times = (idx + 1) * feats.frame_shift_s
                for p in prominences:
                    sel = times[prom > p]
                    c = counts[SegConfig(metric, window, p)]
                    c[0] += match_count(sel, ref, tolerance_s)
                    c[1] += sel.size
                    c[2] += ref.size

    cells = [
        GridCell(config=cfg, score=score_from_counts(*c),
                 n_match=c[0], n_hyp=c[1], n_ref=c[2])
        for cfg, c in counts.items()
    ]
    metric_order = {m: k for k, m in enumerate(METRICS)}
    cells.sort(key=lambda cell: (
        -cell.score.f1,
        cell.config.window,
        cell.config.prominence,
        metric_order.get(cell.config.metric, 99),
    ))
    return cells[0], cells
