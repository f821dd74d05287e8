"""Acoustic word discrimination: pairwise dissimilarities scored by
same/different average precision.

Two dissimilarities: cosine distance between pooled segment vectors, and a
path-length-normalized dynamic time warping distance over frame-level
cosine costs. Average precision ranks same-word pairs pessimistically at
equal distance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    UndefinedMetricError,
    ValidationError,
)
from .featurestore import FeatureStore, SegmentSample
from .pooling import PoolingSpec, frames_in_span, pool_samples

log = logging.getLogger(__name__)

MODE_POOL = "pool"
MODE_DTW = "dtw"


@dataclass(frozen=True)
class ScoredPair:
    """One segment pair with its dissimilarity and same-word label."""

    i: int
    j: int
    distance: float
    same: bool

    def __post_init__(self):
        if not self.i < self.j:
            raise ValidationError(f"pair indices must satisfy i < j, got ({self.i}, {self.j})")
        if not (math.isfinite(self.distance) and self.distance >= 0):
            raise ValidationError(f"invalid distance {self.distance}")


def cosine_distance(u, v) -> float:
    """1 - cos(u, v) in [0, 2].

    Computed as half the squared distance of the normalized vectors, so
    identical inputs score exactly 0.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateInputError("cosine distance of a zero vector is undefined")
    diff = u / nu - v / nv
    return min(0.5 * float(np.dot(diff, diff)), 2.0)


def frame_cost_matrix(a, b) -> np.ndarray:
    """Cosine distances between every frame of `a` and every frame of `b`.

    Uses the normalized-difference form of the scalar cosine_distance, so
    equal frames cost exactly 0 and a self-comparison warps along a
    zero-cost diagonal.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValidationError(f"incompatible frame matrices {a.shape} and {b.shape}")
    if a.shape[0] < 1 or b.shape[0] < 1:
        raise ValidationError("empty frame sequence")
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nb = np.linalg.norm(b, axis=1, keepdims=True)
    if (na == 0).any() or (nb == 0).any():
        raise DegenerateInputError("zero-norm frame in DTW input")
    an = a / na
    bn = b / nb
    t1, t2 = an.shape[0], bn.shape[0]
    cost = np.empty((t1, t2), dtype=np.float64)
    block = max(1, 2_000_000 // max(1, t2 * an.shape[1]))
    for i0 in range(0, t1, block):
        diff = an[i0:i0 + block, None, :] - bn[None, :, :]
        cost[i0:i0 + block] = 0.5 * np.einsum("ijk,ijk->ij", diff, diff)
    np.clip(cost, 0.0, 2.0, out=cost)
    return cost


def _dtw_from_costs(cost: np.ndarray) -> float:
    """Min-cost monotone path over the cost matrix, normalized by path length.

    Steps are (1,0), (0,1), (1,1), each adding the target cell's cost. Ties
    on accumulated cost break toward fewer steps, so the result is the
    lexicographic minimum over (cost, steps). Swept by anti-diagonals.
    """
    t1, t2 = cost.shape
    acc = np.empty((t1, t2), dtype=np.float64)
    steps = np.empty((t1, t2), dtype=np.int64)
    acc[0, 0] = cost[0, 0]
    steps[0, 0] = 0
    big = np.iinfo(np.int64).max
    for d in range(1, t1 + t2 - 1):
        i = np.arange(max(0, d - t2 + 1), min(d, t1 - 1) + 1)
        j = d - i
        m = len(i)
        cand_cost = np.full((3, m), np.inf)
        cand_steps = np.full((3, m), big, dtype=np.int64)
        up = i >= 1
        cand_cost[0, up] = acc[i[up] - 1, j[up]]
        cand_steps[0, up] = steps[i[up] - 1, j[up]]
        left = j >= 1
        cand_cost[1, left] = acc[i[left], j[left] - 1]
        cand_steps[1, left] = steps[i[left], j[left] - 1]
        diag = up & left
        cand_cost[2, diag] = acc[i[diag] - 1, j[diag] - 1]
        cand_steps[2, diag] = steps[i[diag] - 1, j[diag] - 1]

        best = cand_cost.min(axis=0)
        tied = np.where(cand_cost == best, cand_steps, big)
        acc[i, j] = best + cost[i, j]
        steps[i, j] = tied.min(axis=0) + 1
    return float(acc[-1, -1]) / float(steps[-1, -1] + 1)


def dtw_distance(a, b) -> float:
    """Dynamic time warping distance between two frame sequences."""
    return _dtw_from_costs(frame_cost_matrix(a, b))


def average_precision_arrays(distances, same) -> float:
    """Average precision of a distance ranking with same/different labels.

    Ascending distance order; at equal distance, same-pairs rank after
    different-pairs. AP is the mean of the precisions at each positive
    pair's rank, accumulated with exact summation.
    """
    distances = np.asarray(distances, dtype=np.float64)
    same = np.asarray(same, dtype=bool)
    if distances.shape != same.shape or distances.ndim != 1:
        raise ValidationError("distances and labels must be 1-D and aligned")
    n_pos = int(same.sum())
    n_neg = same.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"average precision needs both pair kinds, got {n_pos} same / {n_neg} different"
        )
    order = np.lexsort((same, distances))
    ranks = np.flatnonzero(same[order]) + 1          # 1-indexed ranks of positives
    precisions = np.arange(1, n_pos + 1, dtype=np.float64) / ranks
    return math.fsum(precisions.tolist()) / n_pos


def average_precision(pairs) -> float:
    """Average precision of a list of ScoredPair."""
    if not pairs:
        raise UndefinedMetricError("no pairs")
    d = np.array([p.distance for p in pairs], dtype=np.float64)
    s = np.array([p.same for p in pairs], dtype=bool)
    return average_precision_arrays(d, s)


# ---------------------------------------------------------------------------
# Layer runs
# ---------------------------------------------------------------------------


@dataclass
class AwdLayerResult:
    layer: int
    ap: float
    n_segments: int
    n_pairs: int


def pooled_pair_arrays(pooled: np.ndarray, codes: np.ndarray, block: int = 1024):
    """All C(n,2) cosine distances and same-labels, computed block-wise."""
    n = pooled.shape[0]
    norms = np.linalg.norm(pooled, axis=1)
    if (norms == 0).any():
        raise DegenerateInputError("zero-norm pooled segment vector")
    total = n * (n - 1) // 2
    dist = np.empty(total, dtype=np.float64)
    same = np.empty(total, dtype=bool)
    pos = 0
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        grams = pooled[i0:i1] @ pooled.T
        for r in range(i0, i1):
            row = grams[r - i0, r + 1:]
            m = row.size
            if m == 0:
                continue
            dist[pos:pos + m] = 1.0 - row / (norms[r] * norms[r + 1:])
            same[pos:pos + m] = codes[r + 1:] == codes[r]
            pos += m
    np.clip(dist, 0.0, 2.0, out=dist)
    return dist, same


def _segment_matrices(samples, store, layer):
    """Frame-matrix slice for each sample, loading each utterance once."""
    cache = {}
    out = []
    for s in samples:
        if s.utterance_id not in cache:
            cache[s.utterance_id] = store.load(s.utterance_id, layer)
        feats = cache[s.utterance_id]
        a, b = frames_in_span(s.span, feats.frame_shift_s, feats.num_frames)
        out.append(feats.data[a:b].astype(np.float64))
    return out


def awd_run(
    samples: list[SegmentSample],
    store: FeatureStore,
    mode: str,
    pooling_spec: PoolingSpec | None = None,
    duration_range: tuple[float, float] | None = (0.5, 2.0),
    layers=None,
) -> list[AwdLayerResult]:
    """Score all segment pairs per layer and return the AP for each layer.

    Pool mode compares pooled vectors by cosine distance (block-parallel
    pair kernel); dtw mode warps frame sequences and is quadratic in both
    segment count and length.
    """
    if mode not in (MODE_POOL, MODE_DTW):
        raise ValidationError(f"unknown awd mode {mode!r}")
    if mode == MODE_POOL and pooling_spec is None:
        raise ValidationError("pool mode requires a pooling spec")

    if duration_range is not None:
        lo, hi = duration_range
        samples = [s for s in samples if lo <= s.span.duration_s <= hi]
    if len(samples) < 2:
        raise InsufficientDataError(
            f"need >= 2 segments after duration filtering, got {len(samples)}"
        )

    word_index = {w: k for k, w in enumerate(sorted({s.word for s in samples}))}
    codes = np.array([word_index[s.word] for s in samples], dtype=np.int64)
    if layers is None:
        layers = store.layers()

    results = []
    for layer in layers:
        if mode == MODE_POOL:
            filled = pool_samples(samples, store, layer, pooling_spec)
            pooled = np.stack([s.pooled for s in filled])
            dist, same = pooled_pair_arrays(pooled, codes)
        else:
            mats = _segment_matrices(samples, store, layer)
            n = len(mats)
            total = n * (n - 1) // 2
            dist = np.empty(total, dtype=np.float64)
            same = np.empty(total, dtype=bool)
            pos = 0
            for i in range(n):
                for j in range(i + 1, n):
                    dist[pos] = dtw_distance(mats[i], mats[j])
                    same[pos] = codes[i] == codes[j]
                    pos += 1
        ap = average_precision_arrays(dist, same)
        results.append(AwdLayerResult(layer=layer, ap=ap,
                                      n_segments=len(samples), n_pairs=dist.size))
        log.info("awd %s layer %d: ap=%.4f over %d pairs", mode, layer, ap, dist.size)
    return results
