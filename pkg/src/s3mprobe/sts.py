"""Spoken sentence similarity scored against gold judgments.

Each sentence side has one rendition per speaker; the predicted similarity
of a pair is the mean cosine similarity over all speaker combinations of
mean-pooled utterance vectors. Rankings are compared to gold scores with
Spearman's rho (average ranks for ties). A transcript word-overlap
baseline (Dice coefficient over word-type sets) is included.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    FormatError,
    InsufficientDataError,
    UndefinedMetricError,
    ValidationError,
)
from .featurestore import FeatureStore, normalize_word
from .pooling import utterance_vector

log = logging.getLogger(__name__)


@dataclass
class SentencePair:
    """One gold-scored sentence pair with per-speaker utterance renditions."""

    pair_id: str
    gold_score: float
    side_a: list[str]
    side_b: list[str]
    transcript_a: str | None = None
    transcript_b: str | None = None

    def __post_init__(self):
        if not self.side_a or not self.side_b:
            raise ValidationError(f"pair {self.pair_id!r} has an empty side")
        if not math.isfinite(self.gold_score):
            raise ValidationError(f"pair {self.pair_id!r} has non-finite gold score")


def load_sts_pairs(path) -> list[SentencePair]:
    """Gold file TSV: pair_id, gold_score, side-A refs, side-B refs,
    then optional transcripts. Utterance references are comma-separated."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (4, 6):
                raise FormatError(
                    f"{path}:{lineno}: expected 4 or 6 tab-separated fields, got {len(fields)}"
                )
            try:
                gold = float(fields[1])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad gold score ({exc})") from exc
            side_a = [u.strip() for u in fields[2].split(",") if u.strip()]
            side_b = [u.strip() for u in fields[3].split(",") if u.strip()]
            transcripts = (fields[4], fields[5]) if len(fields) == 6 else (None, None)
            try:
                pairs.append(SentencePair(fields[0], gold, side_a, side_b, *transcripts))
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return pairs


def _cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v)) / (nu * nv)


def pair_similarity(vectors_a: list[np.ndarray], vectors_b: list[np.ndarray]) -> float:
    """Mean cosine similarity over all |A| x |B| speaker combinations."""
    if not vectors_a or not vectors_b:
        raise ValidationError("both sides need at least one rendition vector")
    sims = [_cosine_similarity(u, v) for u in vectors_a for v in vectors_b]
    return float(np.mean(sims))


def pair_similarity_from_store(
    pair: SentencePair, store: FeatureStore, layer: int
) -> float:
    """Pair similarity from mean-pooled utterance vectors of one layer.

    Raises KeyError when a rendition has no features for the layer.
    """
    va = [utterance_vector(store.load(u, layer)) for u in pair.side_a]
    vb = [utterance_vector(store.load(u, layer)) for u in pair.side_b]
    return pair_similarity(va, vb)


def _ranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based); ties receive the mean of their rank range."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(predicted, gold) -> float:
    """Spearman's rho: Pearson correlation of average ranks."""
    x = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(gold, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("inputs must be 1-D and the same length")
    if x.size < 3:
        raise InsufficientDataError(f"need >= 3 values, got {x.size}")
    rx = _ranks(x)
    ry = _ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(np.dot(dx, dx))
    sy = float(np.dot(dy, dy))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedMetricError("zero variance in a ranking")
    return float(np.dot(dx, dy)) / math.sqrt(sx * sy)


def text_overlap_baseline(pair: SentencePair) -> float:
    """Dice overlap 2|A&B| / (|A|+|B|) over case-folded word-type sets."""
    if pair.transcript_a is None or pair.transcript_b is None:
        raise ValidationError(f"pair {pair.pair_id!r} has no transcripts")
    set_a = {normalize_word(w) for w in pair.transcript_a.split()} - {""}
    set_b = {normalize_word(w) for w in pair.transcript_b.split()} - {""}
    if not set_a or not set_b:
        log.warning("pair %s: empty transcript in text baseline", pair.pair_id)
        return 0.0
    return 2 * len(set_a & set_b) / (len(set_a) + len(set_b))


@dataclass
class StsRow:
    stream: str
    layer: int
    rho: float
    n_pairs: int
    n_skipped: int


def layer_spearman(
    pairs: list[SentencePair], store: FeatureStore, layer: int
) -> tuple[float, int, int]:
    """Spearman's rho of one layer; pairs with missing features are skipped."""
    predicted = []
    gold = []
    skipped = 0
    for pair in pairs:
        try:
            predicted.append(pair_similarity_from_store(pair, store, layer))
        except KeyError as exc:
            log.warning("skipping pair %s on layer %d: %s", pair.pair_id, layer, exc)
            skipped += 1
            continue
        gold.append(pair.gold_score)
    if len(predicted) < 3:
        raise InsufficientDataError(
            f"only {len(predicted)} scored pairs on layer {layer}"
        )
    return spearman(predicted, gold), len(predicted), skipped


def sts_run(
    pairs: list[SentencePair],
    streams: dict[str, tuple[FeatureStore, list[int]]],
    text_baseline: bool = True,
) -> list[StsRow]:
    """Per-layer rho for every feature stream, plus the text baseline row.

    `streams` maps a stream name (the model, an fbank baseline, a summary
    token dump) to its feature store and the layers to score.
    """
    rows = []
    for name in sorted(streams):
        store, layers = streams[name]
        for layer in layers:
            rho, n_used, skipped = layer_spearman(pairs, store, layer)
            rows.append(StsRow(stream=name, layer=layer, rho=rho,
                               n_pairs=n_used, n_skipped=skipped))
    if text_baseline:
        scored = [(text_overlap_baseline(p), p.gold_score)
                  for p in pairs if p.transcript_a is not None and p.transcript_b is not None]
        if len(scored) >= 3:
            rho = spearman([s for s, _ in scored], [g for _, g in scored])
            rows.append(StsRow(stream="text_overlap", layer=-1, rho=rho,
                               n_pairs=len(scored), n_skipped=len(pairs) - len(scored)))
        else:
            log.warning("text baseline skipped: %d pairs with transcripts", len(scored))
    return rows
