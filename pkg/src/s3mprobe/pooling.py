"""Fixed-dimensional segment vectors from frame-level features.

Three strategies: mean over the whole span, mean over one of four quarter
partitions, or a single frame at one of five equidistant locations
(endpoints inclusive, starting at the first frame). Every index derived
from a real uses round-half-to-even.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, replace

import numpy as np

from .errors import OutOfRangeError, ValidationError
from .featurestore import FeatureSequence, FeatureStore, SegmentSample, WordSpan

MEAN_FULL = "mean_full"
QUARTER = "quarter"
SINGLE_FRAME = "single_frame"

# absorbs float error in time/shift divisions so analytic spans map exactly
_EPS = 1e-9


@dataclass(frozen=True)
class PoolingSpec:
    """kind is mean_full, quarter (index 1..4), or single_frame (index 0..4)."""

    kind: str
    index: int = 0

    def __post_init__(self):
        if self.kind == MEAN_FULL:
            return
        if self.kind == QUARTER:
            if not 1 <= self.index <= 4:
                raise ValidationError(f"quarter index must be in 1..4, got {self.index}")
        elif self.kind == SINGLE_FRAME:
            if not 0 <= self.index <= 4:
                raise ValidationError(f"frame location must be in 0..4, got {self.index}")
        else:
            raise ValidationError(f"unknown pooling kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "PoolingSpec":
        """Parse the CLI form: mean | q1..q4 | f0..f4."""
        text = text.strip().lower()
        if text in ("mean", MEAN_FULL):
            return cls(MEAN_FULL)
        if len(text) == 2 and text[0] == "q" and text[1].isdigit():
            return cls(QUARTER, int(text[1]))
        if len(text) == 2 and text[0] == "f" and text[1].isdigit():
            return cls(SINGLE_FRAME, int(text[1]))
        raise ValidationError(f"cannot parse pooling spec {text!r}")

    @property
    def label(self) -> str:
        if self.kind == MEAN_FULL:
            return "mean"
        if self.kind == QUARTER:
            return f"q{self.index}"
        return f"f{self.index}"


def frames_in_span(span: WordSpan, frame_shift_s: float, num_frames: int) -> tuple[int, int]:
    """Map a time span to the half-open frame range [a, b).

    a = floor(start/shift), b = min(T, ceil(end/shift)), widened to at
    least one frame. Raises if the span starts at or after frame T.
    """
    a = int(math.floor(span.start_s / frame_shift_s + _EPS))
    b = int(math.ceil(span.end_s / frame_shift_s - _EPS))
    b = min(num_frames, b)
    if b <= a:
        b = a + 1
    if a >= num_frames:
        raise OutOfRangeError(
            f"span [{span.start_s}, {span.end_s}] of {span.word!r} starts beyond "
            f"{num_frames} frames at shift {frame_shift_s}"
        )
    return a, b


def quarter_ranges(a: int, b: int) -> list[tuple[int, int]]:
    """The four quarter sub-ranges of [a, b), each clamped to >= 1 frame.

    Boundaries sit at a + round(k*(b-a)/4); for spans of >= 4 frames they
    partition [a, b) exactly.
    """
    length = b - a
    cuts = [a + round(k * length / 4) for k in range(5)]
    ranges = []
    for q in range(1, 5):
        lo = min(cuts[q - 1], b - 1)
        hi = max(cuts[q], lo + 1)
        ranges.append((lo, hi))
    return ranges


def pool(features: FeatureSequence, a: int, b: int, spec: PoolingSpec) -> np.ndarray:
    """Pool rows [a, b) of the feature matrix according to `spec`."""
    data = features.data
    if not 0 <= a < b <= data.shape[0]:
        raise OutOfRangeError(f"range [{a}, {b}) invalid for {data.shape[0]} frames")
    if spec.kind == MEAN_FULL:
        return data[a:b].mean(axis=0, dtype=np.float64)
    if spec.kind == QUARTER:
        lo, hi = quarter_ranges(a, b)[spec.index - 1]
        return data[lo:hi].mean(axis=0, dtype=np.float64)
    idx = a + round(spec.index * (b - a - 1) / 4)
    return data[idx].astype(np.float64)


def pool_span(features: FeatureSequence, span: WordSpan, spec: PoolingSpec) -> np.ndarray:
    a, b = frames_in_span(span, features.frame_shift_s, features.num_frames)
    return pool(features, a, b, spec)


def utterance_vector(features: FeatureSequence) -> np.ndarray:
    """Mean over all frames; the whole-utterance representation."""
    return features.data.mean(axis=0, dtype=np.float64)


def pool_samples(
    samples: list[SegmentSample],
    store: FeatureStore,
    layer: int,
    spec: PoolingSpec,
) -> list[SegmentSample]:
    """Fill pooled vectors for one layer, loading each utterance once.

    Returns new SegmentSample objects; the inputs are left untouched.
    """
    by_utt: dict[str, list[int]] = defaultdict(list)
    for i, s in enumerate(samples):
        by_utt[s.utterance_id].append(i)

    out: list[SegmentSample | None] = [None] * len(samples)
    for utt in sorted(by_utt):
        feats = store.load(utt, layer)
        for i in by_utt[utt]:
            vec = pool_span(feats, samples[i].span, spec)
            out[i] = replace(samples[i], layer=layer, pooled=vec)
    return list(out)
