"""On-disk formats and sampled views for the analysis toolkit.

Defines the binary feature-file format ("S3MF"), JSON-lines manifests,
alignment CSVs and attribute-table TSVs, plus the word-instance sampler
every analysis consumes.

S3MF layout (all integers little-endian):

    magic    4 bytes  b"S3MF"
    version  u16      1
    dtype    u8       0 (float32, little-endian)
    reserved u8
    rows     u64      number of frames T
    cols     u32      feature dimension D
    shift    u32/u32  frame shift in seconds as numerator/denominator
    payload  rows*cols float32, row-major
"""

from __future__ import annotations

import csv
import json
import logging
import random
import string
import struct
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    DataError,
    FormatError,
    TruncationError,
    ValidationError,
)

log = logging.getLogger(__name__)

MAGIC = b"S3MF"
VERSION = 1
DTYPE_F32 = 0

# magic, version, dtype, reserved, rows, cols, shift numerator, shift denominator
_HEADER = struct.Struct("<4sHBBQIII")

ATTRIBUTE_NAMES = ("word_id", "agwe", "ptb_pos", "semcor")
_PROB_TABLES = ("ptb_pos", "semcor")

_STRIP_CHARS = string.punctuation + string.whitespace


def normalize_word(raw: str) -> str:
    """Canonical orthography: case-folded, surrounding punctuation removed."""
    return raw.strip(_STRIP_CHARS).casefold()


@dataclass
class FeatureSequence:
    """T x D float32 matrix of frame vectors for one utterance and layer."""

    utterance_id: str
    layer: int
    frame_shift_s: float
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DataError(f"feature matrix must be at least 1x1, got {self.data.shape}")
        if self.layer < 0:
            raise DataError(f"layer must be >= 0, got {self.layer}")
        if not self.frame_shift_s > 0:
            raise DataError(f"frame_shift_s must be > 0, got {self.frame_shift_s}")
        if not np.isfinite(self.data).all():
            raise DataError(f"non-finite values in features for {self.utterance_id!r}")

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.num_frames * self.frame_shift_s


@dataclass(frozen=True)
class WordSpan:
    """One word occurrence with start/end times inside an utterance."""

    utterance_id: str
    word: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.word:
            raise ValidationError(f"empty word in {self.utterance_id!r}")
        if not (0.0 <= self.start_s < self.end_s):
            raise ValidationError(
                f"invalid span [{self.start_s}, {self.end_s}] for "
                f"{self.word!r} in {self.utterance_id!r}"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass
class SegmentSample:
    """A sampled word occurrence; `pooled` is filled by the pooling module."""

    span: WordSpan
    layer: int | None = None
    pooled: np.ndarray | None = None

    @property
    def word(self) -> str:
        return self.span.word

    @property
    def utterance_id(self) -> str:
        return self.span.utterance_id


@dataclass
class AttributeTable:
    """word -> attribute vector map for one linguistic property."""

    name: str
    dim: int
    rows: dict[str, np.ndarray]

    def __post_init__(self):
        if self.name not in ATTRIBUTE_NAMES:
            raise ValidationError(
                f"unknown attribute table {self.name!r}, expected one of {ATTRIBUTE_NAMES}"
            )
        for word, vec in self.rows.items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (self.dim,):
                raise ValidationError(
                    f"attribute vector for {word!r} has length {vec.shape}, expected {self.dim}"
                )
            if not np.isfinite(vec).all():
                raise DataError(f"non-finite attribute vector for {word!r}")
            if self.name in _PROB_TABLES:
                if (vec < 0).any() or abs(vec.sum() - 1.0) > 1e-6:
                    raise ValidationError(
                        f"{self.name} vector for {word!r} is not a probability "
                        f"distribution (sum={vec.sum():.8f})"
                    )
            if self.name == "word_id":
                if not (np.count_nonzero(vec) == 1 and np.isclose(vec.max(), 1.0)):
                    raise ValidationError(f"word_id vector for {word!r} is not one-hot")
            self.rows[word] = vec

    def __contains__(self, word: str) -> bool:
        return word in self.rows

    def __len__(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# S3MF feature files
# ---------------------------------------------------------------------------


def _shift_to_fraction(shift_s: float) -> Fraction:
    frac = Fraction(shift_s).limit_denominator(1_000_000)
    if frac.numerator < 1 or frac.numerator > 0xFFFFFFFF or frac.denominator > 0xFFFFFFFF:
        raise DataError(f"frame shift {shift_s} not representable as u32/u32")
    return frac


def write_feature_file(path, seq: FeatureSequence) -> None:
    """Write one FeatureSequence in S3MF format (bit-exact round trip)."""
    frac = _shift_to_fraction(seq.frame_shift_s)
    rows, cols = seq.data.shape
    header = _HEADER.pack(
        MAGIC, VERSION, DTYPE_F32, 0, rows, cols, frac.numerator, frac.denominator
    )
    payload = np.ascontiguousarray(seq.data, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_feature_file(path, utterance_id: str = "", layer: int = 0) -> FeatureSequence:
    """Read an S3MF file; utterance/layer metadata come from the manifest."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise TruncationError(f"{path}: header truncated ({len(head)} bytes)")
        magic, version, dtype, _reserved, rows, cols, num, den = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if dtype != DTYPE_F32:
            raise FormatError(f"{path}: unsupported dtype code {dtype}")
        if rows < 1 or cols < 1:
            raise FormatError(f"{path}: invalid dimensions {rows}x{cols}")
        if num < 1 or den < 1:
            raise FormatError(f"{path}: invalid frame shift {num}/{den}")
        expected = rows * cols * 4
        raw = fh.read(expected)
        if len(raw) < expected:
            raise TruncationError(
                f"{path}: payload truncated ({len(raw)} of {expected} bytes)"
            )
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after payload")
    data = np.frombuffer(raw, dtype="<f4").reshape(rows, cols)
    if not np.isfinite(data).all():
        raise DataError(f"{path}: non-finite values in payload")
    return FeatureSequence(
        utterance_id=utterance_id,
        layer=layer,
        frame_shift_s=num / den,
        data=data.copy(),
    )


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    layer: int
    path: str  # relative to the manifest's directory


def write_manifest(path, entries) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            fh.write(
                json.dumps(
                    {"utterance_id": e.utterance_id, "layer": e.layer, "path": e.path},
                    sort_keys=True,
                )
                + "\n"
            )


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            try:
                entries.append(
                    ManifestEntry(
                        utterance_id=str(rec["utterance_id"]),
                        layer=int(rec["layer"]),
                        path=str(rec["path"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad manifest record ({exc})") from exc
    return entries


class FeatureStore:
    """Random access to the feature files listed in one manifest.

    Read-only after construction; safe for concurrent readers.
    """

    def __init__(self, manifest_path):
        self.manifest_path = Path(manifest_path)
        self.root = self.manifest_path.parent
        self._index: dict[tuple[str, int], Path] = {}
        for e in read_manifest(self.manifest_path):
            key = (e.utterance_id, e.layer)
            if key in self._index:
                raise FormatError(
                    f"{manifest_path}: duplicate manifest entry for {key}"
                )
            self._index[key] = self.root / e.path

    def layers(self) -> list[int]:
        return sorted({layer for _, layer in self._index})

    def utterances(self) -> list[str]:
        return sorted({utt for utt, _ in self._index})

    def __contains__(self, key: tuple[str, int]) -> bool:
        return key in self._index

    def path(self, utterance_id: str, layer: int) -> Path:
        try:
            return self._index[(utterance_id, layer)]
        except KeyError:
            raise KeyError(
                f"no manifest entry for utterance {utterance_id!r} layer {layer}"
            ) from None

    def load(self, utterance_id: str, layer: int) -> FeatureSequence:
        return read_feature_file(self.path(utterance_id, layer), utterance_id, layer)


# ---------------------------------------------------------------------------
# Alignments
# ---------------------------------------------------------------------------

_ALIGNMENT_COLUMNS = ["utterance_id", "word", "start_s", "end_s"]


def load_alignments(path) -> list[WordSpan]:
    """Load word alignments from CSV, sorted by (utterance_id, start_s).

    Words are case-folded and stripped of surrounding punctuation.
    Overlapping spans within one utterance are rejected.
    """
    spans: list[WordSpan] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty alignment file") from None
        if [h.strip() for h in header] != _ALIGNMENT_COLUMNS:
            raise FormatError(
                f"{path}: expected columns {_ALIGNMENT_COLUMNS}, got {header}"
            )
        for lineno, row in enumerate(reader, 2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            utt, raw_word, start_txt, end_txt = row
            try:
                start_s = float(start_txt)
                end_s = float(end_txt)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad time value ({exc})") from exc
            word = normalize_word(raw_word)
            if not word:
                raise ValidationError(
                    f"{path}:{lineno}: word {raw_word!r} empty after normalization"
                )
            try:
                spans.append(WordSpan(utt, word, start_s, end_s))
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None

    spans.sort(key=lambda s: (s.utterance_id, s.start_s, s.end_s))
    prev = None
    for s in spans:
        if prev is not None and s.utterance_id == prev.utterance_id:
            if s.start_s < prev.end_s:
                raise ValidationError(
                    f"{path}: overlapping spans in {s.utterance_id!r}: "
                    f"{prev.word!r} ends {prev.end_s} after {s.word!r} starts {s.start_s}"
                )
        prev = s
    return spans


def spans_by_utterance(spans) -> dict[str, list[WordSpan]]:
    grouped: dict[str, list[WordSpan]] = defaultdict(list)
    for s in spans:
        grouped[s.utterance_id].append(s)
    for utt in grouped:
        grouped[utt].sort(key=lambda s: s.start_s)
    return dict(grouped)


# ---------------------------------------------------------------------------
# Attribute tables
# ---------------------------------------------------------------------------


def load_attribute_table(path, name: str) -> AttributeTable:
    """Load a TSV attribute table: word, then `dim` reals per line."""
    rows: dict[str, np.ndarray] = {}
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise FormatError(f"{path}:{lineno}: expected word + values")
            word = normalize_word(fields[0])
            if not word:
                raise ValidationError(f"{path}:{lineno}: empty word")
            try:
                vec = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad value ({exc})") from exc
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise FormatError(
                    f"{path}:{lineno}: vector length {vec.size} != {dim}"
                )
            if word in rows:
                raise ValidationError(f"{path}:{lineno}: duplicate word {word!r}")
            rows[word] = vec
    if not rows:
        raise FormatError(f"{path}: no rows")
    return AttributeTable(name=name, dim=dim, rows=rows)


def build_prob_attribute_table(tag_counts, tag_order, name="ptb_pos"):
    """Empirical tag distributions per word from (word, tag) -> count.

    Each row is count(word, tag) / total(word), in `tag_order` coordinates.
    Returns the table and the list of words excluded for zero total count.
    """
    order = list(tag_order)
    index = {tag: i for i, tag in enumerate(order)}
    if len(index) != len(order):
        raise ValidationError("tag_order contains duplicates")

    totals: Counter = Counter()
    per_word: dict[str, np.ndarray] = {}
    for (word, tag), count in tag_counts.items():
        if tag not in index:
            raise ValidationError(f"tag {tag!r} not in tag_order")
        if count < 0:
            raise ValidationError(f"negative count for ({word!r}, {tag!r})")
        vec = per_word.setdefault(word, np.zeros(len(order), dtype=np.float64))
        vec[index[tag]] += count
        totals[word] += count

    rows = {}
    skipped = []
    for word in sorted(per_word):
        total = totals[word]
        if total <= 0:
            skipped.append(word)
            continue
        rows[word] = per_word[word] / total
    if skipped:
        log.warning("build_prob_attribute_table: skipped %d zero-count words", len(skipped))
    return AttributeTable(name=name, dim=len(order), rows=rows), skipped


def build_onehot_table(vocab) -> AttributeTable:
    """One-hot word-identity vectors over a fixed vocabulary."""
    words = sorted(set(vocab))
    dim = len(words)
    rows = {}
    for i, word in enumerate(words):
        vec = np.zeros(dim, dtype=np.float64)
        vec[i] = 1.0
        rows[word] = vec
    return AttributeTable(name="word_id", dim=dim, rows=rows)


# ---------------------------------------------------------------------------
# Word-instance sampling
# ---------------------------------------------------------------------------


def sample_word_instances(
    spans,
    vocab_size: int,
    max_instances: int = 20,
    duration_range: tuple[float, float] | None = None,
    seed: int = 0,
) -> list[SegmentSample]:
    """Sample up to `max_instances` occurrences of the `vocab_size` most
    frequent words.

    The vocabulary is chosen by corpus frequency with lexicographic
    tie-breaking; per-word instances are drawn uniformly without
    replacement. Deterministic for a fixed seed.
    """
    if vocab_size < 1:
        raise ConfigurationError(f"vocab_size must be >= 1, got {vocab_size}")
    if max_instances < 1:
        raise ConfigurationError(f"max_instances must be >= 1, got {max_instances}")

    pool = list(spans)
    if duration_range is not None:
        lo, hi = duration_range
        pool = [s for s in pool if lo <= s.duration_s <= hi]

    counts = Counter(s.word for s in pool)
    if len(counts) < vocab_size:
        raise ConfigurationError(
            f"only {len(counts)} distinct words available, need {vocab_size}"
        )
    vocab = [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]
    vocab = set(vocab[:vocab_size])

    by_word: dict[str, list[WordSpan]] = defaultdict(list)
    for s in pool:
        if s.word in vocab:
            by_word[s.word].append(s)

    rng = random.Random(seed)
    chosen: list[WordSpan] = []
    for word in sorted(by_word):
        instances = sorted(by_word[word], key=lambda s: (s.utterance_id, s.start_s))
        if len(instances) > max_instances:
            instances = [instances[i] for i in sorted(rng.sample(range(len(instances)), max_instances))]
        chosen.extend(instances)

    chosen.sort(key=lambda s: (s.utterance_id, s.start_s, s.word))
    return [SegmentSample(span=s) for s in chosen]
