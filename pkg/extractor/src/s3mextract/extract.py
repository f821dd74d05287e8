"""Run pretrained checkpoints (or the filter-bank frontend) over audio and
dump per-layer frame features as S3MF files plus a manifest.

Layer numbering follows the model's hidden-state stack: 0 is the
local-feature output of the convolutional frontend, 1..N the transformer
layers. Hidden states are trimmed to the nominal frame count
ceil(samples / (rate * shift)) after right-padding the waveform, so every
layer of an utterance has the same T and the rate arithmetic
(1.0 s at 20 ms -> 50 frames) holds exactly.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import fbank
from .audio import load_wav, utterance_id
from .s3mf import manifest_record, write_manifest, write_s3mf

log = logging.getLogger(__name__)

FBANK_MODEL = "fbank"
_WEIGHT_FILES = ("model.safetensors", "pytorch_model.bin")


class IntegrityError(Exception):
    """Checkpoint bytes do not match the expected digest."""


@dataclass
class ExtractionJob:
    model: str                       # checkpoint path/id, or "fbank"
    audio_files: list
    output_dir: Path
    layers: str | list[int] = "all"  # "all" = transformer layers; "all+local" adds 0
    frame_shift_s: float = 0.02
    sample_rate: int = 16000
    expected_sha256: str | None = None

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        self.audio_files = [Path(p) for p in self.audio_files]
        if not self.audio_files:
            raise ValueError("no audio files given")
        if self.frame_shift_s <= 0:
            raise ValueError(f"frame shift must be > 0, got {self.frame_shift_s}")


def checkpoint_sha256(model_path) -> str | None:
    """Digest of the checkpoint weights file, when it exists locally."""
    root = Path(model_path)
    if not root.is_dir():
        return None
    for name in _WEIGHT_FILES:
        weights = root / name
        if weights.is_file():
            digest = hashlib.sha256()
            with open(weights, "rb") as fh:
                for chunk in iter(lambda: fh.read(1 << 20), b""):
                    digest.update(chunk)
            return digest.hexdigest()
    return None


def load_checkpoint(model_id: str):
    from transformers import AutoModel

    sha = checkpoint_sha256(model_id)
    model = AutoModel.from_pretrained(model_id)
    model.eval()
    return model, sha


def _conv_frames(config, n_samples: int) -> int:
    try:
        kernels = config.conv_kernel
        strides = config.conv_stride
    except AttributeError as exc:
        raise ValueError(
            f"model {config.model_type!r} does not expose a convolutional "
            "frontend (conv_kernel/conv_stride); cannot derive frame counts"
        ) from exc
    length = n_samples
    for k, s in zip(kernels, strides):
        length = (length - k) // s + 1
    return length


def nominal_frames(n_samples: int, rate: int, frame_shift_s: float) -> int:
    hop = round(rate * frame_shift_s)
    return -(-n_samples // hop)


def hidden_state_matrices(model, samples: np.ndarray, rate: int,
                          frame_shift_s: float) -> list[np.ndarray]:
    """One T x D float32 matrix per hidden state, all with identical T."""
    hop = round(rate * frame_shift_s)
    target = nominal_frames(samples.size, rate, frame_shift_s)
    pad = 0
    while _conv_frames(model.config, samples.size + pad) < target:
        pad += hop
        if pad > samples.size + 100 * hop:
            raise ValueError("cannot pad waveform to reach the nominal frame count")
    wave = torch.from_numpy(np.pad(samples, (0, pad))).to(torch.float32).unsqueeze(0)
    with torch.no_grad():
        out = model(wave, output_hidden_states=True)
    mats = []
    for state in out.hidden_states:
        mat = state[0].cpu().numpy()
        if mat.shape[0] < target:
            raise ValueError(
                f"model produced {mat.shape[0]} frames, expected >= {target}"
            )
        mats.append(np.ascontiguousarray(mat[:target], dtype=np.float32))
    return mats


def resolve_layers(spec, n_hidden_states: int) -> list[int]:
    """Layer list from "all", "all+local", or explicit indices."""
    n_transformer = n_hidden_states - 1
    if spec == "all":
        return list(range(1, n_transformer + 1))
    if spec == "all+local":
        return list(range(0, n_transformer + 1))
    layers = sorted({int(v) for v in spec})
    bad = [l for l in layers if not 0 <= l <= n_transformer]
    if bad:
        raise ValueError(f"layers {bad} outside 0..{n_transformer}")
    return layers


def extract(job: ExtractionJob):
    """Write S3MF files and a manifest; returns (manifest_path, failures).

    Unreadable audio fails that file only; a checkpoint digest mismatch
    aborts before any inference.
    """
    feat_dir = job.output_dir / "feats"
    feat_dir.mkdir(parents=True, exist_ok=True)

    if job.model == FBANK_MODEL:
        return _extract_fbank(job, feat_dir)

    model, sha = load_checkpoint(job.model)
    if job.expected_sha256 is not None:
        if sha is None:
            raise IntegrityError(f"no weights file found under {job.model} to verify")
        if sha != job.expected_sha256:
            raise IntegrityError(
                f"checkpoint digest mismatch: expected {job.expected_sha256}, got {sha}"
            )

    records = []
    failures = []
    layers = None
    for path in job.audio_files:
        utt = utterance_id(path)
        try:
            samples = load_wav(path, job.sample_rate)
            mats = hidden_state_matrices(model, samples, job.sample_rate,
                                         job.frame_shift_s)
            if layers is None:
                layers = resolve_layers(job.layers, len(mats))
            for layer in layers:
                fname = f"{utt}_l{layer}.s3mf"
                write_s3mf(feat_dir / fname, mats[layer], job.frame_shift_s)
                records.append(manifest_record(
                    utt, layer, f"feats/{fname}",
                    model=str(job.model), checkpoint_sha256=sha,
                    frame_shift_s=job.frame_shift_s,
                ))
        except IntegrityError:
            raise
        except Exception as exc:
            log.error("extraction failed for %s: %s", path, exc)
            failures.append({"audio": str(path), "error": str(exc)})

    manifest = job.output_dir / "manifest.jsonl"
    write_manifest(manifest, records)
    log.info("wrote %d records to %s (%d failures)", len(records), manifest,
             len(failures))
    return manifest, failures


def _extract_fbank(job: ExtractionJob, feat_dir: Path):
    records = []
    failures = []
    for path in job.audio_files:
        utt = utterance_id(path)
        try:
            samples = load_wav(path, job.sample_rate)
            mat = fbank.log_mel_spectrogram(samples, job.sample_rate)
            fname = f"{utt}_fbank.s3mf"
            write_s3mf(feat_dir / fname, mat, fbank.FRAME_SHIFT_S)
            records.append(manifest_record(
                utt, 0, f"feats/{fname}",
                model=FBANK_MODEL, frame_shift_s=fbank.FRAME_SHIFT_S,
            ))
        except Exception as exc:
            log.error("filter-bank extraction failed for %s: %s", path, exc)
            failures.append({"audio": str(path), "error": str(exc)})
    manifest = job.output_dir / "manifest.jsonl"
    write_manifest(manifest, records)
    return manifest, failures
