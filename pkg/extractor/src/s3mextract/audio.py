"""WAV loading with the normalization the extractors expect."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import scipy.io.wavfile
import scipy.signal

log = logging.getLogger(__name__)

_INT_SCALE = {np.int16: 32768.0, np.int32: 2147483648.0}


def load_wav(path, target_rate: int = 16000) -> np.ndarray:
    """Mono float32 samples in [-1, 1] at the target rate.

    Multi-channel audio is downmixed and off-rate audio resampled, each
    with a logged warning.
    """
    rate, samples = scipy.io.wavfile.read(path)
    if samples.ndim == 2:
        log.warning("%s: downmixing %d channels to mono", path, samples.shape[1])
        samples = samples.mean(axis=1)
    scale = _INT_SCALE.get(samples.dtype.type)
    samples = samples.astype(np.float64)
    if scale:
        samples = samples / scale
    if rate != target_rate:
        log.warning("%s: resampling %d Hz -> %d Hz", path, rate, target_rate)
        samples = scipy.signal.resample_poly(samples, target_rate, rate)
    if samples.size == 0:
        raise ValueError(f"{path}: empty audio")
    return samples.astype(np.float32)


def utterance_id(path) -> str:
    return Path(path).stem
