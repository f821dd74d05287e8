"""Log-Mel filter-bank frontend for the baseline feature stream.

80 triangular mel filters over a 25 ms Hann-windowed power spectrum at a
10 ms hop. Frame count is ceil(samples / hop): the signal is right-padded
so the nominal rate arithmetic holds exactly (2.0 s at 10 ms -> 200
frames). Power is floored before the log, so silence stays finite.
"""

from __future__ import annotations

import numpy as np

N_MELS = 80
FRAME_SHIFT_S = 0.01
WINDOW_S = 0.025
POWER_FLOOR = 1e-10


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, rate: int) -> np.ndarray:
    """Triangular filters (n_mels x n_fft//2+1) between 0 Hz and Nyquist."""
    freqs = np.linspace(0.0, rate / 2.0, n_fft // 2 + 1)
    mel_points = np.linspace(_hz_to_mel(0.0), _hz_to_mel(rate / 2.0), n_mels + 2)
    hz_points = _mel_to_hz(mel_points)
    bank = np.zeros((n_mels, freqs.size))
    for m in range(n_mels):
        lo, center, hi = hz_points[m:m + 3]
        up = (freqs - lo) / max(center - lo, 1e-12)
        down = (hi - freqs) / max(hi - center, 1e-12)
        bank[m] = np.maximum(0.0, np.minimum(up, down))
    return bank


def log_mel_spectrogram(samples: np.ndarray, rate: int = 16000) -> np.ndarray:
    """T x 80 float32 log-Mel energies, T = ceil(len(samples) / hop)."""
    samples = np.asarray(samples, dtype=np.float64)
    hop = int(round(rate * FRAME_SHIFT_S))
    win = int(round(rate * WINDOW_S))
    n_frames = max(1, int(np.ceil(samples.size / hop)))
    padded = np.zeros((n_frames - 1) * hop + win)
    padded[:samples.size] = samples

    n_fft = 1 << (win - 1).bit_length()
    window = np.hanning(win)
    frames = np.stack([padded[i * hop:i * hop + win] * window for i in range(n_frames)])
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    bank = mel_filterbank(N_MELS, n_fft, rate)
    mel = power @ bank.T
    return np.log(np.maximum(mel, POWER_FLOOR)).astype(np.float32)
