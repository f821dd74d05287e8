import numpy as np
import pytest
import scipy.io.wavfile
import torch
from transformers import Wav2Vec2Config, Wav2Vec2Model


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """A small randomly initialized checkpoint with the standard 20 ms
    convolutional frontend (stride product 320 at 16 kHz)."""
    path = tmp_path_factory.mktemp("ckpt") / "tiny-w2v2"
    torch.manual_seed(0)
    config = Wav2Vec2Config(
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        conv_dim=(8, 8, 8, 8, 8, 8, 8),
        num_feat_extract_layers=7,
        conv_stride=(5, 2, 2, 2, 2, 2, 2),
        conv_kernel=(10, 3, 3, 3, 3, 2, 2),
        vocab_size=32,
    )
    model = Wav2Vec2Model(config)
    model.save_pretrained(path)
    return path


def write_wav(path, seconds=1.0, rate=16000, freq=440.0, silent=False, stereo=False):
    t = np.arange(int(round(seconds * rate))) / rate
    wave = np.zeros_like(t) if silent else 0.4 * np.sin(2 * np.pi * freq * t)
    samples = (wave * 32767).astype(np.int16)
    if stereo:
        samples = np.stack([samples, samples], axis=1)
    scipy.io.wavfile.write(path, rate, samples)
    return path


@pytest.fixture(scope="session")
def wav_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("wavs")
    write_wav(root / "one_second.wav", seconds=1.0)
    write_wav(root / "two_seconds.wav", seconds=2.0, freq=330.0)
    return root
