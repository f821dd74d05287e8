import numpy as np

from s3mextract.extract import ExtractionJob, extract
from s3mextract.fbank import FRAME_SHIFT_S, N_MELS, log_mel_spectrogram, mel_filterbank

from s3mprobe.featurestore import FeatureStore
from conftest import write_wav


class TestLogMel:
    def test_two_seconds_gives_two_hundred_frames(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-0.5, 0.5, size=32000).astype(np.float32)
        mat = log_mel_spectrogram(samples, 16000)
        assert mat.shape == (200, N_MELS)

    def test_silence_is_finite(self):
        mat = log_mel_spectrogram(np.zeros(16000, dtype=np.float32), 16000)
        assert np.isfinite(mat).all()
        assert np.allclose(mat, np.log(1e-10))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        samples = rng.uniform(-0.5, 0.5, size=8000).astype(np.float32)
        a = log_mel_spectrogram(samples)
        b = log_mel_spectrogram(samples)
        assert a.tobytes() == b.tobytes()

    def test_filterbank_shape_and_coverage(self):
        bank = mel_filterbank(N_MELS, 512, 16000)
        assert bank.shape == (N_MELS, 257)
        assert (bank >= 0).all()
        assert (bank.sum(axis=1) > 0).all()  # every filter has support

    def test_energy_moves_with_frequency(self):
        t = np.arange(16000) / 16000
        low = log_mel_spectrogram(np.sin(2 * np.pi * 200 * t))
        high = log_mel_spectrogram(np.sin(2 * np.pi * 4000 * t))
        assert low[10].argmax() < high[10].argmax()


class TestFbankJob:
    def test_fbank_stream_round_trip(self, tmp_path):
        wav = write_wav(tmp_path / "clip.wav", seconds=2.0)
        job = ExtractionJob(model="fbank", audio_files=[wav],
                            output_dir=tmp_path / "out")
        manifest, failures = extract(job)
        assert failures == []
        store = FeatureStore(manifest)
        seq = store.load("clip", 0)
        assert seq.num_frames == 200
        assert seq.dim == N_MELS
        assert seq.frame_shift_s == FRAME_SHIFT_S

    def test_rerun_identical_files(self, tmp_path):
        wav = write_wav(tmp_path / "clip.wav", seconds=1.0)
        paths = []
        for name in ("a", "b"):
            job = ExtractionJob(model="fbank", audio_files=[wav],
                                output_dir=tmp_path / name)
            extract(job)
            paths.append((tmp_path / name / "feats" / "clip_fbank.s3mf").read_bytes())
        assert paths[0] == paths[1]

    def test_silent_audio_ok(self, tmp_path):
        wav = write_wav(tmp_path / "quiet.wav", seconds=1.0, silent=True)
        job = ExtractionJob(model="fbank", audio_files=[wav],
                            output_dir=tmp_path / "out")
        manifest, failures = extract(job)
        assert failures == []
        seq = FeatureStore(manifest).load("quiet", 0)
        assert np.isfinite(seq.data).all()
