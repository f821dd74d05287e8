"""Feature extraction from pretrained speech checkpoints into S3MF dumps."""

__version__ = "0.1.0"

from .extract import ExtractionJob, IntegrityError, extract  # noqa: F401
from .fbank import log_mel_spectrogram  # noqa: F401
from .s3mf import write_manifest, write_s3mf  # noqa: F401
