"""The `extract` command line."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .extract import ExtractionJob, IntegrityError, extract

log = logging.getLogger(__name__)


def _parse_layers(text: str):
    text = text.strip()
    if text in ("all", "all+local"):
        return text
    return [int(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Dump per-layer speech-model features (or a filter-bank "
                    "baseline stream) as S3MF files with a manifest",
    )
    parser.add_argument("--model", required=True,
                        help="checkpoint directory/id, or 'fbank' for the "
                             "log-Mel baseline stream")
    parser.add_argument("--audio", nargs="*", default=[], help="wav files")
    parser.add_argument("--audio-dir", default=None,
                        help="directory scanned for *.wav")
    parser.add_argument("--layers", default="all",
                        help="'all' (transformer layers), 'all+local' (adds the "
                             "conv-frontend output as layer 0), or comma indices")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--frame-shift", type=float, default=0.02,
                        help="declared feature frame shift in seconds")
    parser.add_argument("--sample-rate", type=int, default=16000)
    parser.add_argument("--expected-sha256", default=None,
                        help="abort unless the checkpoint weights match this digest")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)

    audio = [Path(p) for p in args.audio]
    if args.audio_dir:
        audio.extend(sorted(Path(args.audio_dir).glob("*.wav")))
    if not audio:
        log.error("no audio files (use --audio and/or --audio-dir)")
        return 2

    job = ExtractionJob(
        model=args.model,
        audio_files=audio,
        output_dir=Path(args.out),
        layers=_parse_layers(args.layers),
        frame_shift_s=args.frame_shift,
        sample_rate=args.sample_rate,
        expected_sha256=args.expected_sha256,
    )
    try:
        manifest, failures = extract(job)
    except (IntegrityError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2
    if failures:
        log.error("%d audio files failed", len(failures))
    print(manifest)
    if not manifest.read_text().strip():
        return 2
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
