"""16 kHz mono PCM WAV reading for inference input."""

import wave
from pathlib import Path

import numpy as np

from .errors import AudioReadFailure

SAMPLE_RATE_HZ = 16_000


def read_wav_16k_mono(path: str | Path) -> np.ndarray:
    """Decode one clip to float64 samples in [-1, 1).

    Inference input is pinned to the detector's canonical form: 16 kHz,
    one channel, 16-bit PCM. Anything else is a per-clip failure the
    caller reports rather than silently resampling.
    """
    try:
        with wave.open(str(path), "rb") as reader:
            channels = reader.getnchannels()
            rate = reader.getframerate()
            width = reader.getsampwidth()
            n = reader.getnframes()
            frames = reader.readframes(n)
    except (OSError, wave.Error) as exc:
        raise AudioReadFailure(f"{path}: {exc}") from exc
    if channels != 1:
        raise AudioReadFailure(f"{path}: expected mono, got {channels} channels")
    if rate != SAMPLE_RATE_HZ:
        raise AudioReadFailure(f"{path}: expected {SAMPLE_RATE_HZ} Hz, got {rate}")
    if width != 2:
        raise AudioReadFailure(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    if n == 0:
        raise AudioReadFailure(f"{path}: empty audio stream")
    return np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
