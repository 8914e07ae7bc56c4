"""Shared fixtures: tones, an independent WAV writer, a stub codec."""

from __future__ import annotations

import struct
import sys
import wave

import numpy as np
import pytest

from voicedet import AudioClip
from voicedet.launder import EncoderConfig

SR = 16000


def make_tone(freq_hz: float, n: int, sr: int = SR, amp: float = 1.0) -> np.ndarray:
    return amp * np.sin(2.0 * np.pi * freq_hz * np.arange(n) / sr)


@pytest.fixture
def tone_clip() -> AudioClip:
    return AudioClip("tone", make_tone(440.0, SR, amp=0.8), SR)


def independent_wav_bytes(samples: np.ndarray, sr: int, sampwidth: int = 2) -> bytes:
    """Reference WAV writer built on the stdlib ``wave`` module.

    Kept separate from the package's own encoder so decoder tests do
    not validate the codec against itself.
    """
    x = np.asarray(samples, dtype=np.float64)
    full = float(1 << (8 * sampwidth - 1))
    q = np.clip(np.round(x * full), -full, full - 1).astype(np.int64)
    if sampwidth == 1:
        frames = (q + 128).astype(np.uint8).tobytes()
    elif sampwidth == 2:
        frames = q.astype("<i2").tobytes()
    elif sampwidth == 3:
        u = (q & 0xFFFFFF).astype(np.uint32)
        b = np.empty((len(q), 3), dtype=np.uint8)
        b[:, 0] = u & 0xFF
        b[:, 1] = (u >> 8) & 0xFF
        b[:, 2] = (u >> 16) & 0xFF
        frames = b.tobytes()
    else:
        frames = q.astype("<i4").tobytes()

    import io

    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(sampwidth)
        wf.setframerate(sr)
        wf.writeframes(frames)
    return buf.getvalue()


def independent_stereo_wav_bytes(
    left: np.ndarray, right: np.ndarray, sr: int
) -> bytes:
    """Two-channel 16-bit WAV via the stdlib writer."""
    import io

    interleaved = np.empty(2 * len(left), dtype="<i2")
    interleaved[0::2] = np.clip(np.round(left * 32768.0), -32768, 32767).astype("<i2")
    interleaved[1::2] = np.clip(np.round(right * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(2)
        wf.setsampwidth(2)
        wf.setframerate(sr)
        wf.writeframes(interleaved.tobytes())
    return buf.getvalue()


def float32_wav_bytes(samples: np.ndarray, sr: int) -> bytes:
    """Hand-rolled IEEE-float WAV (the stdlib writer is PCM-only)."""
    payload = np.asarray(samples, dtype="<f4").tobytes()
    fmt = struct.pack("<HHIIHH", 3, 1, sr, sr * 4, 4, 32)
    body = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body


_STUB_CODEC = """\
import shutil, sys
# args: <mode> <in> <out> [bitrate]  -- byte-for-byte pass-through
shutil.copyfile(sys.argv[2], sys.argv[3])
"""


@pytest.fixture
def stub_encoder(tmp_path) -> EncoderConfig:
    """Pass-through 'codec' honoring the command-template contract."""
    script = tmp_path / "stub_codec.py"
    script.write_text(_STUB_CODEC, encoding="utf-8")
    py = sys.executable
    return EncoderConfig(
        encode_template=f"{py} {script} enc {{in}} {{out}} {{bitrate}}",
        decode_template=f"{py} {script} dec {{in}} {{out}}",
        suffix=".m4a",
    )
