"""WAV ingestion: 16 kHz mono PCM-16 in, normalized float buffers out."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CANONICAL_RATE = 16000

# int16 full scale; load divides by this, save multiplies by 32767 so a
# round trip never clips.
_PCM_SCALE = 32768.0


class UnsupportedAudioError(ValueError):
    """The file exists but is not mono 16-bit PCM at 16 kHz."""


@dataclass
class AudioBuffer:
    """Normalized mono audio. Samples are float64 in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int = CANONICAL_RATE

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise UnsupportedAudioError("audio buffer must be single-channel (1-D)")
        if self.sample_rate_hz != CANONICAL_RATE:
            raise UnsupportedAudioError(
                f"unsupported sample rate {self.sample_rate_hz} Hz (expected {CANONICAL_RATE})"
            )
        if self.samples.size and not np.isfinite(self.samples).all():
            raise UnsupportedAudioError("audio contains non-finite samples")
        if self.samples.size and (np.abs(self.samples) > 1.0).any():
            raise UnsupportedAudioError("audio samples exceed [-1, 1]")

    @property
    def duration_sec(self) -> float:
        return self.samples.size / self.sample_rate_hz


def load_wav(path: str | Path) -> AudioBuffer:
    """Read a RIFF/WAVE file as an AudioBuffer.

    Accepts only PCM 16-bit little-endian, mono, 16 kHz. Each violation is
    reported with its own message; a missing file raises FileNotFoundError.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such audio file: {path}")
    try:
        with wave.open(str(path), "rb") as wav:
            if wav.getcomptype() != "NONE":
                raise UnsupportedAudioError(
                    f"unsupported encoding {wav.getcomptype()!r} in {path} (PCM required)"
                )
            if wav.getnchannels() != 1:
                raise UnsupportedAudioError(
                    f"multi-channel audio in {path} ({wav.getnchannels()} channels, mono required)"
                )
            if wav.getsampwidth() != 2:
                raise UnsupportedAudioError(
                    f"unsupported sample width {8 * wav.getsampwidth()} bit in {path} (16-bit required)"
                )
            if wav.getframerate() != CANONICAL_RATE:
                raise UnsupportedAudioError(
                    f"unsupported sample rate {wav.getframerate()} Hz in {path} "
                    f"(expected {CANONICAL_RATE})"
                )
            raw = wav.readframes(wav.getnframes())
    except wave.Error as exc:
        raise UnsupportedAudioError(f"not a readable PCM WAV file: {path} ({exc})") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM_SCALE
    return AudioBuffer(samples=samples)


def save_wav(path: str | Path, samples: np.ndarray, sample_rate_hz: int = CANONICAL_RATE) -> None:
    """Write float samples in [-1, 1] as mono 16-bit PCM."""
    pcm = np.round(np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0) * 32767.0)
    pcm = pcm.astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate_hz)
        wav.writeframes(pcm.tobytes())
