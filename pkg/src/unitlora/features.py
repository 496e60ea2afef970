"""39-dimensional MFCC frontend and the FEAT binary container.

Recipe: 25 ms Hamming windows every 10 ms, 512-point FFT, 26 triangular
mel filters (0..Nyquist), log with a 1e-10 floor, orthonormal DCT-II
keeping 13 cepstra (c0 included), plus delta and delta-delta over a
+/-2 frame regression window with edge replication. No pre-emphasis,
no liftering, no cepstral mean normalization: the output is a
deterministic function of the input bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .audio import AudioBuffer
from .util import check_finite

FEATURE_KINDS = ("mfcc39", "hidden")
MFCC_DIM = 39

_FEAT_MAGIC = b"FEAT"


@dataclass
class MfccConfig:
    window_ms: float = 25.0
    shift_ms: float = 10.0
    n_mels: int = 26
    n_ceps: int = 13
    delta_window: int = 2
    n_fft: int = 512
    log_floor: float = 1e-10

    def window_samples(self, rate: int) -> int:
        return int(round(self.window_ms * rate / 1000.0))

    def shift_samples(self, rate: int) -> int:
        return int(round(self.shift_ms * rate / 1000.0))


@dataclass
class FeatureMatrix:
    """Time-major frame features: rows are frames, columns are dimensions."""

    data: np.ndarray
    frame_shift_ms: float = 10.0
    feature_kind: str = "mfcc39"

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("feature data must be a 2-D [frames x dims] matrix")
        if self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.feature_kind!r}")
        if self.feature_kind == "mfcc39" and self.data.shape[1] != MFCC_DIM:
            raise ValueError(
                f"mfcc39 features must have {MFCC_DIM} dims, got {self.data.shape[1]}"
            )
        if self.frame_shift_ms <= 0:
            raise ValueError("frame shift must be positive")
        check_finite("feature matrix", self.data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, rate: int) -> np.ndarray:
    """Triangular filters on FFT bins, band edges equally spaced in mel."""
    low_mel = hz_to_mel(0.0)
    high_mel = hz_to_mel(rate / 2.0)
    mel_points = np.linspace(low_mel, high_mel, n_mels + 2)
    bins = np.floor((n_fft + 1) * mel_to_hz(mel_points) / rate).astype(int)
    fbank = np.zeros((n_mels, n_fft // 2 + 1))
    for m in range(n_mels):
        left, center, right = bins[m], bins[m + 1], bins[m + 2]
        for k in range(left, center):
            fbank[m, k] = (k - left) / (center - left)
        for k in range(center, right):
            fbank[m, k] = (right - k) / (right - center)
    return fbank


def delta(static: np.ndarray, window: int) -> np.ndarray:
    """Regression deltas over +/-window frames with edge replication."""
    T = static.shape[0]
    denom = 2.0 * sum(n * n for n in range(1, window + 1))
    padded = np.concatenate(
        [np.repeat(static[:1], window, axis=0), static, np.repeat(static[-1:], window, axis=0)]
    )
    out = np.zeros_like(static)
    for n in range(1, window + 1):
        out += n * (padded[window + n : window + n + T] - padded[window - n : window - n + T])
    return out / denom


def mfcc39(audio: AudioBuffer, cfg: MfccConfig | None = None) -> FeatureMatrix:
    """Compute 13 static + 13 delta + 13 delta-delta MFCCs per frame."""
    cfg = cfg or MfccConfig()
    rate = audio.sample_rate_hz
    win = cfg.window_samples(rate)
    shift = cfg.shift_samples(rate)
    x = audio.samples
    if x.size < win:
        raise ValueError(
            f"audio too short: {x.size} samples, at least one {win}-sample window required"
        )
    n_frames = (x.size - win) // shift + 1

    idx = np.arange(win)[None, :] + shift * np.arange(n_frames)[:, None]
    frames = x[idx] * np.hamming(win)
    power = np.abs(np.fft.rfft(frames, cfg.n_fft)) ** 2
    fbank = mel_filterbank(cfg.n_mels, cfg.n_fft, rate)
    mel_energy = np.maximum(power @ fbank.T, cfg.log_floor)
    static = dct(np.log(mel_energy), type=2, axis=1, norm="ortho")[:, : cfg.n_ceps]

    d1 = delta(static, cfg.delta_window)
    d2 = delta(d1, cfg.delta_window)
    data = np.concatenate([static, d1, d2], axis=1)
    return FeatureMatrix(data=data, frame_shift_ms=cfg.shift_ms, feature_kind="mfcc39")


def write_feat(path: str | Path, feats: FeatureMatrix) -> None:
    """FEAT container: magic "FEAT", u32 T, u32 D, f32 LE row-major data."""
    data = feats.data.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_FEAT_MAGIC)
        fh.write(struct.pack("<II", feats.n_frames, feats.dim))
        fh.write(data.tobytes())


def read_feat(path: str | Path, frame_shift_ms: float = 10.0) -> FeatureMatrix:
    raw = Path(path).read_bytes()
    if raw[:4] != _FEAT_MAGIC:
        raise ValueError(f"not a FEAT file: {path}")
    n_frames, dim = struct.unpack("<II", raw[4:12])
    data = np.frombuffer(raw[12:], dtype="<f4")
    if data.size != n_frames * dim:
        raise ValueError(f"truncated FEAT file: {path}")
    kind = "mfcc39" if dim == MFCC_DIM else "hidden"
    return FeatureMatrix(
        data=data.reshape(n_frames, dim).astype(np.float64),
        frame_shift_ms=frame_shift_ms,
        feature_kind=kind,
    )
