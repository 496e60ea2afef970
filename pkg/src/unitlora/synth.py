"""Deterministic synthetic bilingual corpus for end-to-end checks.

Two "languages" occupy disjoint spectral bands; each has 8 pseudo-phones
built from a tone, a weak harmonic, and band-limited noise. Utterances
are random pseudo-phone sequences (no immediate repeats) with 50-200 ms
segments, so ground-truth frame labels and reference phone sequences are
known exactly and can back purity and unit-error-rate oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import CANONICAL_RATE, save_wav
from .corpus import CorpusManifest, ManifestEntry, write_manifest
from .units import write_units
from .util import derive_rng

PHONES_PER_LANG = 8
LANGS = ("alpha", "beta")

# Carrier tones per language; the two languages never overlap in band
# (alpha below 3.5 kHz, beta above 4.2 kHz). Each language pairs every
# carrier with a steady and an amplitude-modulated pseudo-phone, so half
# the phone contrasts are invisible to a single analysis frame and only
# resolvable from temporal context.
_CARRIERS = {
    "alpha": (420.0, 900.0, 1800.0, 3300.0),
    "beta": (4300.0, 5300.0, 6400.0, 7700.0),
}

_AM_RATE_HZ = 10.0
_AM_DEPTH = 0.85

_FRAME_WIN = 400
_FRAME_SHIFT = 160

# Weak within-segment spectral jitter on top of the tonal structure.
_NOISE_AMP = 0.03


def phone_offset(lang: str) -> int:
    return LANGS.index(lang) * PHONES_PER_LANG


def _band_noise(n: int, low_hz: float, high_hz: float, rng: np.random.Generator) -> np.ndarray:
    """White noise restricted to [low_hz, high_hz] via FFT masking, unit std."""
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, d=1.0 / CANONICAL_RATE)
    spec[(freqs < low_hz) | (freqs > high_hz)] = 0.0
    noise = np.fft.irfft(spec, n)
    std = noise.std()
    return noise / std if std > 0 else noise


def _phone_segment(lang: str, phone: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Phone = carrier index (phone mod 4) x steady/modulated (phone div 4)."""
    t = np.arange(n) / CANONICAL_RATE
    f0 = _CARRIERS[lang][phone % 4]
    seg = 0.55 * np.sin(2.0 * np.pi * f0 * t + rng.uniform(0.0, 2.0 * np.pi))
    if 2.0 * f0 < 0.48 * CANONICAL_RATE:
        seg += 0.22 * np.sin(2.0 * np.pi * 2.0 * f0 * t + rng.uniform(0.0, 2.0 * np.pi))
    seg += _NOISE_AMP * _band_noise(n, 0.9 * f0, min(1.1 * f0, 7900.0), rng)
    if phone >= 4:
        am_phase = rng.uniform(0.0, 2.0 * np.pi)
        seg *= 1.0 - 0.5 * _AM_DEPTH * (1.0 + np.cos(2.0 * np.pi * _AM_RATE_HZ * t + am_phase))
    ramp = min(80, n // 4)  # 5 ms fade against clicks
    env = np.ones(n)
    env[:ramp] = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
    env[-ramp:] = env[:ramp][::-1]
    seg *= env
    peak = np.abs(seg).max()
    if peak > 0.95:
        seg *= 0.95 / peak
    return seg


@dataclass
class SynthUtterance:
    utt_id: str
    lang: str
    samples: np.ndarray
    frame_labels: np.ndarray  # global phone id per 10 ms frame
    phone_seq: np.ndarray  # global phone ids, one per segment


def gen_utterance(lang: str, utt_id: str, rng: np.random.Generator) -> SynthUtterance:
    n_segments = int(rng.integers(6, 13))
    phones = []
    prev = -1
    for _ in range(n_segments):
        phone = int(rng.integers(PHONES_PER_LANG))
        while phone == prev:
            phone = int(rng.integers(PHONES_PER_LANG))
        phones.append(phone)
        prev = phone
    pieces = []
    sample_labels = []
    for phone in phones:
        dur = float(rng.uniform(0.05, 0.2))
        n = int(round(dur * CANONICAL_RATE))
        pieces.append(_phone_segment(lang, phone, n, rng))
        sample_labels.append(np.full(n, phone_offset(lang) + phone, dtype=np.int64))
    samples = np.concatenate(pieces)
    labels = np.concatenate(sample_labels)
    n_frames = (samples.size - _FRAME_WIN) // _FRAME_SHIFT + 1
    centers = np.arange(n_frames) * _FRAME_SHIFT + _FRAME_WIN // 2
    frame_labels = labels[centers]
    return SynthUtterance(
        utt_id=utt_id,
        lang=lang,
        samples=samples,
        frame_labels=frame_labels,
        phone_seq=np.array([phone_offset(lang) + p for p in phones], dtype=np.int64),
    )


def generate_corpus(
    out_dir: str | Path,
    seed: int,
    n_train: int = 40,
    n_test: int = 12,
) -> dict:
    """Write the bilingual corpus under out_dir.

    Produces wav/, one manifest per (language, split), frame-level
    ground-truth labels (labels.tsv) and reference phone sequences
    (ref_units.tsv) in the unit-file format.
    """
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    manifests: dict[str, str] = {}
    all_labels = []
    all_refs = []
    for lang in LANGS:
        for split, count in (("train", n_train), ("test", n_test)):
            entries = []
            for idx in range(count):
                utt_id = f"{lang}_{split}_{idx:04d}"
                utt = gen_utterance(lang, utt_id, derive_rng(seed, "synth", lang, split, idx))
                wav_path = out_dir / "wav" / f"{utt_id}.wav"
                save_wav(wav_path, utt.samples)
                entries.append(
                    ManifestEntry(
                        utt_id=utt_id,
                        path=str(wav_path),
                        lang=lang,
                        duration_sec=utt.samples.size / CANONICAL_RATE,
                    )
                )
                all_labels.append((utt_id, utt.frame_labels))
                all_refs.append((utt_id, utt.phone_seq))
            manifest_path = out_dir / f"manifest_{lang}_{split}.tsv"
            write_manifest(manifest_path, CorpusManifest(entries))
            manifests[f"{lang}_{split}"] = str(manifest_path)
    write_units(out_dir / "labels.tsv", all_labels)
    write_units(out_dir / "ref_units.tsv", all_refs)
    return {
        "manifests": manifests,
        "labels": str(out_dir / "labels.tsv"),
        "ref_units": str(out_dir / "ref_units.tsv"),
    }
