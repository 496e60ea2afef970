"""Corpus manifests (TSV) and duration-parity sampling."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class CorpusError(ValueError):
    pass


@dataclass
class ManifestEntry:
    utt_id: str
    path: str
    lang: str
    duration_sec: float


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry]

    def __post_init__(self) -> None:
        ids = [e.utt_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise CorpusError("duplicate utt_ids in manifest")
        for e in self.entries:
            if e.duration_sec <= 0:
                raise CorpusError(f"non-positive duration for {e.utt_id}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total_duration(self) -> float:
        return sum(e.duration_sec for e in self.entries)

    @property
    def languages(self) -> list[str]:
        seen: list[str] = []
        for e in self.entries:
            if e.lang not in seen:
                seen.append(e.lang)
        return seen

    def filter_lang(self, lang: str) -> "CorpusManifest":
        return CorpusManifest([e for e in self.entries if e.lang == lang])

    def to_tsv(self) -> str:
        return "".join(
            f"{e.utt_id}\t{e.path}\t{e.lang}\t{e.duration_sec:.6f}\n" for e in self.entries
        )


def write_manifest(path: str | Path, manifest: CorpusManifest) -> None:
    Path(path).write_text(manifest.to_tsv(), encoding="utf-8")


def read_manifest(path: str | Path) -> CorpusManifest:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such manifest: {path}")
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise CorpusError(f"{path}:{lineno}: expected 4 tab-separated fields")
        entries.append(
            ManifestEntry(
                utt_id=parts[0], path=parts[1], lang=parts[2], duration_sec=float(parts[3])
            )
        )
    return CorpusManifest(entries)


def parity_sample(
    manifest: CorpusManifest, target_seconds: float, rng: np.random.Generator
) -> list[ManifestEntry]:
    """Shuffled utterances until the running duration reaches the target.

    Overshoot is bounded by one utterance, so sampling the same target
    from two corpora keeps their durations within one utterance of each
    other.
    """
    if manifest.total_duration < target_seconds:
        raise CorpusError(
            f"corpus too short: {manifest.total_duration:.1f}s available, "
            f"{target_seconds:.1f}s requested"
        )
    order = rng.permutation(len(manifest.entries))
    picked: list[ManifestEntry] = []
    total = 0.0
    for idx in order:
        if total >= target_seconds:
            break
        entry = manifest.entries[int(idx)]
        picked.append(entry)
        total += entry.duration_sec
    return picked
