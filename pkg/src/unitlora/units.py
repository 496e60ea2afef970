"""Discrete units: run-collapsed cluster indices, plus sequence comparison."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass
class UnitSequence:
    """De-duplicated unit sequence for one utterance."""

    units: np.ndarray
    source: str = ""

    def __post_init__(self) -> None:
        self.units = np.asarray(self.units, dtype=np.int64)
        if self.units.ndim != 1:
            raise ValueError("units must be a flat sequence")
        if self.units.size and self.units.min() < 0:
            raise ValueError("units must be non-negative")
        if self.units.size > 1 and (self.units[1:] == self.units[:-1]).any():
            raise ValueError("unit sequence contains consecutive duplicates")

    def __len__(self) -> int:
        return int(self.units.size)


def deduplicate(indices: Sequence[int] | np.ndarray, source: str = "") -> UnitSequence:
    """Collapse each maximal run of equal indices to a single unit."""
    arr = np.asarray(indices, dtype=np.int64)
    if arr.size == 0:
        return UnitSequence(units=arr, source=source)
    keep = np.concatenate([[True], arr[1:] != arr[:-1]])
    return UnitSequence(units=arr[keep], source=source)


def _units_of(seq) -> np.ndarray:
    if isinstance(seq, UnitSequence):
        return seq.units
    return np.asarray(seq, dtype=np.int64)


def unit_edit_distance(a, b) -> dict:
    """Levenshtein distance between unit sequences, unit costs 1.

    Returns the distance and the unit error rate normalized by the
    reference length (``b``): uer = distance / max(1, len(b)).
    """
    ua, ub = _units_of(a).tolist(), _units_of(b).tolist()
    n, m = len(ua), len(ub)
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ai = ua[i - 1]
        for j in range(1, m + 1):
            cur[j] = min(
                prev[j - 1] + (ai != ub[j - 1]),  # substitute (or match)
                prev[j] + 1,  # delete from a
                cur[j - 1] + 1,  # insert into a
            )
        prev = cur
    distance = prev[m]
    return {"distance": distance, "uer": distance / max(1, m)}


def write_units(path: str | Path, sequences: Sequence[UnitSequence | tuple]) -> None:
    """One utterance per line: "utt_id<TAB>u1 u2 u3 ..." in decimal.

    Accepts UnitSequence objects or (utt_id, indices) pairs; the latter
    allows frame-level (pre-dedup) reference dumps in the same format.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for item in sequences:
            if isinstance(item, UnitSequence):
                utt_id, values = item.source, item.units
            else:
                utt_id, values = item
            fh.write(f"{utt_id}\t{' '.join(str(int(u)) for u in np.asarray(values).ravel())}\n")


def read_units(path: str | Path) -> dict[str, np.ndarray]:
    """Parse a unit file into {utt_id: index array} (no dedup applied)."""
    out: dict[str, np.ndarray] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        utt_id, _, rest = line.partition("\t")
        values = np.array([int(tok) for tok in rest.split()], dtype=np.int64)
        out[utt_id] = values
    return out
