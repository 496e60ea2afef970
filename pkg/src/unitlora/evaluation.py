"""Unit-level quality and forgetting metrics, and the report CSV.

UER is the desk-scale stand-in for re-synthesis WER: hypothesis frame
assignments are mapped into the reference label space by frame-level
majority co-occurrence (the usual many-to-one protocol, since cluster
ids are arbitrary), then both sides are de-duplicated and compared with
Levenshtein distance, normalized by total reference length.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusManifest
from .features import FeatureMatrix
from .kmeans import Codebook, assign
from .model import EncoderModel, make_span_mask, masked_prediction_logits
from .pipeline import corpus_features, hidden_frames
from .units import deduplicate, unit_edit_distance
from .util import derive_rng

REPORT_HEADER = ("system", "lang", "uer", "masked_acc", "purity")


def cluster_purity(assignments: np.ndarray, reference_labels: np.ndarray) -> float:
    """Sum over clusters of their majority-label count, over total frames."""
    assignments = np.asarray(assignments, dtype=np.int64)
    reference_labels = np.asarray(reference_labels, dtype=np.int64)
    if assignments.shape != reference_labels.shape:
        raise ValueError(
            f"length mismatch: {assignments.shape[0]} assignments vs "
            f"{reference_labels.shape[0]} labels"
        )
    if assignments.size == 0:
        raise ValueError("empty assignment sequence")
    total = 0
    for cluster in np.unique(assignments):
        _, counts = np.unique(reference_labels[assignments == cluster], return_counts=True)
        total += counts.max()
    return total / assignments.size


def majority_map(hyp: np.ndarray, ref: np.ndarray) -> dict[int, int]:
    """Many-to-one map hyp cluster -> most co-occurring reference label.

    Ties break toward the lowest reference label, so the map is a pure
    function of the frame pairs.
    """
    hyp = np.asarray(hyp, dtype=np.int64)
    ref = np.asarray(ref, dtype=np.int64)
    if hyp.shape != ref.shape:
        raise ValueError("hypothesis/reference frame counts differ")
    mapping: dict[int, int] = {}
    for cluster in np.unique(hyp):
        labels, counts = np.unique(ref[hyp == cluster], return_counts=True)
        mapping[int(cluster)] = int(labels[np.argmax(counts)])
    return mapping


@dataclass
class EvalRow:
    system: str
    lang: str
    uer: float = math.nan
    masked_acc: float = math.nan
    purity: float = math.nan


@dataclass
class EvalReport:
    rows: list[EvalRow]
    forgetting_delta: float | None = None
    forgetting_lang: str | None = None
    param_summary: dict | None = None

    def uer(self, lang: str) -> float:
        for row in self.rows:
            if row.lang == lang:
                return row.uer
        raise KeyError(lang)

    def row(self, lang: str) -> EvalRow:
        for row in self.rows:
            if row.lang == lang:
                return row
        raise KeyError(lang)


def _system_assignments(
    model: EncoderModel,
    adapters,
    codebook: Codebook,
    feats_map: dict[str, FeatureMatrix],
    utt_ids: list[str],
) -> dict[str, np.ndarray]:
    if codebook.feature_kind == "mfcc39":
        return {utt: assign(codebook, feats_map[utt]) for utt in utt_ids}
    if codebook.source_layer is None:
        raise ValueError("hidden-state codebook lacks a source layer")
    hid = hidden_frames(model, feats_map, utt_ids, codebook.source_layer, adapters=adapters)
    return {utt: assign(codebook, hid[utt]) for utt in utt_ids}


def majority_smooth(labels: np.ndarray, radius: int = 2) -> np.ndarray:
    """Per-frame majority vote over a +/-radius window.

    Ties keep the center frame's label. This is the decode step of the
    UER proxy: a unit vocabulary finer than the phone inventory (several
    units per phone) should not be charged insertions for sub-phone
    alternation, much as the downstream synthesizer+recognizer of a
    re-synthesis evaluation integrates over short unit runs.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    if n == 0 or radius == 0:
        return labels.copy()
    out = np.empty_like(labels)
    for i in range(n):
        window = labels[max(0, i - radius) : i + radius + 1]
        values, counts = np.unique(window, return_counts=True)
        best = counts.max()
        candidates = values[counts == best]
        out[i] = labels[i] if labels[i] in candidates else candidates[0]
    return out


def corpus_uer(
    hyp_frames: dict[str, np.ndarray], ref_frames: dict[str, np.ndarray], utt_ids: list[str]
) -> float:
    """Map, smooth, de-duplicate, score: total edit distance over ref length."""
    mapping = majority_map(
        np.concatenate([hyp_frames[u] for u in utt_ids]),
        np.concatenate([ref_frames[u] for u in utt_ids]),
    )
    dist_sum = 0
    ref_len = 0
    for utt in utt_ids:
        mapped = np.array([mapping[int(c)] for c in hyp_frames[utt]], dtype=np.int64)
        hyp_units = deduplicate(majority_smooth(mapped), source=utt)
        ref_units = deduplicate(ref_frames[utt], source=utt)
        dist_sum += unit_edit_distance(hyp_units, ref_units)["distance"]
        ref_len += max(1, len(ref_units))
    return dist_sum / ref_len


def masked_accuracy(
    model: EncoderModel,
    adapters,
    feats_map: dict[str, FeatureMatrix],
    targets_map: dict[str, np.ndarray],
    utt_ids: list[str],
    mask_seed: int,
) -> float:
    """Fraction of masked frames whose argmax logit hits the frame's target."""
    correct = 0
    total = 0
    cfg = model.config
    for utt in utt_ids:
        targets = targets_map[utt]
        mask = make_span_mask(
            targets.shape[0], cfg.mask_prob, cfg.mask_span, derive_rng(mask_seed, "evalmask", utt)
        )
        logits = masked_prediction_logits(model, feats_map[utt], mask, adapters=adapters)
        correct += int((np.argmax(logits, axis=1) == targets[mask]).sum())
        total += int(mask.sum())
    return correct / total


def evaluate(
    model: EncoderModel,
    adapters,
    codebook: Codebook,
    test_manifest: CorpusManifest,
    reference_units: dict[str, np.ndarray] | None = None,
    frame_labels: dict[str, np.ndarray] | None = None,
    system: str = "system",
    mask_seed: int = 1234,
    feats_map: dict[str, FeatureMatrix] | None = None,
    param_summary: dict | None = None,
) -> EvalReport:
    """Score one system (model [+ adapters] + codebook) on a test manifest.

    reference_units are frame-level label sequences per utterance (either
    generator ground truth or a frozen reference extractor's frame
    assignments); when present, per-language UER is computed against
    them. frame_labels enable cluster purity. Reported rates are clipped
    to [0, 1]; UER beyond 1 means the hypothesis was mostly insertions.
    """
    feats_map = feats_map or corpus_features(test_manifest)
    rows = []
    for lang in test_manifest.languages:
        utt_ids = [e.utt_id for e in test_manifest.filter_lang(lang).entries]
        hyp = _system_assignments(model, adapters, codebook, feats_map, utt_ids)
        row = EvalRow(system=system, lang=lang)
        if reference_units is not None:
            refs = {utt: np.asarray(reference_units[utt], dtype=np.int64) for utt in utt_ids}
            row.uer = min(1.0, corpus_uer(hyp, refs, utt_ids))
        embedding_rows = (
            adapters.label_embedding.shape[0]
            if adapters is not None
            else model.config.vocab_size
        )
        if embedding_rows == codebook.K:
            row.masked_acc = masked_accuracy(model, adapters, feats_map, hyp, utt_ids, mask_seed)
        if frame_labels is not None:
            row.purity = cluster_purity(
                np.concatenate([hyp[u] for u in utt_ids]),
                np.concatenate([np.asarray(frame_labels[u]) for u in utt_ids]),
            )
        rows.append(row)
    return EvalReport(rows=rows, param_summary=param_summary)


def forgetting_delta(before: EvalReport, after: EvalReport, lang: str) -> float:
    """Old-language UER(after) - UER(before); positive means forgetting."""
    return after.uer(lang) - before.uer(lang)


def with_forgetting(report: EvalReport, before: EvalReport, lang: str) -> EvalReport:
    report.forgetting_delta = forgetting_delta(before, report, lang)
    report.forgetting_lang = lang
    return report


def _fmt(value: float) -> str:
    return "" if value is None or math.isnan(value) else f"{value:.6f}"


def write_report_csv(path: str | Path, reports: list[EvalReport]) -> None:
    """CSV rows per (system, lang); forgetting deltas appear as summary rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_HEADER)
        for report in reports:
            for row in report.rows:
                writer.writerow(
                    [row.system, row.lang, _fmt(row.uer), _fmt(row.masked_acc), _fmt(row.purity)]
                )
        for report in reports:
            if report.forgetting_delta is not None:
                writer.writerow(
                    ["forgetting_delta", report.forgetting_lang,
                     f"{report.forgetting_delta:.6f}", "", ""]
                )


def read_report_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
