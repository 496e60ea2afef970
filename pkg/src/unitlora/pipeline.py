"""End-to-end adaptation and preservation runs over corpus manifests.

Every operation here is a deterministic function of (base model bytes,
manifests, plan, seed): feature extraction is pure, k-means substreams
and training order/mask streams are all derived from the one seed, and
each stage records content hashes of its inputs so a run can prove what
it read.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .audio import load_wav
from .corpus import CorpusManifest, ManifestEntry, parity_sample
from .features import FeatureMatrix, MfccConfig, mfcc39
from .kmeans import Codebook, KMeansConfig, assign, frame_stream, kmeanspp_init, minibatch_fit
from .lora import DEFAULT_LR, LoraConfig, LoraSet, TrainBatch, adapt_train_step, attach, serialize_adapters, save_adapters
from .kmeans import save_codebook
from .model import EncoderModel, encode_features, forward, make_span_mask
from .util import derive_rng, derive_seed, sha256_bytes

logger = logging.getLogger(__name__)

STRATEGIES = ("one_iteration", "two_iteration")

# Desk-scale step defaults keep the 250k:400k proportion of the full-size
# schedules while staying minutes-fast.
DEFAULT_STEPS_ITER1 = 2000
DEFAULT_STEPS_ITER2 = 3000


@dataclass
class AdaptationPlan:
    strategy: str
    K: int
    lora: LoraConfig = field(default_factory=LoraConfig)
    tap_released: int = 11
    tap_iter1: int = 6
    steps_iter1: int = DEFAULT_STEPS_ITER1
    steps_iter2_or_single: int = DEFAULT_STEPS_ITER2
    learning_rate: float = DEFAULT_LR
    kmeans: KMeansConfig | None = None

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.steps_iter1 < 0 or self.steps_iter2_or_single < 0:
            raise ValueError("step counts must be non-negative")
        if min(self.tap_released, self.tap_iter1) < 0:
            raise ValueError("taps must be non-negative layer indices")

    def validate_taps(self, n_layers: int) -> None:
        if self.tap_released > n_layers or self.tap_iter1 > n_layers:
            raise ValueError(
                f"taps ({self.tap_released}, {self.tap_iter1}) outside [0, {n_layers}]"
            )

    def kmeans_config(self, seed: int) -> KMeansConfig:
        base = self.kmeans
        if base is None:
            return KMeansConfig(K=self.K, seed=seed)
        return KMeansConfig(
            K=self.K,
            batch_frames=base.batch_frames,
            n_init=base.n_init,
            max_batches=base.max_batches,
            seed=seed,
            reassign_tol=base.reassign_tol,
        )


def scale_tap(paper_tap: int, n_layers: int, paper_layers: int = 12) -> int:
    """Proportional layer-tap rescaling for toy depths (12-layer 6/11 -> 4-layer 2/4)."""
    return max(1, min(n_layers, round(paper_tap * n_layers / paper_layers)))


@dataclass
class MixSpec:
    new_lang: str
    old_lang: str
    old_to_new_ratio: float = 0.1
    parity_for_recluster: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.old_to_new_ratio < 1.0:
            raise ValueError("old_to_new_ratio must lie strictly between 0 and 1")


@dataclass
class AdaptationResult:
    adapters: LoraSet
    codebook: Codebook
    codebook_iter1: Codebook | None = None
    codebook_iter2: Codebook | None = None
    adapters_iter1: LoraSet | None = None
    metrics: list = field(default_factory=list)
    provenance: list = field(default_factory=list)


def corpus_features(
    manifest: CorpusManifest | list[ManifestEntry], mfcc_cfg: MfccConfig | None = None
) -> dict[str, FeatureMatrix]:
    """MFCC features per utterance, keyed by utt_id."""
    entries = manifest.entries if isinstance(manifest, CorpusManifest) else manifest
    return {e.utt_id: mfcc39(load_wav(e.path), mfcc_cfg) for e in entries}


def hidden_frames(
    model: EncoderModel,
    feats_map: dict[str, FeatureMatrix],
    utt_ids: list[str],
    tap: int,
    adapters: LoraSet | None = None,
) -> dict[str, np.ndarray]:
    return {
        utt: forward(model, feats_map[utt], tap=tap, adapters=adapters).layer(tap)
        for utt in utt_ids
    }


def fit_codebook(
    frames_map: dict[str, np.ndarray],
    order: list[str],
    cfg: KMeansConfig,
    feature_kind: str,
    source_layer: int | None,
) -> Codebook:
    """Seed with multi-restart k-means++ on a subsample, then mini-batch fit."""
    X = np.concatenate([np.asarray(frames_map[utt]) for utt in order], axis=0)
    cap = max(cfg.batch_frames, 20 * cfg.K)
    if X.shape[0] > cap:
        sample_idx = derive_rng(cfg.seed, "kmpp-sample").choice(X.shape[0], cap, replace=False)
        sample = X[np.sort(sample_idx)]
    else:
        sample = X
    init = kmeanspp_init(sample, cfg, feature_kind=feature_kind, source_layer=source_layer)
    stream = frame_stream(X, cfg.batch_frames, derive_rng(cfg.seed, "stream"), cfg.max_batches)
    return minibatch_fit(stream, init, cfg)


def assign_targets(
    codebook: Codebook,
    feats_map: dict[str, FeatureMatrix],
    utt_ids: list[str],
    model: EncoderModel | None = None,
    adapters: LoraSet | None = None,
) -> dict[str, np.ndarray]:
    """Frame-level cluster targets in the codebook's own representation."""
    if codebook.feature_kind == "mfcc39":
        return {utt: assign(codebook, feats_map[utt]) for utt in utt_ids}
    if codebook.source_layer is None:
        raise ValueError("hidden-state codebook lacks a source layer")
    if model is None:
        raise ValueError("hidden-state codebook needs a model to extract states")
    hid = hidden_frames(model, feats_map, utt_ids, codebook.source_layer, adapters=adapters)
    return {utt: assign(codebook, hid[utt]) for utt in utt_ids}


def train_adapters(
    model: EncoderModel,
    adapters: LoraSet,
    feats_map: dict[str, FeatureMatrix],
    targets_map: dict[str, np.ndarray],
    order: list[str],
    steps: int,
    seed: int,
    lr: float = DEFAULT_LR,
    log_every: int = 100,
) -> list[tuple[int, float]]:
    """Masked-prediction training over a deterministic utterance schedule.

    Each step consumes one utterance; the schedule reshuffles per epoch
    and the span mask is freshly drawn per step, all from substreams of
    the given seed.
    """
    cfg = model.config
    metrics: list[tuple[int, float]] = []
    n = len(order)
    # the frontend is frozen, so its output per utterance is computed once
    enc_map = {utt: encode_features(model, feats_map[utt]) for utt in set(order)}
    epoch_order: list[str] = []
    for step in range(steps):
        if step % n == 0:
            perm = derive_rng(seed, "order", step // n).permutation(n)
            epoch_order = [order[int(i)] for i in perm]
        utt = epoch_order[step % n]
        mask = make_span_mask(
            targets_map[utt].shape[0], cfg.mask_prob, cfg.mask_span,
            derive_rng(seed, "mask", step),
        )
        out = adapt_train_step(
            model, adapters,
            TrainBatch(feats=feats_map[utt], targets=targets_map[utt], mask=mask,
                       enc=enc_map[utt]),
            lr=lr,
        )
        if step % log_every == 0 or step == steps - 1:
            metrics.append((step, out["loss"]))
            logger.debug("step %d loss %.4f", step, out["loss"])
    return metrics


def _hash_model(model: EncoderModel) -> str:
    return sha256_bytes(b"".join(model.tensors[n].tobytes() for n in sorted(model.tensors)))


def _hash_manifest(entries: list[ManifestEntry]) -> str:
    text = "".join(f"{e.utt_id}\t{e.path}\t{e.lang}\t{e.duration_sec:.6f}\n" for e in entries)
    return sha256_bytes(text.encode())


def _hash_codebook(codebook: Codebook) -> str:
    return sha256_bytes(codebook.centroids.astype("<f4").tobytes())


def _stage(provenance: list, name: str, **inputs: str) -> None:
    provenance.append({"stage": name, "inputs": dict(sorted(inputs.items()))})


def one_iteration_adapt(
    base: EncoderModel,
    corpus: CorpusManifest | list[ManifestEntry],
    plan: AdaptationPlan,
    seed: int,
    feats_map: dict[str, FeatureMatrix] | None = None,
    train_order: list[str] | None = None,
) -> AdaptationResult:
    """Cluster released-model states of the new language, then train adapters."""
    if plan.strategy != "one_iteration":
        raise ValueError("plan.strategy must be 'one_iteration'")
    plan.validate_taps(base.config.n_layers)
    entries = corpus.entries if isinstance(corpus, CorpusManifest) else corpus
    utt_ids = _unique_ids(entries)
    feats_map = feats_map or corpus_features(entries)
    provenance: list = []

    hid = hidden_frames(base, feats_map, utt_ids, plan.tap_released)
    codebook = fit_codebook(
        hid, utt_ids, plan.kmeans_config(derive_seed(seed, "kmeans-single")),
        feature_kind="hidden", source_layer=plan.tap_released,
    )
    _stage(provenance, "kmeans", base=_hash_model(base), corpus=_hash_manifest(entries))

    targets = {utt: assign(codebook, hid[utt]) for utt in utt_ids}
    adapters = attach(base, plan.lora, derive_seed(seed, "attach"), vocab_size=plan.K)
    metrics = train_adapters(
        base, adapters, feats_map, targets, train_order or utt_ids,
        plan.steps_iter2_or_single, derive_seed(seed, "train"), lr=plan.learning_rate,
    )
    _stage(
        provenance, "train",
        base=_hash_model(base), codebook=_hash_codebook(codebook), corpus=_hash_manifest(entries),
    )
    return AdaptationResult(
        adapters=adapters, codebook=codebook, metrics=metrics, provenance=provenance
    )


def two_iteration_adapt(
    base: EncoderModel,
    corpus: CorpusManifest | list[ManifestEntry],
    plan: AdaptationPlan,
    seed: int,
    feats_map: dict[str, FeatureMatrix] | None = None,
    train_order: list[str] | None = None,
) -> AdaptationResult:
    """MFCC-target first pass, then refined targets from the pass-1 model.

    The second pass re-attaches fresh adapters to the original base; it
    never warm-starts from the pass-1 adapters, and the stage records
    prove the pass-2 training only read base weights, the refined
    codebook, and the corpus.
    """
    if plan.strategy != "two_iteration":
        raise ValueError("plan.strategy must be 'two_iteration'")
    plan.validate_taps(base.config.n_layers)
    entries = corpus.entries if isinstance(corpus, CorpusManifest) else corpus
    utt_ids = _unique_ids(entries)
    feats_map = feats_map or corpus_features(entries)
    order = train_order or utt_ids
    provenance: list = []
    corpus_hash = _hash_manifest(entries)
    base_hash = _hash_model(base)

    # iteration 1: coarse targets from MFCC clustering
    codebook1 = fit_codebook(
        {utt: feats_map[utt].data for utt in utt_ids}, utt_ids,
        plan.kmeans_config(derive_seed(seed, "kmeans-iter1")),
        feature_kind="mfcc39", source_layer=None,
    )
    _stage(provenance, "iter1-kmeans", corpus=corpus_hash)
    targets1 = {utt: assign(codebook1, feats_map[utt]) for utt in utt_ids}
    adapters1 = attach(base, plan.lora, derive_seed(seed, "attach"), vocab_size=plan.K)
    metrics1 = train_adapters(
        base, adapters1, feats_map, targets1, order, plan.steps_iter1,
        derive_seed(seed, "train"), lr=plan.learning_rate,
    )
    _stage(
        provenance, "iter1-train",
        base=base_hash, codebook=_hash_codebook(codebook1), corpus=corpus_hash,
    )

    # iteration 2: refined targets from the pass-1 model's intermediate layer
    hid = hidden_frames(base, feats_map, utt_ids, plan.tap_iter1, adapters=adapters1)
    codebook2 = fit_codebook(
        hid, utt_ids, plan.kmeans_config(derive_seed(seed, "kmeans-iter2")),
        feature_kind="hidden", source_layer=plan.tap_iter1,
    )
    _stage(
        provenance, "iter2-kmeans",
        base=base_hash, adapters_iter1=sha256_bytes(serialize_adapters(adapters1)),
        corpus=corpus_hash,
    )
    targets2 = {utt: assign(codebook2, hid[utt]) for utt in utt_ids}
    adapters2 = attach(base, plan.lora, derive_seed(seed, "attach"), vocab_size=plan.K)
    metrics2 = train_adapters(
        base, adapters2, feats_map, targets2, order, plan.steps_iter2_or_single,
        derive_seed(seed, "train"), lr=plan.learning_rate,
    )
    _stage(
        provenance, "iter2-train",
        base=base_hash, codebook=_hash_codebook(codebook2), corpus=corpus_hash,
    )
    return AdaptationResult(
        adapters=adapters2, codebook=codebook2, codebook_iter1=codebook1,
        codebook_iter2=codebook2, adapters_iter1=adapters1,
        metrics=metrics1 + metrics2, provenance=provenance,
    )


def adapt(
    base: EncoderModel,
    corpus: CorpusManifest | list[ManifestEntry],
    plan: AdaptationPlan,
    seed: int,
    feats_map: dict[str, FeatureMatrix] | None = None,
    train_order: list[str] | None = None,
) -> AdaptationResult:
    fn = one_iteration_adapt if plan.strategy == "one_iteration" else two_iteration_adapt
    return fn(base, corpus, plan, seed, feats_map=feats_map, train_order=train_order)


def preservation_recluster(
    base: EncoderModel,
    adapters: LoraSet,
    old_corpus: CorpusManifest,
    new_corpus: CorpusManifest,
    tap: int,
    K: int,
    seed: int,
    sample_seconds: float | None = None,
    kmeans: KMeansConfig | None = None,
    feats_map: dict[str, FeatureMatrix] | None = None,
) -> Codebook:
    """Refit the unit codebook on adapted-model states of both languages.

    Equal total duration is sampled from each corpus (parity within one
    utterance), states are taken from the adapted model at the given tap,
    and a single k-means is fit on the combined frames.
    """
    if not old_corpus.entries or not new_corpus.entries:
        raise ValueError("both corpora must be non-empty")
    if sample_seconds is None:
        sample_seconds = min(old_corpus.total_duration, new_corpus.total_duration)
    picked_old = parity_sample(old_corpus, sample_seconds, derive_rng(seed, "sample", "old"))
    picked_new = parity_sample(new_corpus, sample_seconds, derive_rng(seed, "sample", "new"))
    entries = picked_old + picked_new
    utt_ids = [e.utt_id for e in entries]
    if feats_map is None:
        feats_map = corpus_features(entries)
    hid = hidden_frames(base, feats_map, utt_ids, tap, adapters=adapters)
    cfg = kmeans or KMeansConfig(K=K)
    cfg = KMeansConfig(
        K=K, batch_frames=cfg.batch_frames, n_init=cfg.n_init,
        max_batches=cfg.max_batches, seed=derive_seed(seed, "recluster"),
        reassign_tol=cfg.reassign_tol,
    )
    return fit_codebook(hid, utt_ids, cfg, feature_kind="hidden", source_layer=tap)


def mixed_schedule(
    new_entries: list[ManifestEntry],
    old_entries: list[ManifestEntry],
    ratio: float,
    seed: int,
) -> list[ManifestEntry]:
    """Interleave old-language utterances into the new-language order.

    A duration accumulator earns ratio seconds of old speech per second
    of new speech and emits the next old utterance whenever it can pay
    for it, so old:new duration tracks the ratio throughout.
    """
    if not new_entries or not old_entries:
        raise ValueError("both language corpora must be non-empty for data mixing")
    new_order = [
        new_entries[int(i)]
        for i in derive_rng(seed, "mix-new").permutation(len(new_entries))
    ]
    old_perm = derive_rng(seed, "mix-old")
    old_pool = [old_entries[int(i)] for i in old_perm.permutation(len(old_entries))]
    old_pos = 0
    schedule: list[ManifestEntry] = []
    owed = 0.0
    for entry in new_order:
        schedule.append(entry)
        owed += ratio * entry.duration_sec
        while owed >= old_pool[old_pos % len(old_pool)].duration_sec:
            nxt = old_pool[old_pos % len(old_pool)]
            schedule.append(nxt)
            owed -= nxt.duration_sec
            old_pos += 1
    return schedule


def preservation_datamix(
    base: EncoderModel,
    new_corpus: CorpusManifest,
    old_corpus: CorpusManifest,
    mix: MixSpec,
    plan: AdaptationPlan,
    seed: int,
    feats_map: dict[str, FeatureMatrix] | None = None,
) -> AdaptationResult:
    """Run the chosen adaptation strategy on a ratio-mixed training stream.

    Old-language utterances are interleaved below parity (ratio < 1) and
    the k-means targets are fit on the composite representations, so the
    codebook covers both languages while the new language dominates.
    """
    new_entries = new_corpus.filter_lang(mix.new_lang).entries or new_corpus.entries
    old_entries = old_corpus.filter_lang(mix.old_lang).entries or old_corpus.entries
    schedule = mixed_schedule(new_entries, old_entries, mix.old_to_new_ratio, seed)
    seen = set()
    unique_entries = []
    for e in schedule:
        if e.utt_id not in seen:
            seen.add(e.utt_id)
            unique_entries.append(e)
    if feats_map is None:
        feats_map = corpus_features(unique_entries)
    train_order = [e.utt_id for e in schedule]
    return adapt(
        base, unique_entries, plan, seed, feats_map=feats_map, train_order=train_order
    )


def _unique_ids(entries: list[ManifestEntry]) -> list[str]:
    seen = set()
    out = []
    for e in entries:
        if e.utt_id not in seen:
            seen.add(e.utt_id)
            out.append(e.utt_id)
    return out


def write_run_dir(
    run_dir: str | Path,
    plan: AdaptationPlan,
    result: AdaptationResult,
    extra_codebooks: dict[str, Codebook] | None = None,
) -> None:
    """Persist a run: plan snapshot, codebooks, adapters, metrics, provenance."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    plan_doc = asdict(plan)
    plan_doc["kmeans"] = None if plan.kmeans is None else asdict(plan.kmeans)
    (run_dir / "plan.json").write_text(json.dumps(plan_doc, indent=2, sort_keys=True) + "\n")
    save_adapters(run_dir / "adapters.lora", result.adapters)
    save_codebook(run_dir / "codebook.kmcb", result.codebook)
    if result.codebook_iter1 is not None:
        save_codebook(run_dir / "codebook_iter1.kmcb", result.codebook_iter1)
    if result.codebook_iter2 is not None:
        save_codebook(run_dir / "codebook_iter2.kmcb", result.codebook_iter2)
    for name, codebook in (extra_codebooks or {}).items():
        save_codebook(run_dir / f"{name}.kmcb", codebook)
    with open(run_dir / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        for step, loss in result.metrics:
            writer.writerow([step, f"{loss:.6f}"])
    (run_dir / "provenance.json").write_text(
        json.dumps(result.provenance, indent=2, sort_keys=True) + "\n"
    )
