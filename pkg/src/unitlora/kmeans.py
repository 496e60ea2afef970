"""Mini-batch k-means tokenizer with multi-restart k-means++ seeding.

Codebooks are fit on frame features (MFCC or encoder hidden states) and
applied with exact squared-Euclidean nearest-centroid assignment, ties
broken toward the lowest index. Centroid updates follow the per-centroid
count rule: after a batch, each centroid moves toward its batch mean with
step size m_c / n_c where n_c is its cumulative assignment count.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .features import FeatureMatrix
from .util import check_finite, derive_rng

_KMCB_MAGIC = b"KMCB"

# Frames per distance-matrix chunk are sized so the (chunk, K, D) scratch
# tensor stays around 32 MB even at K=3000, D=768.
_CHUNK_ELEMS = 4_000_000


@dataclass
class KMeansConfig:
    K: int
    batch_frames: int = 10000
    n_init: int = 20
    max_batches: int = 1000
    seed: int = 0
    reassign_tol: float = 1e-4

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.batch_frames < self.K:
            raise ValueError("batch_frames must be >= K")
        if self.n_init < 1 or self.max_batches < 1:
            raise ValueError("n_init and max_batches must be positive")


@dataclass
class Codebook:
    centroids: np.ndarray
    feature_kind: str = "mfcc39"
    source_layer: int | None = None

    def __post_init__(self) -> None:
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2:
            raise ValueError("centroids must be a [K x D] matrix")
        check_finite("codebook centroids", self.centroids)

    @property
    def K(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _as_frames(data: FeatureMatrix | np.ndarray) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.data
    return np.asarray(data, dtype=np.float64)


def sq_distances(frames: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distances, chunked over frames.

    Computed as sum((x - c)^2) rather than the norm-expansion shortcut so
    results match a direct per-frame scan bit for bit.
    """
    frames = np.atleast_2d(frames)
    K, D = centroids.shape
    out = np.empty((frames.shape[0], K))
    chunk = max(1, _CHUNK_ELEMS // (K * D))
    for start in range(0, frames.shape[0], chunk):
        block = frames[start : start + chunk]
        out[start : start + chunk] = np.sum(
            (block[:, None, :] - centroids[None, :, :]) ** 2, axis=2
        )
    return out


def assign(codebook: Codebook, feats: FeatureMatrix | np.ndarray) -> np.ndarray:
    """Nearest-centroid index per frame; equidistant ties pick the lowest index."""
    frames = _as_frames(feats)
    if frames.shape[1] != codebook.dim:
        raise ValueError(
            f"dimension mismatch: frames have {frames.shape[1]} dims, codebook {codebook.dim}"
        )
    return np.argmin(sq_distances(frames, codebook.centroids), axis=1)


def inertia(centroids: np.ndarray, frames: np.ndarray) -> float:
    return float(np.min(sq_distances(frames, centroids), axis=1).sum())


def _seed_once(frames: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """One k-means++ pass: first center uniform, then p proportional to D^2."""
    n = frames.shape[0]
    centers = np.empty((K, frames.shape[1]))
    first = int(rng.integers(n))
    centers[0] = frames[first]
    closest = np.sum((frames - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = closest.sum()
        if total <= 0.0:
            raise ValueError(f"data sample has fewer than {K} distinct rows")
        pick = int(rng.choice(n, p=closest / total))
        centers[k] = frames[pick]
        closest = np.minimum(closest, np.sum((frames - centers[k]) ** 2, axis=1))
    return centers


def kmeanspp_candidates(
    data_sample: FeatureMatrix | np.ndarray, cfg: KMeansConfig
) -> list[tuple[np.ndarray, float]]:
    """All n_init seedings with their inertias, each from its own substream."""
    frames = _as_frames(data_sample)
    if frames.shape[0] < cfg.K:
        raise ValueError(f"data sample has fewer than {cfg.K} distinct rows")
    candidates = []
    for restart in range(cfg.n_init):
        rng = derive_rng(cfg.seed, "kmeanspp", restart)
        centers = _seed_once(frames, cfg.K, rng)
        candidates.append((centers, inertia(centers, frames)))
    return candidates


def kmeanspp_init(
    data_sample: FeatureMatrix | np.ndarray,
    cfg: KMeansConfig,
    feature_kind: str | None = None,
    source_layer: int | None = None,
) -> Codebook:
    """Best of n_init k-means++ seedings, judged by inertia on the sample."""
    candidates = kmeanspp_candidates(data_sample, cfg)
    best, _ = min(candidates, key=lambda c: c[1])
    if feature_kind is None:
        feature_kind = (
            data_sample.feature_kind if isinstance(data_sample, FeatureMatrix) else "hidden"
        )
    return Codebook(centroids=best.copy(), feature_kind=feature_kind, source_layer=source_layer)


def minibatch_fit(
    stream: Iterable[np.ndarray], init: Codebook, cfg: KMeansConfig
) -> Codebook:
    """Sculley-style mini-batch refinement of an initial codebook.

    Per batch: assign frames, then move each assigned centroid toward its
    batch mean with rate m_c/n_c. Centroids that have never received a
    frame are relocated to the farthest points of the current batch.
    Stops at max_batches or once mean centroid movement stays below
    reassign_tol for 3 consecutive batches.
    """
    centroids = init.centroids.copy()
    K = centroids.shape[0]
    counts = np.zeros(K, dtype=np.int64)
    n_batches = 0
    quiet = 0
    for batch in stream:
        batch = np.asarray(batch, dtype=np.float64)
        if batch.size == 0:
            continue
        n_batches += 1
        dists = sq_distances(batch, centroids)
        labels = np.argmin(dists, axis=1)
        previous = centroids.copy()

        batch_counts = np.bincount(labels, minlength=K)
        occupied = batch_counts > 0
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, batch)
        counts += batch_counts
        means = sums[occupied] / batch_counts[occupied, None]
        rates = batch_counts[occupied] / counts[occupied]
        centroids[occupied] += rates[:, None] * (means - centroids[occupied])

        dead = np.flatnonzero(counts == 0)
        if dead.size:
            # farthest-first relocation keeps all K centroids live
            order = np.argsort(-np.min(dists, axis=1), kind="stable")
            for slot, centroid_idx in enumerate(dead[: batch.shape[0]]):
                centroids[centroid_idx] = batch[order[slot]]
                counts[centroid_idx] = 1

        movement = float(np.mean(np.linalg.norm(centroids - previous, axis=1)))
        quiet = quiet + 1 if movement < cfg.reassign_tol else 0
        if quiet >= 3 or n_batches >= cfg.max_batches:
            break
    if n_batches == 0:
        raise ValueError("empty stream: mini-batch fit needs at least one batch")
    return Codebook(
        centroids=centroids, feature_kind=init.feature_kind, source_layer=init.source_layer
    )


def frame_stream(
    frames: np.ndarray, batch_frames: int, rng: np.random.Generator, max_batches: int
) -> Iterator[np.ndarray]:
    """Shuffled batches over a frame matrix, reshuffling each epoch."""
    n = frames.shape[0]
    emitted = 0
    while emitted < max_batches:
        order = rng.permutation(n)
        for start in range(0, n, batch_frames):
            yield frames[order[start : start + batch_frames]]
            emitted += 1
            if emitted >= max_batches:
                return


def save_codebook(path: str | Path, codebook: Codebook) -> None:
    """KMCB container: magic, u32 K, u32 D, i32 source layer (-1 if none), f32 rows."""
    layer = -1 if codebook.source_layer is None else int(codebook.source_layer)
    with open(path, "wb") as fh:
        fh.write(_KMCB_MAGIC)
        fh.write(struct.pack("<IIi", codebook.K, codebook.dim, layer))
        fh.write(codebook.centroids.astype("<f4").tobytes())


def load_codebook(path: str | Path) -> Codebook:
    raw = Path(path).read_bytes()
    if raw[:4] != _KMCB_MAGIC:
        raise ValueError(f"not a KMCB file: {path}")
    K, D, layer = struct.unpack("<IIi", raw[4:16])
    data = np.frombuffer(raw[16:], dtype="<f4")
    if data.size != K * D:
        raise ValueError(f"truncated KMCB file: {path}")
    return Codebook(
        centroids=data.reshape(K, D).astype(np.float64),
        feature_kind="hidden" if layer >= 0 else "mfcc39",
        source_layer=None if layer < 0 else layer,
    )
