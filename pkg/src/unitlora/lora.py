"""Low-rank adapters on the attention projections, and their training step.

Each adapted projection W0 gains a pair (A, B) with B zero-initialized and
A Gaussian, so the adapted forward h = W0 x + (alpha/r) * B A x starts out
exactly equal to the base forward. Training updates only A, B and a fresh
label embedding table; the Adam step lives here so the base model module
stays free of optimizer state.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import ATTN_TARGETS, EncoderModel, ModelConfig, loss_and_grads
from .features import FeatureMatrix
from .util import derive_rng, sha256_bytes

logger = logging.getLogger(__name__)

_LORA_MAGIC = b"LORA"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
DEFAULT_LR = 5e-4


@dataclass
class LoraConfig:
    r: int = 24
    alpha: float = 24.0
    targets: tuple[str, ...] = ATTN_TARGETS
    init_std: float = 0.02

    def __post_init__(self) -> None:
        self.targets = tuple(self.targets)
        if self.r < 1:
            raise ValueError("rank must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.init_std <= 0:
            raise ValueError("init_std must be positive")
        if not self.targets or any(t not in ATTN_TARGETS for t in self.targets):
            raise ValueError(f"targets must be a non-empty subset of {ATTN_TARGETS}")


@dataclass
class LoraAdapter:
    A: np.ndarray  # (r, k)
    B: np.ndarray  # (d, r)
    alpha: float

    @property
    def r(self) -> int:
        return self.A.shape[0]

    @property
    def scale(self) -> float:
        return self.alpha / self.r

    def delta_weight(self) -> np.ndarray:
        return self.scale * (self.B @ self.A)


@dataclass
class LoraSet:
    """All adapters of one adaptation run plus its fresh label embedding."""

    adapters: dict[tuple[int, str], LoraAdapter]
    config: LoraConfig
    label_embedding: np.ndarray
    opt_state: dict = field(default_factory=dict, repr=False)

    def trainable_arrays(self) -> dict:
        out: dict = {"label_embedding": self.label_embedding}
        for (layer, target), adapter in self.adapters.items():
            out[("lora", layer, target, "A")] = adapter.A
            out[("lora", layer, target, "B")] = adapter.B
        return out

    def content_hash(self) -> str:
        return sha256_bytes(serialize_adapters(self))


@dataclass
class TrainBatch:
    feats: FeatureMatrix
    targets: np.ndarray
    mask: np.ndarray
    enc: np.ndarray | None = None  # cached feature-encoder output


def attach(
    model: EncoderModel, cfg: LoraConfig, seed: int, vocab_size: int | None = None
) -> LoraSet:
    """Create zero-effect adapters for every configured (layer, target).

    A is drawn i.i.d. Gaussian(0, init_std^2) from a per-adapter substream;
    B starts at zero so the adapted model is exactly the base model. Also
    creates the fresh label embedding for the adaptation vocabulary.
    """
    d = model.config.d_model
    if cfg.r > d:
        raise ValueError(f"rank {cfg.r} exceeds projection dimension {d}")
    adapters = {}
    for layer in range(model.config.n_layers):
        for target in cfg.targets:
            rng = derive_rng(seed, "lora", layer, target)
            adapters[(layer, target)] = LoraAdapter(
                A=rng.normal(0.0, cfg.init_std, size=(cfg.r, d)),
                B=np.zeros((d, cfg.r)),
                alpha=cfg.alpha,
            )
    vocab = model.config.vocab_size if vocab_size is None else int(vocab_size)
    embedding = derive_rng(seed, "label_embedding").normal(
        0.0, 0.02, size=(vocab, model.config.label_proj_dim)
    )
    return LoraSet(adapters=adapters, config=cfg, label_embedding=embedding)


def forward_with_lora(W0x: np.ndarray, adapter: LoraAdapter, x: np.ndarray) -> np.ndarray:
    """Adapted projection h = W0 x + (alpha/r) B (A x) for one input vector."""
    W0x = np.asarray(W0x, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != adapter.A.shape[1] or W0x.shape[-1] != adapter.B.shape[0]:
        raise ValueError(
            f"dimension mismatch: x has {x.shape[-1]} dims for A {adapter.A.shape}, "
            f"W0x has {W0x.shape[-1]} dims for B {adapter.B.shape}"
        )
    return W0x + adapter.scale * (x @ adapter.A.T) @ adapter.B.T


def verify_attachable(model: EncoderModel, adapters: LoraSet) -> None:
    """Reject adapter/model pairings that would double-apply a merged delta."""
    d = model.config.d_model
    for (layer, target), adapter in adapters.adapters.items():
        if layer >= model.config.n_layers or target not in ATTN_TARGETS:
            raise ValueError(f"adapter ({layer}, {target}) does not fit the model")
        if adapter.A.shape[1] != d or adapter.B.shape[0] != d:
            raise ValueError(f"adapter ({layer}, {target}) dimensions do not match d_model {d}")
    if model.merged_adapters and adapters.content_hash() in model.merged_adapters:
        raise ValueError("these adapters are already merged into this model")


def merge(model: EncoderModel, adapters: LoraSet) -> EncoderModel:
    """Fold adapter deltas into the projection weights of a copied model.

    The result carries the adapters' label embedding (and vocabulary) so it
    is the complete adapted system with no adapter branches left. Merging
    the same adapter set a second time is rejected.
    """
    verify_attachable(model, adapters)
    tensors = {name: arr.copy() for name, arr in model.tensors.items()}
    for (layer, target), adapter in adapters.adapters.items():
        tensors[f"blocks.{layer}.attn.{target}.weight"] += adapter.delta_weight()
    cfg = model.config
    if adapters.label_embedding.shape[0] != cfg.vocab_size:
        cfg = ModelConfig(**{**_cfg_dict(cfg), "vocab_size": adapters.label_embedding.shape[0]})
    tensors["label_embedding.weight"] = adapters.label_embedding.copy()
    return EncoderModel(
        config=cfg,
        tensors=tensors,
        frozen=dict(model.frozen),
        merged_adapters=model.merged_adapters + [adapters.content_hash()],
    )


def _cfg_dict(cfg: ModelConfig) -> dict:
    from dataclasses import asdict

    return asdict(cfg)


def adapt_train_step(
    model: EncoderModel, adapters: LoraSet, batch: TrainBatch, lr: float = DEFAULT_LR
) -> dict:
    """One Adam step on A, B and the fresh label embedding.

    Returns the pre-update loss. A non-finite loss is reported and the
    update skipped; base weights are never written either way.
    """
    loss, grads = loss_and_grads(model, batch.feats, batch.targets, batch.mask, adapters, enc=batch.enc)
    if not np.isfinite(loss):
        logger.warning("non-finite loss %r: skipping update step", loss)
        return {"loss": loss, "skipped": True}
    arrays = adapters.trainable_arrays()
    state = adapters.opt_state
    t = state.get("t", 0) + 1
    state["t"] = t
    for key, grad in grads.items():
        param = arrays[key]
        m, v = state.get(key, (np.zeros_like(param), np.zeros_like(param)))
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad * grad
        state[key] = (m, v)
        m_hat = m / (1.0 - ADAM_BETA1**t)
        v_hat = v / (1.0 - ADAM_BETA2**t)
        param -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return {"loss": loss, "skipped": False}


def serialize_adapters(adapters: LoraSet) -> bytes:
    """LORA container bytes: magic, config block, per-adapter records
    (layer, target, r, alpha, dims, A, B), then the label embedding."""
    meta = {
        "r": adapters.config.r,
        "alpha": adapters.config.alpha,
        "targets": list(adapters.config.targets),
        "init_std": adapters.config.init_std,
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    chunks = [_LORA_MAGIC, struct.pack("<HI", 1, len(meta_bytes)), meta_bytes]
    keys = sorted(adapters.adapters, key=lambda k: (k[0], ATTN_TARGETS.index(k[1])))
    chunks.append(struct.pack("<I", len(keys)))
    for layer, target in keys:
        adapter = adapters.adapters[(layer, target)]
        r, k = adapter.A.shape
        d = adapter.B.shape[0]
        chunks.append(
            struct.pack("<IcIfII", layer, target.encode("ascii"), r, adapter.alpha, d, k)
        )
        chunks.append(adapter.A.astype("<f4").tobytes())
        chunks.append(adapter.B.astype("<f4").tobytes())
    V, P = adapters.label_embedding.shape
    chunks.append(struct.pack("<II", V, P))
    chunks.append(adapters.label_embedding.astype("<f4").tobytes())
    return b"".join(chunks)


def save_adapters(path: str | Path, adapters: LoraSet) -> None:
    Path(path).write_bytes(serialize_adapters(adapters))


def load_adapters(path: str | Path) -> LoraSet:
    raw = Path(path).read_bytes()
    if raw[:4] != _LORA_MAGIC:
        raise ValueError(f"not a LORA adapter file: {path}")
    version, meta_len = struct.unpack("<HI", raw[4:10])
    if version != 1:
        raise ValueError(f"unsupported adapter file version {version}")
    offset = 10
    meta = json.loads(raw[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    cfg = LoraConfig(
        r=meta["r"], alpha=meta["alpha"], targets=tuple(meta["targets"]),
        init_std=meta["init_std"],
    )
    (n_adapters,) = struct.unpack("<I", raw[offset : offset + 4])
    offset += 4
    adapters: dict[tuple[int, str], LoraAdapter] = {}
    for _ in range(n_adapters):
        layer, target, r, alpha, d, k = struct.unpack("<IcIfII", raw[offset : offset + 21])
        offset += 21
        A = np.frombuffer(raw[offset : offset + 4 * r * k], dtype="<f4")
        offset += 4 * r * k
        B = np.frombuffer(raw[offset : offset + 4 * d * r], dtype="<f4")
        offset += 4 * d * r
        adapters[(layer, target.decode("ascii"))] = LoraAdapter(
            A=A.reshape(r, k).astype(np.float64),
            B=B.reshape(d, r).astype(np.float64),
            alpha=float(alpha),
        )
    V, P = struct.unpack("<II", raw[offset : offset + 8])
    offset += 8
    embedding = np.frombuffer(raw[offset : offset + 4 * V * P], dtype="<f4")
    return LoraSet(
        adapters=adapters,
        config=cfg,
        label_embedding=embedding.reshape(V, P).astype(np.float64),
    )
