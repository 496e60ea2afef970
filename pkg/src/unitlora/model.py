"""Reduced masked-prediction speech encoder.

A 2-layer 1-D convolution stack over 39-d MFCC frames feeds a stack of
pre-norm transformer blocks (multi-head self-attention + MLP). Training
predicts k-means cluster indices at masked frames from context: frame
states are projected, cosine-scored against a label embedding table at
temperature 0.1, and cross-entropy is averaged over the masked frames.

All arithmetic is float64. The base weights are never touched by
adaptation; gradients exist only for the low-rank adapter matrices and a
fresh label embedding table, and are produced by the hand-written
backward pass in loss_and_grads (validated against finite differences).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .features import MFCC_DIM, FeatureMatrix
from .util import NumericalError, check_finite, derive_rng

COSINE_TEMPERATURE = 0.1
LN_EPS = 1e-5
NORM_EPS = 1e-12

ATTN_TARGETS = ("q", "k", "v", "o")

_ENCM_MAGIC = b"ENCM"


@dataclass
class ModelConfig:
    n_layers: int
    d_model: int
    n_heads: int
    d_ffn: int
    label_proj_dim: int
    vocab_size: int
    encoder_stride: int = 1
    mask_prob: float = 0.08
    mask_span: int = 10
    conv_hidden: int | None = None
    conv_kernels: tuple[int, int] = (5, 15)

    def __post_init__(self) -> None:
        if self.conv_hidden is None:
            self.conv_hidden = self.d_model
        self.conv_kernels = tuple(self.conv_kernels)
        if min(self.n_layers, self.d_model, self.n_heads, self.d_ffn) < 1:
            raise ValueError("model dimensions must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.label_proj_dim > self.d_model:
            raise ValueError("label_proj_dim must not exceed d_model")
        if self.vocab_size < 1 or self.encoder_stride < 1:
            raise ValueError("vocab_size and encoder_stride must be positive")
        if not 0.0 < self.mask_prob < 1.0:
            raise ValueError("mask_prob must lie in (0, 1)")
        if self.mask_span < 1:
            raise ValueError("mask_span must be positive")
        if len(self.conv_kernels) != 2:
            raise ValueError("feature encoder uses exactly two conv layers")


def parameter_table(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) table of every base tensor."""
    k1, k2 = cfg.conv_kernels
    c1, d, f = cfg.conv_hidden, cfg.d_model, cfg.d_ffn
    table: list[tuple[str, tuple[int, ...]]] = [
        ("conv1.weight", (c1, MFCC_DIM, k1)),
        ("conv1.bias", (c1,)),
        ("conv2.weight", (d, c1, k2)),
        ("conv2.bias", (d,)),
    ]
    for i in range(cfg.n_layers):
        p = f"blocks.{i}"
        table += [(f"{p}.ln1.gamma", (d,)), (f"{p}.ln1.beta", (d,))]
        for t in ATTN_TARGETS:
            table += [(f"{p}.attn.{t}.weight", (d, d)), (f"{p}.attn.{t}.bias", (d,))]
        table += [(f"{p}.ln2.gamma", (d,)), (f"{p}.ln2.beta", (d,))]
        table += [
            (f"{p}.mlp.w1.weight", (f, d)),
            (f"{p}.mlp.w1.bias", (f,)),
            (f"{p}.mlp.w2.weight", (d, f)),
            (f"{p}.mlp.w2.bias", (d,)),
        ]
    table += [
        ("final_ln.gamma", (d,)),
        ("final_ln.beta", (d,)),
        ("label_proj.weight", (cfg.label_proj_dim, d)),
        ("label_embedding.weight", (cfg.vocab_size, cfg.label_proj_dim)),
    ]
    return table


@dataclass
class EncoderModel:
    config: ModelConfig
    tensors: dict[str, np.ndarray]
    frozen: dict[str, bool] = field(default_factory=dict)
    merged_adapters: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name, _ in parameter_table(self.config):
            if name not in self.tensors:
                raise ValueError(f"missing tensor {name}")
            check_finite(name, self.tensors[name])
            self.frozen.setdefault(name, True)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def snapshot_bytes(self) -> dict[str, bytes]:
        """Raw bytes of every tensor, for frozen-weight audits."""
        return {name: arr.tobytes() for name, arr in self.tensors.items()}


@dataclass
class HiddenStates:
    """Per-layer [T x d_model] states; index 0 is the feature-encoder output."""

    states: dict[int, np.ndarray]

    def layer(self, index: int) -> np.ndarray:
        return self.states[index]

    @property
    def final(self) -> np.ndarray:
        return self.states[max(self.states)]

    @property
    def n_frames(self) -> int:
        return self.final.shape[0]


# A released encoder keeps input structure in its residual stream; the
# stand-in base mimics that by damping the block output projections so
# layer taps stay informative before any adaptation.
_RESIDUAL_DAMP = 0.25


def init_model(cfg: ModelConfig, seed: int) -> EncoderModel:
    """Seeded stand-in for a released base checkpoint."""
    tensors: dict[str, np.ndarray] = {}
    for name, shape in parameter_table(cfg):
        rng = derive_rng(seed, "init", name)
        if name.endswith(".bias") or name.endswith(".beta"):
            tensors[name] = np.zeros(shape)
        elif name.endswith(".gamma"):
            tensors[name] = np.ones(shape)
        elif name == "label_embedding.weight":
            tensors[name] = rng.normal(0.0, 0.02, size=shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            std = 1.0 / np.sqrt(fan_in)
            if name.endswith(".attn.o.weight") or name.endswith(".mlp.w2.weight"):
                std *= _RESIDUAL_DAMP
            tensors[name] = rng.normal(0.0, std, size=shape)
    return EncoderModel(config=cfg, tensors=tensors)


def gelu(z: np.ndarray) -> np.ndarray:
    return 0.5 * z * (1.0 + erf(z / np.sqrt(2.0)))


def gelu_grad(z: np.ndarray) -> np.ndarray:
    phi = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    return 0.5 * (1.0 + erf(z / np.sqrt(2.0))) + z * phi


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    sigma = np.sqrt(var + LN_EPS)
    xhat = (x - mu) / sigma
    return gamma * xhat + beta, (xhat, sigma, gamma)


def layer_norm_grad(dy: np.ndarray, cache) -> np.ndarray:
    xhat, sigma, gamma = cache
    dxhat = dy * gamma
    return (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    ) / sigma


def sinusoidal_positions(n_frames: int, d_model: int) -> np.ndarray:
    pos = np.arange(n_frames)[:, None]
    dim = np.arange(0, d_model, 2)[None, :]
    angle = pos / np.power(10000.0, dim / d_model)
    pe = np.zeros((n_frames, d_model))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return pe


def _conv1d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Time-axis convolution of [T x C_in] with same-style zero padding."""
    c_out, c_in, k = weight.shape
    left, right = (k - 1) // 2, k // 2
    padded = np.pad(x, ((left, right), (0, 0)))
    windows = sliding_window_view(padded, k, axis=0)[::stride]  # (T_out, C_in, k)
    flat = windows.reshape(windows.shape[0], c_in * k)
    return flat @ weight.reshape(c_out, c_in * k).T + bias


def encode_features(model: EncoderModel, feats: FeatureMatrix) -> np.ndarray:
    """Convolutional frontend: MFCC frames to d_model frame vectors.

    The stack is linear (no activation between the two convs): frame
    features are already a nonlinear transform of the signal, and a
    linear frontend keeps the encoder output a distance-preserving view
    of them, which is what the clustering taps rely on.
    """
    if feats.feature_kind != "mfcc39":
        raise ValueError(
            f"feature encoder consumes mfcc39 features, got {feats.feature_kind!r}"
        )
    x = _conv1d(feats.data, model["conv1.weight"], model["conv1.bias"], 1)
    return _conv1d(x, model["conv2.weight"], model["conv2.bias"], model.config.encoder_stride)


def encoded_length(cfg: ModelConfig, n_frames: int) -> int:
    return (n_frames - 1) // cfg.encoder_stride + 1


def _adapter_for(adapters, layer: int, target: str):
    if adapters is None:
        return None
    return adapters.adapters.get((layer, target))


def _project(u: np.ndarray, weight: np.ndarray, bias: np.ndarray, adapter):
    """y = u W^T + b plus the scaled low-rank branch when an adapter rides along."""
    y = u @ weight.T + bias
    if adapter is None:
        return y, None
    z = u @ adapter.A.T
    y = y + adapter.scale * (z @ adapter.B.T)
    return y, z


def _forward_internal(
    model: EncoderModel,
    feats: FeatureMatrix,
    adapters=None,
    mask: np.ndarray | None = None,
    want_cache: bool = False,
    enc: np.ndarray | None = None,
):
    cfg = model.config
    if enc is None:
        enc = encode_features(model, feats)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape[0] != enc.shape[0]:
            raise ValueError(
                f"mask length {mask.shape[0]} != {enc.shape[0]} frames after encoder stride"
            )
        enc = enc.copy()
        enc[mask] = 0.0
    x = enc

    hidden = [x]
    caches = []
    H = cfg.n_heads
    dh = cfg.d_model // H
    T = x.shape[0]
    # positions feed only the query/key paths, so attention can infill
    # masked spans while the residual stream (the clustering taps) stays
    # position-free
    pe = sinusoidal_positions(T, cfg.d_model)
    split = lambda m: m.reshape(T, H, dh).transpose(1, 0, 2)

    for i in range(cfg.n_layers):
        p = f"blocks.{i}"
        u1, ln1_cache = layer_norm(x, model[f"{p}.ln1.gamma"], model[f"{p}.ln1.beta"])
        uqk = u1 + pe
        proj, z = {}, {}
        for t in ("q", "k", "v"):
            proj[t], z[t] = _project(
                uqk if t in ("q", "k") else u1,
                model[f"{p}.attn.{t}.weight"],
                model[f"{p}.attn.{t}.bias"],
                _adapter_for(adapters, i, t),
            )
        q, k, v = split(proj["q"]), split(proj["k"]), split(proj["v"])
        scores = q @ k.transpose(0, 2, 1) / np.sqrt(dh)
        scores -= scores.max(axis=-1, keepdims=True)
        expo = np.exp(scores)
        probs = expo / expo.sum(axis=-1, keepdims=True)
        ctx = (probs @ v).transpose(1, 0, 2).reshape(T, cfg.d_model)
        attn_out, z["o"] = _project(
            ctx,
            model[f"{p}.attn.o.weight"],
            model[f"{p}.attn.o.bias"],
            _adapter_for(adapters, i, "o"),
        )
        h = x + attn_out
        u2, ln2_cache = layer_norm(h, model[f"{p}.ln2.gamma"], model[f"{p}.ln2.beta"])
        z1 = u2 @ model[f"{p}.mlp.w1.weight"].T + model[f"{p}.mlp.w1.bias"]
        g1 = gelu(z1)
        y = h + g1 @ model[f"{p}.mlp.w2.weight"].T + model[f"{p}.mlp.w2.bias"]
        if not np.isfinite(y).all():
            raise NumericalError(f"non-finite hidden state after block {i}")
        hidden.append(y)
        if want_cache:
            caches.append(
                {
                    "u1": u1,
                    "uqk": uqk,
                    "ln1": ln1_cache,
                    "z": z,
                    "q": q,
                    "k": k,
                    "v": v,
                    "probs": probs,
                    "ctx": ctx,
                    "ln2": ln2_cache,
                    "u2": u2,
                    "z1": z1,
                    "g1": g1,
                }
            )
        x = y

    final, final_cache = layer_norm(x, model["final_ln.gamma"], model["final_ln.beta"])
    return hidden, final, (caches, final_cache)


def forward(
    model: EncoderModel,
    feats: FeatureMatrix,
    tap: int | str = "all",
    adapters=None,
) -> HiddenStates:
    """Run the encoder and return the requested hidden layer(s).

    Layer 0 is the feature-encoder output (with positions added); layer
    n_layers is the output of the last transformer block.
    """
    cfg = model.config
    if tap != "all":
        tap = int(tap)
        if not 0 <= tap <= cfg.n_layers:
            raise ValueError(f"tap {tap} outside [0, {cfg.n_layers}]")
    hidden, _, _ = _forward_internal(model, feats, adapters=adapters)
    if tap == "all":
        return HiddenStates(states=dict(enumerate(hidden)))
    return HiddenStates(states={tap: hidden[tap]})


def _resolve_embedding(model: EncoderModel, adapters, label_embedding):
    if label_embedding is not None:
        return np.asarray(label_embedding, dtype=np.float64)
    if adapters is not None and getattr(adapters, "label_embedding", None) is not None:
        return adapters.label_embedding
    return model["label_embedding.weight"]


def _normalize_rows(m: np.ndarray):
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    return m / np.maximum(norms, NORM_EPS), norms


def _check_loss_inputs(targets: np.ndarray, mask: np.ndarray, n_frames: int, vocab: int):
    if targets.shape[0] != n_frames:
        raise ValueError(f"{targets.shape[0]} targets for {n_frames} frames")
    if mask.shape[0] != n_frames:
        raise ValueError(f"mask length {mask.shape[0]} != {n_frames} frames")
    if not mask.any():
        raise ValueError("mask selects no frames")
    if targets.min() < 0 or targets.max() >= vocab:
        raise ValueError(f"target index outside [0, {vocab})")


def masked_prediction_loss(
    model: EncoderModel,
    feats: FeatureMatrix,
    targets: np.ndarray,
    mask: np.ndarray,
    adapters=None,
    label_embedding: np.ndarray | None = None,
) -> float:
    """Mean cross-entropy over masked frames.

    Logits are cosine similarities between projected frame states and the
    label embedding rows, scaled by 1/0.1. Masked frames are zeroed at
    the encoder output before the transformer sees them.
    """
    targets = np.asarray(targets, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    embedding = _resolve_embedding(model, adapters, label_embedding)
    _check_loss_inputs(targets, mask, encoded_length(model.config, feats.n_frames), embedding.shape[0])
    _, final, _ = _forward_internal(model, feats, adapters=adapters, mask=mask)
    logits = _cosine_logits(final[mask], model["label_proj.weight"], embedding)[0]
    return _cross_entropy(logits, targets[mask])[0]


def masked_prediction_logits(
    model: EncoderModel,
    feats: FeatureMatrix,
    mask: np.ndarray,
    adapters=None,
    label_embedding: np.ndarray | None = None,
) -> np.ndarray:
    """Logits at masked frames only, in frame order (for accuracy metrics)."""
    mask = np.asarray(mask, dtype=bool)
    embedding = _resolve_embedding(model, adapters, label_embedding)
    _, final, _ = _forward_internal(model, feats, adapters=adapters, mask=mask)
    return _cosine_logits(final[mask], model["label_proj.weight"], embedding)[0]


def _cosine_logits(states: np.ndarray, proj_weight: np.ndarray, embedding: np.ndarray):
    u = states @ proj_weight.T
    uhat, unorm = _normalize_rows(u)
    ehat, enorm = _normalize_rows(embedding)
    logits = (uhat @ ehat.T) / COSINE_TEMPERATURE
    return logits, (u, uhat, unorm, ehat, enorm)


def _cross_entropy(logits: np.ndarray, targets: np.ndarray):
    shifted = logits - logits.max(axis=1, keepdims=True)
    expo = np.exp(shifted)
    log_probs = shifted - np.log(expo.sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(targets.size), targets].mean())
    probs = expo / expo.sum(axis=1, keepdims=True)
    dlogits = probs
    dlogits[np.arange(targets.size), targets] -= 1.0
    dlogits /= targets.size
    return loss, dlogits


def _norm_backward(dhat: np.ndarray, hat: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """Gradient through row normalization x / max(|x|, eps)."""
    inner = (dhat * hat).sum(axis=-1, keepdims=True)
    safe = norms > NORM_EPS
    return np.where(safe, (dhat - hat * inner) / np.maximum(norms, NORM_EPS), dhat / NORM_EPS)


def loss_and_grads(
    model: EncoderModel,
    feats: FeatureMatrix,
    targets: np.ndarray,
    mask: np.ndarray,
    adapters,
    enc: np.ndarray | None = None,
) -> tuple[float, dict]:
    """Masked-prediction loss plus gradients for every trainable tensor.

    Gradient keys: ("lora", layer, target, "A"|"B") and "label_embedding".
    Base weights are frozen by contract, so no gradients are produced for
    them; activation gradients still flow through every block. ``enc``
    optionally supplies the (frozen, mask-independent) feature-encoder
    output so training loops can compute it once per utterance.
    """
    cfg = model.config
    targets = np.asarray(targets, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    embedding = _resolve_embedding(model, adapters, None)
    _check_loss_inputs(targets, mask, encoded_length(cfg, feats.n_frames), embedding.shape[0])

    hidden, final, (caches, final_cache) = _forward_internal(
        model, feats, adapters=adapters, mask=mask, want_cache=True, enc=enc
    )
    masked_states = final[mask]
    logits, (u, uhat, unorm, ehat, enorm) = _cosine_logits(
        masked_states, model["label_proj.weight"], embedding
    )
    loss, dlogits = _cross_entropy(logits, targets[mask])

    grads: dict = {}
    duhat = dlogits @ ehat / COSINE_TEMPERATURE
    dehat = dlogits.T @ uhat / COSINE_TEMPERATURE
    du = _norm_backward(duhat, uhat, unorm)
    grads["label_embedding"] = _norm_backward(dehat, ehat, enorm)

    dstates = np.zeros_like(final)
    dstates[mask] = du @ model["label_proj.weight"]
    dx = layer_norm_grad(dstates, final_cache)

    H, dh = cfg.n_heads, cfg.d_model // cfg.n_heads
    T = final.shape[0]
    join = lambda m: m.transpose(1, 0, 2).reshape(T, cfg.d_model)
    split = lambda m: m.reshape(T, H, dh).transpose(1, 0, 2)

    for i in reversed(range(cfg.n_layers)):
        p = f"blocks.{i}"
        c = caches[i]
        # MLP branch: y = h + w2(gelu(w1 u2 + b1)) + b2
        dg1 = dx @ model[f"{p}.mlp.w2.weight"]
        dz1 = dg1 * gelu_grad(c["z1"])
        du2 = dz1 @ model[f"{p}.mlp.w1.weight"]
        dh_total = dx + layer_norm_grad(du2, c["ln2"])

        # attention output projection (with optional LoRA branch)
        dctx, dA, dB = _project_backward(
            dh_total, c["ctx"], c["z"]["o"],
            model[f"{p}.attn.o.weight"], _adapter_for(adapters, i, "o"),
        )
        if dA is not None:
            grads[("lora", i, "o", "A")] = dA
            grads[("lora", i, "o", "B")] = dB

        dctx_h = split(dctx)
        dprobs = dctx_h @ c["v"].transpose(0, 2, 1)
        dv = c["probs"].transpose(0, 2, 1) @ dctx_h
        dscores = c["probs"] * (
            dprobs - (dprobs * c["probs"]).sum(axis=-1, keepdims=True)
        )
        dq = dscores @ c["k"] / np.sqrt(dh)
        dk = dscores.transpose(0, 2, 1) @ c["q"] / np.sqrt(dh)

        du1 = np.zeros_like(c["u1"])
        for t, dproj in (("q", join(dq)), ("k", join(dk)), ("v", join(dv))):
            # q/k consume u1 + positions, but d(u1+pe)/du1 is the identity
            dti, dA, dB = _project_backward(
                dproj, c["uqk"] if t in ("q", "k") else c["u1"], c["z"][t],
                model[f"{p}.attn.{t}.weight"], _adapter_for(adapters, i, t),
            )
            du1 += dti
            if dA is not None:
                grads[("lora", i, t, "A")] = dA
                grads[("lora", i, t, "B")] = dB

        dx = dh_total + layer_norm_grad(du1, c["ln1"])

    return loss, grads


def _project_backward(dy, u, z, weight, adapter):
    du = dy @ weight
    if adapter is None:
        return du, None, None
    dz = adapter.scale * (dy @ adapter.B)
    dB = adapter.scale * (dy.T @ z)
    dA = dz.T @ u
    du = du + dz @ adapter.A
    return du, dA, dB


def make_span_mask(
    n_frames: int, mask_prob: float, mask_span: int, rng: np.random.Generator
) -> np.ndarray:
    """Span mask: Bernoulli(mask_prob) start frames, each masking mask_span
    frames. Guaranteed non-empty (a forced span if no start fires)."""
    starts = rng.random(n_frames) < mask_prob
    mask = np.zeros(n_frames, dtype=bool)
    for s in np.flatnonzero(starts):
        mask[s : s + mask_span] = True
    if not mask.any():
        s = int(rng.integers(n_frames))
        mask[s : s + mask_span] = True
    return mask


def count_parameters(
    model: EncoderModel | ModelConfig, adapters=None
) -> dict:
    """Parameter accounting: total, trainable and their ratio.

    With adapters present, trainable = low-rank A/B pairs plus the fresh
    label embedding table; everything else is frozen base weight. Accepts
    either a built model or just its config (counted from tensor shapes,
    no allocation), and either an attached adapter set or a bare adapter
    config (counted closed-form).
    """
    cfg = model.config if isinstance(model, EncoderModel) else model
    base = sum(int(np.prod(shape)) for _, shape in parameter_table(cfg))
    lora = 0
    fresh_embedding = 0
    if adapters is not None:
        if hasattr(adapters, "adapters"):  # an attached LoraSet
            lora = sum(a.A.size + a.B.size for a in adapters.adapters.values())
            fresh_embedding = adapters.label_embedding.size
        else:  # a LoraConfig: closed-form count
            lora = cfg.n_layers * len(adapters.targets) * 2 * cfg.d_model * adapters.r
            fresh_embedding = cfg.vocab_size * cfg.label_proj_dim
    total = base + lora + fresh_embedding
    trainable = lora + fresh_embedding
    return {
        "total": total,
        "trainable": trainable,
        "fraction": trainable / total,
        "base": base,
        "lora": lora,
        "label_embedding": fresh_embedding,
    }


def save_checkpoint(path: str | Path, model: EncoderModel) -> None:
    """ENCM container: magic, config block, named f32 tensor table, frozen bitmap."""
    meta = {"config": asdict(model.config), "merged_adapters": model.merged_adapters}
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    names = [name for name, _ in parameter_table(model.config)]
    with open(path, "wb") as fh:
        fh.write(_ENCM_MAGIC)
        fh.write(struct.pack("<HI", 1, len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            arr = model.tensors[name]
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f4").tobytes())
        bitmap = bytearray((len(names) + 7) // 8)
        for idx, name in enumerate(names):
            if model.frozen.get(name, True):
                bitmap[idx // 8] |= 1 << (idx % 8)
        fh.write(struct.pack("<I", len(names)))
        fh.write(bytes(bitmap))


def load_checkpoint(path: str | Path) -> EncoderModel:
    raw = Path(path).read_bytes()
    if raw[:4] != _ENCM_MAGIC:
        raise ValueError(f"not an ENCM checkpoint: {path}")
    version, meta_len = struct.unpack("<HI", raw[4:10])
    if version != 1:
        raise ValueError(f"unsupported checkpoint version {version}")
    offset = 10
    meta = json.loads(raw[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    cfg_dict = meta["config"]
    cfg_dict["conv_kernels"] = tuple(cfg_dict["conv_kernels"])
    cfg = ModelConfig(**cfg_dict)
    (n_tensors,) = struct.unpack("<I", raw[offset : offset + 4])
    offset += 4
    tensors: dict[str, np.ndarray] = {}
    names: list[str] = []
    for _ in range(n_tensors):
        (name_len,) = struct.unpack("<H", raw[offset : offset + 2])
        offset += 2
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack("<B", raw[offset : offset + 1])
        offset += 1
        shape = struct.unpack(f"<{ndim}I", raw[offset : offset + 4 * ndim])
        offset += 4 * ndim
        count = int(np.prod(shape))
        data = np.frombuffer(raw[offset : offset + 4 * count], dtype="<f4")
        offset += 4 * count
        tensors[name] = data.reshape(shape).astype(np.float64)
        names.append(name)
    (n_bits,) = struct.unpack("<I", raw[offset : offset + 4])
    offset += 4
    bitmap = raw[offset : offset + (n_bits + 7) // 8]
    frozen = {
        name: bool(bitmap[idx // 8] >> (idx % 8) & 1) for idx, name in enumerate(names)
    }
    return EncoderModel(
        config=cfg,
        tensors=tensors,
        frozen=frozen,
        merged_adapters=list(meta.get("merged_adapters", [])),
    )
