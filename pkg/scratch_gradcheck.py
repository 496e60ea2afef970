"""Scratch: finite-difference validation of loss_and_grads (not shipped)."""
import numpy as np

from unitlora.features import FeatureMatrix
from unitlora.lora import LoraConfig, attach
from unitlora.model import ModelConfig, init_model, loss_and_grads, masked_prediction_loss, make_span_mask
from unitlora.util import derive_rng

cfg = ModelConfig(
    n_layers=2, d_model=16, n_heads=2, d_ffn=24, label_proj_dim=8,
    vocab_size=12, conv_hidden=10, conv_kernels=(3, 5),
)
model = init_model(cfg, seed=7)
adapters = attach(model, LoraConfig(r=3, alpha=3.0), seed=11)
rng = derive_rng(123, "scratch")
T = 14
feats = FeatureMatrix(rng.normal(0, 1.0, size=(T, 39)), feature_kind="mfcc39")
targets = rng.integers(0, cfg.vocab_size, size=T)
mask = make_span_mask(T, 0.3, 3, rng)
print("masked frames:", mask.sum())

# give B nonzero values so its gradient path is exercised away from zero
for ad in adapters.adapters.values():
    ad.B[:] = derive_rng(5, "Bfill").normal(0, 0.02, size=ad.B.shape)

loss, grads = loss_and_grads(model, feats, targets, mask, adapters)
print("loss", loss)

eps = 1e-5
worst = 0.0


def fd_check(arr, key, indices):
    global worst
    g = grads[key]
    for idx in indices:
        orig = arr[idx]
        arr[idx] = orig + eps
        lp = masked_prediction_loss(model, feats, targets, mask, adapters=adapters)
        arr[idx] = orig - eps
        lm = masked_prediction_loss(model, feats, targets, mask, adapters=adapters)
        arr[idx] = orig
        fd = (lp - lm) / (2 * eps)
        an = g[idx]
        rel = abs(an - fd) / max(abs(fd), abs(an), 1e-12)
        worst = max(worst, rel)
        print(f"{key} {idx}: analytic {an:+.8e} fd {fd:+.8e} rel {rel:.2e}")


check_rng = derive_rng(9, "pick")
for (layer, tgt), ad in list(adapters.adapters.items())[:4]:
    iA = tuple(int(check_rng.integers(s)) for s in ad.A.shape)
    iB = tuple(int(check_rng.integers(s)) for s in ad.B.shape)
    fd_check(ad.A, ("lora", layer, tgt, "A"), [iA])
    fd_check(ad.B, ("lora", layer, tgt, "B"), [iB])
emb = adapters.label_embedding
idxs = [tuple(int(check_rng.integers(s)) for s in emb.shape) for _ in range(3)]
fd_check(emb, "label_embedding", idxs)
print("worst rel err:", worst)
