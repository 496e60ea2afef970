"""Scratch: diagnose cluster purity / unit flicker (not shipped)."""
import numpy as np

import unitlora.model as M
from unitlora import evaluation as ev
from unitlora import pipeline as pl
from unitlora.corpus import read_manifest
from unitlora.kmeans import KMeansConfig, assign
from unitlora.lora import LoraConfig
from unitlora.model import ModelConfig, init_model
from unitlora.synth import generate_corpus
from unitlora.units import deduplicate, read_units
from unitlora.util import derive_seed

info = generate_corpus("/tmp/diag_corpus", seed=999, n_train=40, n_test=12)
labels = read_units(info["labels"])
train = read_manifest(info["manifests"]["beta_train"])
test = read_manifest(info["manifests"]["beta_test"])
feats = pl.corpus_features(train)
feats.update(pl.corpus_features(test))

train_ids = [e.utt_id for e in train.entries]
test_ids = [e.utt_id for e in test.entries]

K = 32
km = KMeansConfig(K=K, batch_frames=2048, n_init=20, max_batches=80)


def interior_mask(lab):
    changes = np.flatnonzero(np.diff(lab) != 0)
    bad = set()
    for c in changes:
        for d in (-1, 0, 1, 2):
            bad.add(c + d)
    return np.array([i not in bad for i in range(lab.size)])


def report(name, frames_map):
    cb = pl.fit_codebook(frames_map, train_ids, km, "hidden", None)
    hyp_all, lab_all, int_all = [], [], []
    hyp_map = {}
    for u in test_ids:
        a = assign(cb, np.asarray(frames_map[u]) if u in frames_map else None)
        hyp_map[u] = a
        hyp_all.append(a)
        lab_all.append(labels[u])
        int_all.append(interior_mask(labels[u]))
    hyp = np.concatenate(hyp_all)
    lab = np.concatenate(lab_all)
    interior = np.concatenate(int_all)
    purity = ev.cluster_purity(hyp, lab)
    ipurity = ev.cluster_purity(hyp[interior], lab[interior])
    mapping = ev.majority_map(hyp, lab)
    lens = []
    for u in test_ids:
        mapped = np.array([mapping[int(c)] for c in hyp_map[u]])
        lens.append(len(deduplicate(mapped)) / max(1, len(deduplicate(labels[u]))))
    uer = ev.corpus_uer(hyp_map, {u: labels[u] for u in test_ids}, test_ids)
    print(f"{name:28s} purity {purity:.3f} interior {ipurity:.3f} "
          f"len-ratio {np.mean(lens):.2f} uer {uer:.3f}")
    return cb


# features must cover test too for assignment
def mfcc_frames(ids):
    return {u: feats[u].data for u in ids}


all_ids = train_ids + test_ids
report("mfcc39 raw", mfcc_frames(all_ids))

static = {u: feats[u].data[:, :13] for u in all_ids}
report("mfcc static 13", static)

norm = {}
mu = np.concatenate([feats[u].data for u in train_ids]).mean(0)
sd = np.concatenate([feats[u].data for u in train_ids]).std(0)
for u in all_ids:
    norm[u] = (feats[u].data - mu) / sd
report("mfcc39 standardized", norm)

mcfg = ModelConfig(n_layers=4, d_model=64, n_heads=4, d_ffn=128, label_proj_dim=48,
                   vocab_size=K, conv_hidden=64, conv_kernels=(5, 5))
base = init_model(mcfg, derive_seed(0, "base"))
for tap in (0, 2, 4):
    hid = pl.hidden_frames(base, feats, all_ids, tap)
    report(f"hidden tap {tap} (with PE)", hid)

orig_pe = M.sinusoidal_positions
M.sinusoidal_positions = lambda n, d: np.zeros((n, d))
for tap in (0, 2, 4):
    hid = pl.hidden_frames(base, feats, all_ids, tap)
    report(f"hidden tap {tap} (no PE)", hid)
M.sinusoidal_positions = orig_pe
