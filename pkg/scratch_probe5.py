"""Scratch: full criterion-8/9 chain on a fixed base (not shipped)."""
import shutil
import sys
import time

import numpy as np

import unitlora.model as M
import unitlora.synth as S
from unitlora import evaluation as ev
from unitlora import pipeline as pl
from unitlora.corpus import read_manifest
from unitlora.kmeans import KMeansConfig
from unitlora.lora import LoraConfig
from unitlora.model import ModelConfig, init_model
from unitlora.synth import generate_corpus
from unitlora.units import read_units
from unitlora.util import derive_seed

t0 = time.time()
M._RESIDUAL_DAMP = 0.10
S._NOISE_AMP = 0.03
BASE_SEED = int(sys.argv[1]) if len(sys.argv) > 1 else 202
LR = float(sys.argv[2]) if len(sys.argv) > 2 else 2e-3
S1 = int(sys.argv[3]) if len(sys.argv) > 3 else 1600
S2 = int(sys.argv[4]) if len(sys.argv) > 4 else 2560
R = int(sys.argv[5]) if len(sys.argv) > 5 else 8

K = 32
shutil.rmtree("/tmp/c8_corpus", ignore_errors=True)
info = generate_corpus("/tmp/c8_corpus", seed=999, n_train=40, n_test=24)
labels = read_units(info["labels"])
new_train = read_manifest(info["manifests"]["beta_train"])
new_test = read_manifest(info["manifests"]["beta_test"])
old_train = read_manifest(info["manifests"]["alpha_train"])
old_test = read_manifest(info["manifests"]["alpha_test"])
feats = {}
for c in (new_train, new_test, old_train, old_test):
    feats.update(pl.corpus_features(c))
new_ids = [e.utt_id for e in new_train.entries]
old_ids = [e.utt_id for e in old_train.entries]
old_test_ids = [e.utt_id for e in old_test.entries]

mcfg = ModelConfig(n_layers=4, d_model=64, n_heads=4, d_ffn=128, label_proj_dim=48,
                  vocab_size=K, conv_hidden=64, conv_kernels=(3, 3),
                  mask_prob=0.25, mask_span=4)
base = init_model(mcfg, BASE_SEED)
km = KMeansConfig(K=K, batch_frames=2048, n_init=20, max_batches=200)

ok8 = ok9 = 0
for seed in (0, 1, 2):
    plan = pl.AdaptationPlan(strategy="two_iteration", K=K, lora=LoraConfig(r=R, alpha=float(R)),
                             tap_released=4, tap_iter1=3, steps_iter1=S1,
                             steps_iter2_or_single=S2, kmeans=km, learning_rate=LR)
    mk = lambda tag: plan.kmeans_config(derive_seed(seed, tag))
    cb_old = pl.fit_codebook(pl.hidden_frames(base, feats, old_ids, 4), old_ids,
                             mk("km-old"), "hidden", 4)
    cb_new = pl.fit_codebook(pl.hidden_frames(base, feats, new_ids, 4), new_ids,
                             mk("km-new"), "hidden", 4)
    a = ev.evaluate(base, None, cb_old, new_test, reference_units=labels, feats_map=feats).uer("beta")
    b = ev.evaluate(base, None, cb_new, new_test, reference_units=labels, feats_map=feats).uer("beta")

    res2 = pl.two_iteration_adapt(base, new_train, plan, seed, feats_map=feats)
    c = ev.evaluate(base, res2.adapters, res2.codebook, new_test, reference_units=labels,
                    feats_map=feats).uer("beta")
    plan1 = pl.AdaptationPlan(strategy="one_iteration", K=K, lora=plan.lora, tap_released=4,
                              tap_iter1=2, steps_iter1=S1, steps_iter2_or_single=S2,
                              kmeans=km, learning_rate=LR)
    res1 = pl.one_iteration_adapt(base, new_train, plan1, seed, feats_map=feats)
    d = ev.evaluate(base, res1.adapters, res1.codebook, new_test, reference_units=labels,
                    feats_map=feats).uer("beta")

    ref_frames = pl.assign_targets(cb_old, feats, old_test_ids, model=base)
    before = ev.evaluate(base, res2.adapters, res2.codebook, old_test,
                         reference_units=ref_frames, feats_map=feats)
    cb_re = pl.preservation_recluster(base, res2.adapters, old_train, new_train, tap=4, K=K,
                                      seed=derive_seed(seed, "re"), kmeans=km, feats_map=feats)
    after = ev.evaluate(base, res2.adapters, cb_re, old_test,
                        reference_units=ref_frames, feats_map=feats)
    new_after = ev.evaluate(base, res2.adapters, cb_re, new_test,
                            reference_units=labels, feats_map=feats)
    ob, oa = before.uer("alpha"), after.uer("alpha")
    na = new_after.uer("beta")
    rel = (na - c) / max(c, 1e-9)
    l = [m[1] for m in res2.metrics]
    g8 = (a > b > c) and (c <= d)
    g9 = (oa < ob) and (rel < 0.25)
    ok8 += g8; ok9 += g9
    print(f"[{time.time()-t0:6.0f}s] seed {seed}: A {a:.3f} B {b:.3f} C {c:.3f} D {d:.3f} "
          f"loss->{l[-1]:.2f} | old {ob:.3f}->{oa:.3f} newrel {rel:+.1%} | c8 {g8} c9 {g9}", flush=True)
print(f"criterion8 {ok8}/3, criterion9 {ok9}/3")
