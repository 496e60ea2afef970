"""Scratch: PE amplitude and damping effects (not shipped)."""
import time

import numpy as np

import unitlora.model as M
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
info = generate_corpus("/tmp/probe2_corpus", seed=999, n_train=40, n_test=12)
labels = read_units(info["labels"])
new_train = read_manifest(info["manifests"]["beta_train"])
new_test = read_manifest(info["manifests"]["beta_test"])
old_train = read_manifest(info["manifests"]["alpha_train"])
feats = pl.corpus_features(new_train)
feats.update(pl.corpus_features(new_test))
feats.update(pl.corpus_features(old_train))
new_ids = [e.utt_id for e in new_train.entries]
old_ids = [e.utt_id for e in old_train.entries]
K = 32
km = KMeansConfig(K=K, batch_frames=2048, n_init=20, max_batches=80)

orig_pe = M.sinusoidal_positions


def run(tag, pe_scale, damp, seed=0, steps=(1600, 2560)):
    M.sinusoidal_positions = lambda n, d: pe_scale * orig_pe(n, d)
    M._RESIDUAL_DAMP = damp
    mcfg = ModelConfig(n_layers=4, d_model=64, n_heads=4, d_ffn=128, label_proj_dim=48,
                      vocab_size=K, conv_hidden=64, conv_kernels=(3, 3),
                      mask_prob=0.18, mask_span=4)
    plan = pl.AdaptationPlan(strategy="two_iteration", K=K, lora=LoraConfig(r=8, alpha=8.0),
                             tap_released=4, tap_iter1=2, steps_iter1=steps[0],
                             steps_iter2_or_single=steps[1], kmeans=km, learning_rate=2e-3)
    base = init_model(mcfg, derive_seed(seed, "base"))
    cb_old = pl.fit_codebook(pl.hidden_frames(base, feats, old_ids, 4), old_ids,
                             plan.kmeans_config(derive_seed(seed, "km-old")), "hidden", 4)
    r_un = ev.evaluate(base, None, cb_old, new_test, reference_units=labels,
                       frame_labels=labels, feats_map=feats, system="untr")
    cb_new = pl.fit_codebook(pl.hidden_frames(base, feats, new_ids, 4), new_ids,
                             plan.kmeans_config(derive_seed(seed, "km-new")), "hidden", 4)
    r_tr = ev.evaluate(base, None, cb_new, new_test, reference_units=labels,
                       frame_labels=labels, feats_map=feats, system="trained")
    res = pl.two_iteration_adapt(base, new_train, plan, seed, feats_map=feats)
    r_2 = ev.evaluate(base, res.adapters, res.codebook, new_test, reference_units=labels,
                      frame_labels=labels, feats_map=feats, system="2iter")
    l = [m[1] for m in res.metrics]
    a, b, c = r_un.uer("beta"), r_tr.uer("beta"), r_2.uer("beta")
    print(f"[{time.time()-t0:6.0f}s] {tag}: A {a:.3f} B {b:.3f} C {c:.3f} "
        f"| pur B {r_tr.row('beta').purity:.3f} C {r_2.row('beta').purity:.3f} "
        f"| loss->{l[-1]:.2f} | A>B>C: {a > b > c}", flush=True)
    M.sinusoidal_positions = orig_pe


run("pe1.0 damp.25", 1.0, 0.25)
run("pe0.2 damp.25", 0.2, 0.25)
run("pe0.0 damp.25", 0.0, 0.25)
run("pe0.2 damp.10", 0.2, 0.10)
