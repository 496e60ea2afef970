"""Scratch: grid a few training settings on one seed (not shipped)."""
import sys
import time

import numpy as np

from unitlora import evaluation as ev
from unitlora import pipeline as pl
from unitlora.corpus import read_manifest
from unitlora.kmeans import KMeansConfig, assign
from unitlora.lora import LoraConfig
from unitlora.model import ModelConfig, init_model
from unitlora.synth import generate_corpus
from unitlora.units import deduplicate, read_units
from unitlora.util import derive_seed

t0 = time.time()
info = generate_corpus("/tmp/probe2_corpus", seed=999, n_train=40, n_test=12)
labels = read_units(info["labels"])
new_train = read_manifest(info["manifests"]["beta_train"])
new_test = read_manifest(info["manifests"]["beta_test"])
feats = pl.corpus_features(new_train)
feats.update(pl.corpus_features(new_test))
new_ids = [e.utt_id for e in new_train.entries]
test_ids = [e.utt_id for e in new_test.entries]
K = 32
km = KMeansConfig(K=K, batch_frames=2048, n_init=20, max_batches=80)


def run(tag, kernels, mask_prob, mask_span, lr, steps1, steps2, r, alpha, seed=0):
    mcfg = ModelConfig(n_layers=4, d_model=64, n_heads=4, d_ffn=128, label_proj_dim=48,
                      vocab_size=K, conv_hidden=64, conv_kernels=kernels,
                      mask_prob=mask_prob, mask_span=mask_span)
    plan = pl.AdaptationPlan(strategy="two_iteration", K=K, lora=LoraConfig(r=r, alpha=alpha),
                             tap_released=4, tap_iter1=2, steps_iter1=steps1,
                             steps_iter2_or_single=steps2, kmeans=km, learning_rate=lr)
    base = init_model(mcfg, derive_seed(seed, "base"))
    cb_new = pl.fit_codebook(pl.hidden_frames(base, feats, new_ids, 4), new_ids,
                             plan.kmeans_config(derive_seed(seed, "km-new")), "hidden", 4)
    r_tr = ev.evaluate(base, None, cb_new, new_test, reference_units=labels,
                       frame_labels=labels, feats_map=feats, system="trained")
    res = pl.two_iteration_adapt(base, new_train, plan, seed, feats_map=feats)
    r_2 = ev.evaluate(base, res.adapters, res.codebook, new_test, reference_units=labels,
                      frame_labels=labels, feats_map=feats, system="2iter")
    l1 = [m[1] for m in res.metrics]
    print(f"[{time.time()-t0:6.0f}s] {tag}: B uer {r_tr.uer('beta'):.3f}/pur {r_tr.row('beta').purity:.3f}"
          f" | C uer {r_2.uer('beta'):.3f}/pur {r_2.row('beta').purity:.3f}"
          f" | loss {l1[0]:.2f}->{l1[-1]:.2f} | C<B: {r_2.uer('beta') < r_tr.uer('beta')}",
          flush=True)


run("base setup  sp10 lr5e-4", (5, 5), 0.08, 10, 5e-4, 800, 1280, 8, 8.0)
run("span4 p.18  lr2e-3     ", (5, 5), 0.18, 4, 2e-3, 800, 1280, 8, 8.0)
run("span4 p.18  lr2e-3 k33 ", (3, 3), 0.18, 4, 2e-3, 800, 1280, 8, 8.0)
run("span3 p.25  lr2e-3 k33 ", (3, 3), 0.25, 3, 2e-3, 800, 1280, 8, 8.0)
run("span4 p.18  lr2e-3 a16 ", (3, 3), 0.18, 4, 2e-3, 800, 1280, 8, 16.0)
run("span4 p.18  lr2e-3 long", (3, 3), 0.18, 4, 2e-3, 1600, 2560, 8, 8.0)
