"""Scratch: pilot the directional acceptance experiments (not shipped)."""
import sys
import time

import numpy as np

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


def stamp(msg):
    print(f"[{time.time() - t0:7.1f}s] {msg}", flush=True)


K = int(sys.argv[1]) if len(sys.argv) > 1 else 32
STEPS1 = int(sys.argv[2]) if len(sys.argv) > 2 else 800
STEPS2 = int(sys.argv[3]) if len(sys.argv) > 3 else 1280

corpus_dir = "/tmp/pilot_corpus"
info = generate_corpus(corpus_dir, seed=999, n_train=40, n_test=12)
labels = read_units(info["labels"])
new_train = read_manifest(info["manifests"]["beta_train"])
new_test = read_manifest(info["manifests"]["beta_test"])
old_train = read_manifest(info["manifests"]["alpha_train"])
old_test = read_manifest(info["manifests"]["alpha_test"])
stamp("corpus ready")

feats = {}
for c in (new_train, new_test, old_train, old_test):
    feats.update(pl.corpus_features(c))
stamp(f"mfcc ready ({sum(f.n_frames for f in feats.values())} frames)")

mcfg = ModelConfig(
    n_layers=4, d_model=64, n_heads=4, d_ffn=128, label_proj_dim=48,
    vocab_size=K, conv_hidden=64, conv_kernels=(5, 5),
)
km = KMeansConfig(K=K, batch_frames=2048, n_init=20, max_batches=80, reassign_tol=1e-4)

plan = pl.AdaptationPlan(
    strategy="two_iteration", K=K, lora=LoraConfig(r=8, alpha=8.0),
    tap_released=4, tap_iter1=2, steps_iter1=STEPS1, steps_iter2_or_single=STEPS2,
    kmeans=km,
)

for seed in (0, 1, 2):
    base = init_model(mcfg, derive_seed(seed, "base"))
    tap = plan.tap_released

    old_ids = [e.utt_id for e in old_train.entries]
    cb_old = pl.fit_codebook(
        pl.hidden_frames(base, feats, old_ids, tap), old_ids,
        plan.kmeans_config(derive_seed(seed, "km-old")), "hidden", tap)
    new_ids = [e.utt_id for e in new_train.entries]
    cb_new = pl.fit_codebook(
        pl.hidden_frames(base, feats, new_ids, tap), new_ids,
        plan.kmeans_config(derive_seed(seed, "km-new")), "hidden", tap)
    stamp(f"seed {seed}: baseline codebooks fit")

    r_untrained = ev.evaluate(base, None, cb_old, new_test, reference_units=labels,
                              frame_labels=labels, feats_map=feats, system="untrained")
    r_trained = ev.evaluate(base, None, cb_new, new_test, reference_units=labels,
                            frame_labels=labels, feats_map=feats, system="trained")

    res2 = pl.two_iteration_adapt(base, new_train, plan, seed, feats_map=feats)
    stamp(f"seed {seed}: 2-iter adapted")
    r_2iter = ev.evaluate(base, res2.adapters, res2.codebook, new_test,
                          reference_units=labels, frame_labels=labels,
                          feats_map=feats, system="2iter")

    plan1 = pl.AdaptationPlan(
        strategy="one_iteration", K=K, lora=plan.lora, tap_released=tap,
        tap_iter1=plan.tap_iter1, steps_iter1=STEPS1, steps_iter2_or_single=STEPS2,
        kmeans=km)
    res1 = pl.one_iteration_adapt(base, new_train, plan1, seed, feats_map=feats)
    stamp(f"seed {seed}: 1-iter adapted")
    r_1iter = ev.evaluate(base, res1.adapters, res1.codebook, new_test,
                          reference_units=labels, frame_labels=labels,
                          feats_map=feats, system="1iter")

    # preservation
    old_test_ids = [e.utt_id for e in old_test.entries]
    ref_frames = pl.assign_targets(cb_old, feats, old_test_ids, model=base)
    before = ev.evaluate(base, res2.adapters, res2.codebook, old_test,
                         reference_units=ref_frames, feats_map=feats, system="before")
    cb_re = pl.preservation_recluster(base, res2.adapters, old_train, new_train,
                                      tap=tap, K=K, seed=derive_seed(seed, "re"),
                                      kmeans=km, feats_map=feats)
    after = ev.evaluate(base, res2.adapters, cb_re, old_test,
                        reference_units=ref_frames, feats_map=feats, system="after")
    new_after = ev.evaluate(base, res2.adapters, cb_re, new_test,
                            reference_units=labels, frame_labels=labels,
                            feats_map=feats, system="new-after")
    stamp(f"seed {seed}: preservation done")

    lang_new, lang_old = "beta", "alpha"
    u_un = r_untrained.uer(lang_new)
    u_tr = r_trained.uer(lang_new)
    u_2 = r_2iter.uer(lang_new)
    u_1 = r_1iter.uer(lang_new)
    print(f"  seed {seed} NEW: untrained {u_un:.4f} > trained {u_tr:.4f} > 2iter {u_2:.4f}; "
          f"1iter {u_1:.4f} (2iter<=1iter: {u_2 <= u_1})")
    print(f"           purity: untr {r_untrained.row(lang_new).purity:.3f} "
          f"tr {r_trained.row(lang_new).purity:.3f} 2iter {r_2iter.row(lang_new).purity:.3f} "
          f"1iter {r_1iter.row(lang_new).purity:.3f}")
    ob, oa = before.uer(lang_old), after.uer(lang_old)
    nb, na = u_2, new_after.uer(lang_new)
    rel = (na - nb) / max(nb, 1e-9)
    print(f"  seed {seed} OLD: before {ob:.4f} after {oa:.4f} (improved: {oa < ob}); "
          f"new degradation {nb:.4f}->{na:.4f} rel {rel:+.2%} (<25%: {rel < 0.25})")
    ok8 = (u_un > u_tr > u_2) and (u_2 <= u_1)
    ok9 = (oa < ob) and (rel < 0.25)
    print(f"  seed {seed}: criterion8 {ok8}, criterion9 {ok9}")
