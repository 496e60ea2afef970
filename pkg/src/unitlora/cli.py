"""Command-line entry point: one subcommand per pipeline stage.

Every command writes its artifacts under --out together with a
provenance log (config snapshot plus content hashes of all inputs), and
a lock file keeps two runs out of the same output directory. Exit codes:
2 invalid config, 3 missing input, 4 numerical failure, 1 anything else.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import click

from . import evaluation as ev
from . import pipeline as pl
from .audio import UnsupportedAudioError, load_wav
from .config import ConfigError, RunConfig, load_run_config
from .corpus import CorpusError, read_manifest
from .features import mfcc39, read_feat, write_feat
from .kmeans import load_codebook, save_codebook
from .lora import LoraConfig, load_adapters
from .model import count_parameters, init_model, load_checkpoint, save_checkpoint
from .synth import generate_corpus
from .units import deduplicate, read_units, write_units
from .util import NumericalError, derive_seed, format_millions, sha256_path

logger = logging.getLogger("unitlora")

EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_NUMERICAL = 4


class LockError(RuntimeError):
    pass


@contextmanager
def output_lock(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockError(
            f"output directory {out_dir} is locked by another run (remove {lock} if stale)"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _write_provenance(out_dir: Path, command: str, params: dict, inputs: dict, outputs: dict) -> None:
    doc = {
        "command": command,
        "params": params,
        "inputs": {k: {"path": str(p), "sha256": sha256_path(p)} for k, p in inputs.items()},
        "outputs": {k: {"path": str(p), "sha256": sha256_path(p)} for k, p in outputs.items()},
    }
    (out_dir / "provenance.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _parse_lora_flags(text: str | None, base: LoraConfig) -> LoraConfig:
    """Override LoraConfig fields from "r=24,alpha=48,targets=qv" style flags."""
    if not text:
        return base
    values: dict = {}
    for item in text.replace(" ", ",").split(","):
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"--lora expects key=value pairs, got {item!r}")
        key, _, value = item.partition("=")
        if key == "r":
            values["r"] = int(value)
        elif key == "alpha":
            values["alpha"] = float(value)
        elif key == "init_std":
            values["init_std"] = float(value)
        elif key == "targets":
            values["targets"] = tuple(value)
        else:
            raise ConfigError(f"unknown --lora key {key!r}")
    merged = {
        "r": base.r, "alpha": base.alpha, "targets": base.targets, "init_std": base.init_std,
    }
    merged.update(values)
    try:
        return LoraConfig(**merged)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_config(path: str) -> RunConfig:
    return load_run_config(path)


def _strategy_name(flag: str) -> str:
    return {"1iter": "one_iteration", "2iter": "two_iteration"}[flag]


def _resolve_base(cfg: RunConfig, base_path: str | None, out_dir: Path, seed: int):
    """Load the released checkpoint, or deterministically stand one in."""
    if base_path:
        return load_checkpoint(base_path), Path(base_path)
    if cfg.paths.base_checkpoint:
        return load_checkpoint(cfg.paths.base_checkpoint), Path(cfg.paths.base_checkpoint)
    model = init_model(cfg.model, derive_seed(seed, "base"))
    path = out_dir / "base.encm"
    save_checkpoint(path, model)
    return model, path


@click.group()
def cli() -> None:
    """Adapt a masked-prediction speech encoder to a new language with
    low-rank adapters, and re-cluster its unit codebook to keep the old one."""
    level = os.environ.get("UNITLORA_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command("synth-corpus")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--train-utts", default=40, show_default=True, type=int, help="Train utterances per language.")
@click.option("--test-utts", default=12, show_default=True, type=int, help="Test utterances per language.")
def synth_corpus_cmd(out: str, seed: int, train_utts: int, test_utts: int) -> None:
    """Generate the deterministic synthetic bilingual corpus."""
    out_dir = Path(out)
    with output_lock(out_dir):
        info = generate_corpus(out_dir, seed=seed, n_train=train_utts, n_test=test_utts)
        outputs = {k: Path(v) for k, v in info["manifests"].items()}
        outputs["labels"] = Path(info["labels"])
        outputs["ref_units"] = Path(info["ref_units"])
        _write_provenance(out_dir, "synth-corpus",
                          {"seed": seed, "train_utts": train_utts, "test_utts": test_utts},
                          {}, outputs)
    click.echo(f"corpus written to {out_dir}")


@cli.command("features")
@click.option("--manifest", type=click.Path(exists=False), help="Corpus manifest TSV.")
@click.option("--wav", type=click.Path(exists=False), help="Single WAV file.")
@click.option("--out", required=True, type=click.Path())
def features_cmd(manifest: str | None, wav: str | None, out: str) -> None:
    """Extract 39-d MFCC features to FEAT files."""
    if bool(manifest) == bool(wav):
        raise ConfigError("exactly one of --manifest or --wav is required")
    out_dir = Path(out)
    with output_lock(out_dir):
        inputs, outputs = {}, {}
        if wav:
            feats = mfcc39(load_wav(wav))
            target = out_dir / (Path(wav).stem + ".feat")
            write_feat(target, feats)
            inputs["wav"], outputs["feat"] = Path(wav), target
        else:
            corpus = read_manifest(manifest)
            inputs["manifest"] = Path(manifest)
            for entry in corpus.entries:
                feats = mfcc39(load_wav(entry.path))
                target = out_dir / f"{entry.utt_id}.feat"
                write_feat(target, feats)
                outputs[entry.utt_id] = target
        _write_provenance(out_dir, "features", {}, inputs, outputs)
    click.echo(f"features written to {out_dir}")


@cli.command("kmeans")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--manifest", required=True, type=click.Path())
@click.option("--model", "model_path", type=click.Path(), help="Checkpoint for hidden-state clustering.")
@click.option("--adapters", "adapters_path", type=click.Path())
@click.option("--tap", type=int, help="Hidden layer to cluster (requires --model).")
@click.option("--clusters", type=int, help="Override plan.K.")
@click.option("--seed", type=int, help="Override config seed.")
@click.option("--out", required=True, type=click.Path())
def kmeans_cmd(config_path, manifest, model_path, adapters_path, tap, clusters, seed, out) -> None:
    """Fit a codebook on MFCC (default) or hidden-state features."""
    cfg = _load_config(config_path)
    run_seed = cfg.seed if seed is None else seed
    K = clusters or cfg.plan.K
    out_dir = Path(out)
    with output_lock(out_dir):
        corpus = read_manifest(manifest)
        feats_map = pl.corpus_features(corpus)
        utt_ids = [e.utt_id for e in corpus.entries]
        kcfg = cfg.plan.kmeans_config(derive_seed(run_seed, "cli-kmeans"))
        kcfg.K = K
        if kcfg.batch_frames < K:
            raise ConfigError(f"batch_frames {kcfg.batch_frames} < K {K}")
        inputs = {"manifest": Path(manifest), "config": Path(config_path)}
        if model_path:
            model = load_checkpoint(model_path)
            adapters = load_adapters(adapters_path) if adapters_path else None
            use_tap = cfg.plan.tap_released if tap is None else tap
            frames = pl.hidden_frames(model, feats_map, utt_ids, use_tap, adapters=adapters)
            codebook = pl.fit_codebook(frames, utt_ids, kcfg, "hidden", use_tap)
            inputs["model"] = Path(model_path)
            if adapters_path:
                inputs["adapters"] = Path(adapters_path)
        else:
            codebook = pl.fit_codebook(
                {u: feats_map[u].data for u in utt_ids}, utt_ids, kcfg, "mfcc39", None
            )
        target = out_dir / "codebook.kmcb"
        save_codebook(target, codebook)
        _write_provenance(out_dir, "kmeans", {"K": K, "seed": run_seed},
                          inputs, {"codebook": target})
    click.echo(f"codebook ({K} clusters) written to {target}")


@cli.command("adapt")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--manifest", type=click.Path(), help="New-language train manifest (default: paths.new_manifest).")
@click.option("--old-manifest", type=click.Path(), help="Old-language manifest for data mixing.")
@click.option("--ratio", type=float, help="Old:new duration ratio for data mixing (enables it).")
@click.option("--strategy", type=click.Choice(["1iter", "2iter"]), help="Override plan.strategy.")
@click.option("--clusters", type=int, help="Override plan.K.")
@click.option("--base", "base_path", type=click.Path(), help="Base checkpoint (default: seeded init).")
@click.option("--seed", type=int, help="Override config seed.")
@click.option("--out", required=True, type=click.Path())
def adapt_cmd(config_path, manifest, old_manifest, ratio, strategy, clusters, base_path, seed, out) -> None:
    """Run an adaptation strategy; writes adapters, codebooks and metrics."""
    cfg = _load_config(config_path)
    run_seed = cfg.seed if seed is None else seed
    plan = cfg.plan
    if strategy:
        plan.strategy = _strategy_name(strategy)
    if clusters:
        plan.K = clusters
        plan.kmeans.K = clusters
    manifest = manifest or cfg.paths.new_manifest
    if not manifest:
        raise ConfigError("no manifest: pass --manifest or set paths.new_manifest")
    out_dir = Path(out)
    with output_lock(out_dir):
        corpus = read_manifest(manifest)
        base, base_file = _resolve_base(cfg, base_path, out_dir, run_seed)
        inputs = {"manifest": Path(manifest), "config": Path(config_path), "base": base_file}
        if ratio is not None or old_manifest:
            if not (ratio is not None and old_manifest):
                raise ConfigError("data mixing needs both --old-manifest and --ratio")
            mix = cfg.mix or pl.MixSpec(new_lang="", old_lang="", old_to_new_ratio=0.5)
            old_corpus = read_manifest(old_manifest)
            mix = pl.MixSpec(
                new_lang=mix.new_lang or corpus.languages[0],
                old_lang=mix.old_lang or old_corpus.languages[0],
                old_to_new_ratio=ratio,
            )
            result = pl.preservation_datamix(base, corpus, old_corpus, mix, plan, run_seed)
            inputs["old_manifest"] = Path(old_manifest)
        else:
            result = pl.adapt(base, corpus, plan, run_seed)
        pl.write_run_dir(out_dir, plan, result)
        outputs = {"adapters": out_dir / "adapters.lora", "codebook": out_dir / "codebook.kmcb"}
        _write_provenance(out_dir, "adapt",
                          {"strategy": plan.strategy, "K": plan.K, "seed": run_seed},
                          inputs, outputs)
    click.echo(f"adaptation run written to {out_dir}")


@cli.command("recluster")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--base", "base_path", required=True, type=click.Path())
@click.option("--adapters", "adapters_path", required=True, type=click.Path())
@click.option("--old-manifest", required=True, type=click.Path())
@click.option("--new-manifest", required=True, type=click.Path())
@click.option("--tap", type=int, help="Hidden layer to re-cluster (default plan.tap_released).")
@click.option("--clusters", type=int, help="Override plan.K.")
@click.option("--sample-seconds", type=float, help="Per-language sample duration (default: parity maximum).")
@click.option("--seed", type=int, help="Override config seed.")
@click.option("--out", required=True, type=click.Path())
def recluster_cmd(config_path, base_path, adapters_path, old_manifest, new_manifest,
                  tap, clusters, sample_seconds, seed, out) -> None:
    """Preservation: refit the codebook on adapted-model states of both languages."""
    cfg = _load_config(config_path)
    run_seed = cfg.seed if seed is None else seed
    out_dir = Path(out)
    with output_lock(out_dir):
        base = load_checkpoint(base_path)
        adapters = load_adapters(adapters_path)
        old_corpus = read_manifest(old_manifest)
        new_corpus = read_manifest(new_manifest)
        codebook = pl.preservation_recluster(
            base, adapters, old_corpus, new_corpus,
            tap=cfg.plan.tap_released if tap is None else tap,
            K=clusters or cfg.plan.K, seed=run_seed,
            sample_seconds=sample_seconds, kmeans=cfg.kmeans,
        )
        target = out_dir / "codebook_recluster.kmcb"
        save_codebook(target, codebook)
        _write_provenance(out_dir, "recluster", {"seed": run_seed},
                          {"config": Path(config_path), "base": Path(base_path),
                           "adapters": Path(adapters_path),
                           "old_manifest": Path(old_manifest), "new_manifest": Path(new_manifest)},
                          {"codebook": target})
    click.echo(f"re-clustered codebook written to {target}")


@cli.command("units")
@click.option("--codebook", "codebook_path", required=True, type=click.Path())
@click.option("--features", "features_path", type=click.Path(), help="Single FEAT file.")
@click.option("--manifest", type=click.Path(), help="Corpus manifest (WAVs are featurized on the fly).")
@click.option("--model", "model_path", type=click.Path(), help="Checkpoint, required for hidden-state codebooks.")
@click.option("--adapters", "adapters_path", type=click.Path())
@click.option("--frames", is_flag=True, help="Emit frame-level indices without de-duplication.")
@click.option("--out", required=True, type=click.Path())
def units_cmd(codebook_path, features_path, manifest, model_path, adapters_path, frames, out) -> None:
    """Tokenize features into (de-duplicated) discrete units."""
    if bool(features_path) == bool(manifest):
        raise ConfigError("exactly one of --features or --manifest is required")
    out_dir = Path(out)
    with output_lock(out_dir):
        codebook = load_codebook(codebook_path)
        model = load_checkpoint(model_path) if model_path else None
        adapters = load_adapters(adapters_path) if adapters_path else None
        inputs = {"codebook": Path(codebook_path)}
        if features_path:
            feats_map = {Path(features_path).stem: read_feat(features_path)}
            inputs["features"] = Path(features_path)
        else:
            corpus = read_manifest(manifest)
            feats_map = pl.corpus_features(corpus)
            inputs["manifest"] = Path(manifest)
        utt_ids = sorted(feats_map)
        assignments = pl.assign_targets(codebook, feats_map, utt_ids, model=model, adapters=adapters)
        rows = []
        for utt in utt_ids:
            if frames:
                rows.append((utt, assignments[utt]))
            else:
                rows.append(deduplicate(assignments[utt], source=utt))
        target = out_dir / "units.txt"
        write_units(target, rows)
        if model_path:
            inputs["model"] = Path(model_path)
        if adapters_path:
            inputs["adapters"] = Path(adapters_path)
        _write_provenance(out_dir, "units", {"frames": frames}, inputs, {"units": target})
    click.echo(f"units written to {target}")


@cli.command("eval")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--adapters", "adapters_path", type=click.Path())
@click.option("--codebook", "codebook_path", required=True, type=click.Path())
@click.option("--manifest", required=True, type=click.Path())
@click.option("--reference", "reference_path", type=click.Path(), help="Frame-level reference units (unit-file format).")
@click.option("--labels", "labels_path", type=click.Path(), help="Ground-truth frame labels for purity.")
@click.option("--baseline", "baseline_path", type=click.Path(), help="Earlier report.csv for the forgetting delta.")
@click.option("--old-lang", help="Language the forgetting delta is computed for.")
@click.option("--system", default="system", show_default=True)
@click.option("--out", required=True, type=click.Path())
def eval_cmd(config_path, model_path, adapters_path, codebook_path, manifest,
             reference_path, labels_path, baseline_path, old_lang, system, out) -> None:
    """Score a system; writes report.csv."""
    _load_config(config_path)  # validated for schema errors even if unused here
    out_dir = Path(out)
    with output_lock(out_dir):
        model = load_checkpoint(model_path)
        adapters = load_adapters(adapters_path) if adapters_path else None
        codebook = load_codebook(codebook_path)
        corpus = read_manifest(manifest)
        reference = read_units(reference_path) if reference_path else None
        labels = read_units(labels_path) if labels_path else None
        lora_cfg = adapters.config if adapters else None
        params = count_parameters(model, lora_cfg)
        report = ev.evaluate(
            model, adapters, codebook, corpus,
            reference_units=reference, frame_labels=labels,
            system=system, param_summary=params,
        )
        if baseline_path:
            if not old_lang:
                raise ConfigError("--baseline needs --old-lang")
            before_rows = ev.read_report_csv(baseline_path)
            before = [r for r in before_rows if r["lang"] == old_lang and r["uer"]]
            if not before:
                raise ConfigError(f"baseline report has no uer for language {old_lang!r}")
            report.forgetting_delta = report.uer(old_lang) - float(before[0]["uer"])
            report.forgetting_lang = old_lang
        target = out_dir / "report.csv"
        ev.write_report_csv(target, [report])
        inputs = {"config": Path(config_path), "model": Path(model_path),
                  "codebook": Path(codebook_path), "manifest": Path(manifest)}
        for key, p in (("adapters", adapters_path), ("reference", reference_path),
                       ("labels", labels_path), ("baseline", baseline_path)):
            if p:
                inputs[key] = Path(p)
        _write_provenance(out_dir, "eval", {"system": system}, inputs, {"report": target})
    for row in report.rows:
        click.echo(f"{row.system} {row.lang}: uer={row.uer:.4f} "
                   f"masked_acc={row.masked_acc:.4f} purity={row.purity:.4f}")
    click.echo(f"report written to {target}")


@cli.command("count-params")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--lora", "lora_flags", help='Adapter overrides, e.g. "r=24,alpha=24,targets=qkvo".')
def count_params_cmd(config_path, lora_flags) -> None:
    """Parameter accounting for the configured model shape plus adapters."""
    cfg = _load_config(config_path)
    lora_cfg = _parse_lora_flags(lora_flags, cfg.lora)
    counts = count_parameters(cfg.model, lora_cfg)
    click.echo(f"base: {counts['base']:,} ({format_millions(counts['base'])})")
    click.echo(f"lora: {counts['lora']:,} ({format_millions(counts['lora'])})")
    click.echo(
        f"label_embedding: {counts['label_embedding']:,} "
        f"({format_millions(counts['label_embedding'])})"
    )
    click.echo(f"total: {counts['total']:,} ({format_millions(counts['total'])})")
    click.echo(f"trainable: {counts['trainable']:,} ({format_millions(counts['trainable'])})")
    click.echo(f"fraction: {100.0 * counts['fraction']:.3f}%")


@cli.command("run-all")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seed", type=int, help="Override config seed.")
@click.option("--out", required=True, type=click.Path())
def run_all_cmd(config_path, seed, out) -> None:
    """Full experiment: corpus, baselines, adaptation, preservation, report."""
    cfg = _load_config(config_path)
    run_seed = cfg.seed if seed is None else seed
    out_dir = Path(out)
    with output_lock(out_dir):
        summary = run_all(cfg, run_seed, out_dir, config_path=config_path)
    for line in summary["log"]:
        click.echo(line)
    click.echo(f"report written to {summary['report']}")


def run_all(cfg: RunConfig, seed: int, out_dir: Path, config_path: str | None = None) -> dict:
    """The run-all pipeline behind the CLI command (importable for tests)."""
    log: list[str] = []
    if cfg.paths.new_manifest:
        new_train = read_manifest(cfg.paths.new_manifest)
        old_train = read_manifest(cfg.paths.old_manifest)
        new_test = read_manifest(cfg.paths.new_test_manifest)
        old_test = read_manifest(cfg.paths.old_test_manifest)
        labels = read_units(cfg.paths.labels) if cfg.paths.labels else None
    else:
        info = generate_corpus(out_dir / "corpus", seed=derive_seed(seed, "corpus"))
        new_lang = cfg.mix.new_lang if cfg.mix else "beta"
        old_lang = cfg.mix.old_lang if cfg.mix else "alpha"
        new_train = read_manifest(info["manifests"][f"{new_lang}_train"])
        new_test = read_manifest(info["manifests"][f"{new_lang}_test"])
        old_train = read_manifest(info["manifests"][f"{old_lang}_train"])
        old_test = read_manifest(info["manifests"][f"{old_lang}_test"])
        labels = read_units(info["labels"])
    old_lang = old_train.languages[0]
    new_lang = new_train.languages[0]

    feats = {}
    for corpus in (new_train, new_test, old_train, old_test):
        feats.update(pl.corpus_features(corpus))

    base, _ = _resolve_base(cfg, None, out_dir, seed)
    plan = cfg.plan
    tap = plan.tap_released

    def frames_of(corpus, adapters=None):
        ids = [e.utt_id for e in corpus.entries]
        return pl.hidden_frames(base, feats, ids, tap, adapters=adapters), ids

    # released-style codebook: trained on the old language only
    old_frames, old_ids = frames_of(old_train)
    cb_old = pl.fit_codebook(
        old_frames, old_ids, plan.kmeans_config(derive_seed(seed, "km-old")), "hidden", tap
    )
    save_codebook(out_dir / "codebook_old.kmcb", cb_old)

    new_frames, new_ids = frames_of(new_train)
    cb_new = pl.fit_codebook(
        new_frames, new_ids, plan.kmeans_config(derive_seed(seed, "km-new")), "hidden", tap
    )
    save_codebook(out_dir / "codebook_new.kmcb", cb_new)

    reports = []
    reports.append(ev.evaluate(base, None, cb_old, new_test, reference_units=labels,
                               frame_labels=labels, system="unadapted+untrained_km",
                               feats_map=feats))
    reports.append(ev.evaluate(base, None, cb_new, new_test, reference_units=labels,
                               frame_labels=labels, system="unadapted+trained_km",
                               feats_map=feats))

    result = pl.adapt(base, new_train, plan, seed, feats_map=feats)
    run_dir = out_dir / "run"
    pl.write_run_dir(run_dir, plan, result)
    adapted_name = f"adapted_{plan.strategy}"
    params = count_parameters(base, result.adapters)
    reports.append(ev.evaluate(base, result.adapters, result.codebook, new_test,
                               reference_units=labels, frame_labels=labels,
                               system=adapted_name, feats_map=feats,
                               param_summary=params))

    # forgetting: frozen reference = base model + old codebook on the old test set
    ref_frames = {
        utt: arr for utt, arr in
        pl.assign_targets(cb_old, feats, [e.utt_id for e in old_test.entries], model=base).items()
    }
    before = ev.evaluate(base, result.adapters, result.codebook, old_test,
                         reference_units=ref_frames, system=f"{adapted_name}+own_km",
                         feats_map=feats)
    reports.append(before)

    cb_re = pl.preservation_recluster(
        base, result.adapters, old_train, new_train, tap=tap, K=plan.K,
        seed=derive_seed(seed, "recluster"), kmeans=cfg.kmeans, feats_map=feats,
    )
    save_codebook(out_dir / "codebook_recluster.kmcb", cb_re)
    after = ev.evaluate(base, result.adapters, cb_re, old_test,
                        reference_units=ref_frames, system=f"{adapted_name}+recluster",
                        feats_map=feats)
    ev.with_forgetting(after, before, old_lang)
    reports.append(after)
    reports.append(ev.evaluate(base, result.adapters, cb_re, new_test,
                               reference_units=labels, frame_labels=labels,
                               system=f"{adapted_name}+recluster", feats_map=feats))

    report_path = out_dir / "report.csv"
    ev.write_report_csv(report_path, reports)
    inputs = {}
    if config_path:
        inputs["config"] = Path(config_path)
    _write_provenance(
        out_dir, "run-all", {"seed": seed, "strategy": plan.strategy, "K": plan.K},
        inputs,
        {"report": report_path, "adapters": run_dir / "adapters.lora",
         "codebook": run_dir / "codebook.kmcb",
         "codebook_old": out_dir / "codebook_old.kmcb",
         "codebook_new": out_dir / "codebook_new.kmcb",
         "codebook_recluster": out_dir / "codebook_recluster.kmcb"},
    )
    for report in reports:
        for row in report.rows:
            log.append(f"{row.system} [{row.lang}] uer={row.uer:.4f}")
    return {"report": report_path, "log": log, "reports": reports}


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.exceptions.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except FileNotFoundError as exc:
        click.echo(f"missing input: {exc}", err=True)
        sys.exit(EXIT_MISSING)
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except (CorpusError, UnsupportedAudioError, ValueError, LockError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
