"""Run configuration: one JSON document drives every CLI stage.

Sections mirror the component configs (model, lora, kmeans, plan, mix,
train, paths) plus the master seed. Validation is strict: unknown keys
anywhere are rejected before any work starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .kmeans import KMeansConfig
from .lora import DEFAULT_LR, LoraConfig
from .model import ModelConfig
from .pipeline import AdaptationPlan, MixSpec, scale_tap


class ConfigError(ValueError):
    pass


@dataclass
class TrainSettings:
    learning_rate: float = DEFAULT_LR
    log_every: int = 100


@dataclass
class PathSettings:
    new_manifest: str | None = None
    old_manifest: str | None = None
    new_test_manifest: str | None = None
    old_test_manifest: str | None = None
    labels: str | None = None
    base_checkpoint: str | None = None


@dataclass
class RunConfig:
    seed: int
    model: ModelConfig
    lora: LoraConfig
    kmeans: KMeansConfig
    plan: AdaptationPlan
    mix: MixSpec | None = None
    train: TrainSettings = field(default_factory=TrainSettings)
    paths: PathSettings = field(default_factory=PathSettings)


def _build(cls, data: dict, section: str, **extra):
    if not isinstance(data, dict):
        raise ConfigError(f"section '{section}' must be an object")
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in section '{section}': {sorted(unknown)}")
    overlap = set(data) & set(extra)
    if overlap:
        raise ConfigError(f"key(s) {sorted(overlap)} in section '{section}' are set elsewhere")
    try:
        return cls(**{**data, **extra})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section '{section}': {exc}") from exc


_SECTIONS = {"seed", "model", "lora", "kmeans", "plan", "mix", "train", "paths"}


def parse_run_config(doc: dict) -> RunConfig:
    unknown = set(doc) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    for required in ("seed", "model", "plan"):
        if required not in doc:
            raise ConfigError(f"missing required key '{required}'")
    if not isinstance(doc["seed"], int):
        raise ConfigError("'seed' must be an integer")

    model_doc = dict(doc["model"])
    if "conv_kernels" in model_doc:
        model_doc["conv_kernels"] = tuple(model_doc["conv_kernels"])
    model = _build(ModelConfig, model_doc, "model")
    lora = _build(LoraConfig, dict(doc.get("lora", {})), "lora")

    plan_doc = dict(doc["plan"])
    if "K" not in plan_doc:
        raise ConfigError("plan.K (cluster count) is required")
    # omitted taps scale the full-depth defaults (11 and 6 of 12) to this depth
    plan_doc.setdefault("tap_released", scale_tap(11, model.n_layers))
    plan_doc.setdefault("tap_iter1", scale_tap(6, model.n_layers))

    kmeans_doc = dict(doc.get("kmeans", {}))
    if "K" in kmeans_doc:
        raise ConfigError("set the cluster count in plan.K, not kmeans.K")
    kmeans = _build(KMeansConfig, kmeans_doc, "kmeans", K=plan_doc["K"])

    train = _build(TrainSettings, dict(doc.get("train", {})), "train")
    plan = _build(
        AdaptationPlan, plan_doc, "plan",
        lora=lora, kmeans=kmeans, learning_rate=train.learning_rate,
    )
    plan.validate_taps(model.n_layers)

    mix = None
    if doc.get("mix") is not None:
        mix = _build(MixSpec, dict(doc["mix"]), "mix")
    paths = _build(PathSettings, dict(doc.get("paths", {})), "paths")
    return RunConfig(
        seed=doc["seed"], model=model, lora=lora, kmeans=kmeans,
        plan=plan, mix=mix, train=train, paths=paths,
    )


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such config file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_run_config(doc)
