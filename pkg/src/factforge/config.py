"""Experiment configuration: one JSON file, flag overrides, bounds checks.

Recognised top-level sections (all optional; anything omitted falls back to
the documented defaults): "seed", "synth", "filters", "vocab", "aligner",
"generator", "rl". Section keys mirror the corresponding dataclass fields.
"""

from __future__ import annotations

import json
from pathlib import Path

from .aligner import AlignerConfig
from .corpus import CorpusError, FilterLimits, VocabCaps
from .generator import GeneratorConfig
from .reinforce import RLConfig

__all__ = [
    "ConfigError",
    "load_config",
    "build_aligner_config",
    "build_generator_config",
    "build_rl_config",
    "build_filter_limits",
    "build_vocab_caps",
]

# Block sizes differ per training regime.
DEFAULT_BLOCK_SIZES = {"base": 40, "mtl": 60, "rl": 50}


class ConfigError(ValueError):
    pass


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config root must be an object")
    return cfg


def _section(cfg: dict, name: str) -> dict:
    section = cfg.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return dict(section)


def _apply(defaults: dict, section: dict, overrides: dict, known: set[str], name: str) -> dict:
    merged = dict(defaults)
    for src in (section, overrides):
        for key, value in src.items():
            if value is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown {name} option {key!r}")
            merged[key] = value
    return merged


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def build_aligner_config(cfg: dict, **overrides) -> AlignerConfig:
    defaults = {f: getattr(AlignerConfig, f) for f in (
        "hidden_dim", "margin", "negatives_per_example", "threshold_coef",
        "abs_threshold", "epochs", "batch_size", "lr", "dropout", "dev_frac",
        "seed", "dtype", "shared_lexical_init", "embedding_file",
    )}
    defaults["tune_coef_grid"] = AlignerConfig.tune_coef_grid
    merged = _apply(defaults, _section(cfg, "aligner"), overrides, set(defaults), "aligner")
    merged["tune_coef_grid"] = tuple(merged["tune_coef_grid"])
    _check(merged["hidden_dim"] >= 1, "aligner.hidden_dim must be >= 1")
    _check(0.0 <= merged["dropout"] < 1.0, "aligner.dropout must be in [0, 1)")
    _check(0.0 < merged["dev_frac"] < 1.0, "aligner.dev_frac must be in (0, 1)")
    _check(merged["epochs"] >= 1, "aligner.epochs must be >= 1")
    _check(merged["lr"] > 0, "aligner.lr must be positive")
    return AlignerConfig(**merged)


def build_generator_config(cfg: dict, mode: str = "base", **overrides) -> GeneratorConfig:
    defaults = {f: getattr(GeneratorConfig, f) for f in (
        "hidden_dim", "max_decode_len", "decode", "epochs", "batch_size",
        "lr", "dropout", "seed", "dtype",
    )}
    defaults["block_size"] = DEFAULT_BLOCK_SIZES.get(mode, 40)
    defaults["lambda_schedule"] = GeneratorConfig.lambda_schedule
    merged = _apply(defaults, _section(cfg, "generator"), overrides, set(defaults), "generator")
    merged["lambda_schedule"] = tuple(
        (int(a), None if b is None else int(b), float(c))
        for a, b, c in merged["lambda_schedule"]
    )
    _check(merged["hidden_dim"] >= 1, "generator.hidden_dim must be >= 1")
    _check(0.0 <= merged["dropout"] < 1.0, "generator.dropout must be in [0, 1)")
    _check(merged["epochs"] >= 1, "generator.epochs must be >= 1")
    _check(merged["lr"] > 0, "generator.lr must be positive")
    for _, _, lam in merged["lambda_schedule"]:
        _check(0.0 <= lam <= 1.0, "lambda values must be in [0, 1]")
    return GeneratorConfig(**merged)


def build_rl_config(cfg: dict, **overrides) -> RLConfig:
    defaults = {f: getattr(RLConfig, f) for f in (
        "reward_scale", "kappa", "mho", "block_size", "epochs", "lr",
        "baseline_lr", "seed",
    )}
    merged = _apply(defaults, _section(cfg, "rl"), overrides, set(defaults), "rl")
    return RLConfig(**merged)


def build_filter_limits(cfg: dict, kind: str = "aligner", **overrides) -> FilterLimits:
    base = FilterLimits.for_aligner() if kind == "aligner" else FilterLimits.for_generator()
    defaults = {
        f: getattr(base, f)
        for f in (
            "min_pairs", "max_pairs", "min_sentences", "max_sentences",
            "min_tokens", "max_text_unks", "max_value_unks",
        )
    }
    merged = _apply(defaults, _section(cfg, "filters"), overrides, set(defaults), "filters")
    _check(merged["min_pairs"] >= 0, "filters.min_pairs must be >= 0")
    _check(merged["max_pairs"] >= merged["min_pairs"], "filters.max_pairs < min_pairs")
    return FilterLimits(**merged)


def build_vocab_caps(cfg: dict, kind: str = "aligner", **overrides) -> VocabCaps:
    base = VocabCaps.for_aligner() if kind == "aligner" else VocabCaps.for_generator()
    defaults = {"input_cap": base.input_cap, "output_cap": base.output_cap}
    merged = _apply(defaults, _section(cfg, "vocab"), overrides, set(defaults), "vocab")
    _check(merged["input_cap"] >= 5, "vocab.input_cap too small")
    _check(merged["output_cap"] >= 5, "vocab.output_cap too small")
    return VocabCaps(**merged)
