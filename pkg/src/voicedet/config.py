"""Run configuration: flat ``key = value`` text files.

A run directory is derived from ``out_dir``::

    <out_dir>/manifest.tsv          clip inventory with splits/laundering
    <out_dir>/laundered/            post-laundering audio tree
    <out_dir>/features/<family>.tsv feature stores
    <out_dir>/models/               trained models + tuning logs
    <out_dir>/reports/report.csv    evaluation results
    <out_dir>/resolved-config.txt   snapshot of every effective setting

Encoder command templates may be overridden by the environment
variables ``VOICEDET_ENCODER_ENCODE``, ``VOICEDET_ENCODER_DECODE`` and
``VOICEDET_ENCODER_SUFFIX`` (and only those; all other settings come
from the file).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .launder import EncoderConfig
from .manifest import DEFAULT_UTTERANCE_PATTERN
from .store import FEATURE_FAMILIES

ENV_ENCODER_ENCODE = "VOICEDET_ENCODER_ENCODE"
ENV_ENCODER_DECODE = "VOICEDET_ENCODER_DECODE"
ENV_ENCODER_SUFFIX = "VOICEDET_ENCODER_SUFFIX"


@dataclass
class RunConfig:
    """Every knob of a run, with defaults matching the reference setup."""

    seed: int = 0
    out_dir: str = "runs/out"
    dataset: str = "default"
    roots: list[tuple[str, str, str | None]] = field(default_factory=list)
    utterance_pattern: str = DEFAULT_UTTERANCE_PATTERN
    split_mode: str = "clip"
    allow_small_strata: bool = False
    balance_per_architecture: int = 0
    pair_utterances: bool = False
    families: list[str] = field(default_factory=lambda: list(FEATURE_FAMILIES))
    embeddings_file: str = ""
    encoder_encode: str = ""
    encoder_decode: str = ""
    encoder_suffix: str = ".m4a"
    workers: int = 1
    envelope_cutoff_hz: float = 10.0
    selection_k: int = 20
    decision_threshold: float = 0.5
    grid_linear_l2: list[float] = field(default_factory=list)
    grid_forest_n_trees: list[int] = field(default_factory=list)
    grid_forest_max_depth: list[int | None] = field(default_factory=list)
    grid_forest_min_leaf: list[int] = field(default_factory=list)

    # --- derived paths ---------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return Path(self.out_dir) / "manifest.tsv"

    @property
    def laundered_dir(self) -> Path:
        return Path(self.out_dir) / "laundered"

    @property
    def features_dir(self) -> Path:
        return Path(self.out_dir) / "features"

    @property
    def models_dir(self) -> Path:
        return Path(self.out_dir) / "models"

    @property
    def reports_dir(self) -> Path:
        return Path(self.out_dir) / "reports"

    def feature_store_path(self, family: str) -> Path:
        return self.features_dir / f"{family}.tsv"

    def encoder(self) -> EncoderConfig | None:
        if not self.encoder_encode or not self.encoder_decode:
            return None
        return EncoderConfig(self.encoder_encode, self.encoder_decode, self.encoder_suffix)


def _parse_bool(value: str, key: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise ConfigError(f"{key} must be 'true' or 'false', got {value!r}")


def _parse_root(value: str) -> tuple[str, str, str | None]:
    parts = [p.strip() for p in value.split("|")]
    if len(parts) == 2 and parts[1] == "real":
        return parts[0], "real", None
    if len(parts) == 3 and parts[1] == "synthetic" and parts[2]:
        return parts[0], "synthetic", parts[2]
    raise ConfigError(
        f"root must be '<dir>|real' or '<dir>|synthetic|<architecture>', got {value!r}"
    )


def _parse_list(value: str, conv, key: str) -> list:
    if not value:
        return []
    try:
        return [conv(v.strip()) for v in value.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad list value for {key}: {value!r}") from exc


def _parse_depth(value: str):
    return None if value == "none" else int(value)


def parse_config(path: str | Path) -> RunConfig:
    """Parse a config file; unknown keys are errors, not typos to ignore."""
    cfg = RunConfig()
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip()
        value = value.strip()
        try:
            if key == "seed":
                cfg.seed = int(value)
            elif key == "out_dir":
                cfg.out_dir = value
            elif key == "dataset":
                cfg.dataset = value
            elif key == "root":
                cfg.roots.append(_parse_root(value))
            elif key == "utterance_pattern":
                cfg.utterance_pattern = value
            elif key == "split_mode":
                if value not in ("clip", "utterance"):
                    raise ConfigError(f"split_mode must be clip or utterance, got {value!r}")
                cfg.split_mode = value
            elif key == "allow_small_strata":
                cfg.allow_small_strata = _parse_bool(value, key)
            elif key == "balance_per_architecture":
                cfg.balance_per_architecture = int(value)
            elif key == "pair_utterances":
                cfg.pair_utterances = _parse_bool(value, key)
            elif key == "families":
                families = _parse_list(value, str, key)
                unknown = [f for f in families if f not in FEATURE_FAMILIES]
                if unknown:
                    raise ConfigError(f"unknown feature families: {unknown}")
                cfg.families = families
            elif key == "embeddings_file":
                cfg.embeddings_file = value
            elif key == "encoder_encode":
                cfg.encoder_encode = value
            elif key == "encoder_decode":
                cfg.encoder_decode = value
            elif key == "encoder_suffix":
                cfg.encoder_suffix = value
            elif key == "workers":
                cfg.workers = int(value)
                if cfg.workers < 1:
                    raise ConfigError("workers must be >= 1")
            elif key == "envelope_cutoff_hz":
                cfg.envelope_cutoff_hz = float(value)
            elif key == "selection_k":
                cfg.selection_k = int(value)
            elif key == "decision_threshold":
                cfg.decision_threshold = float(value)
            elif key == "grid_linear_l2":
                cfg.grid_linear_l2 = _parse_list(value, float, key)
            elif key == "grid_forest_n_trees":
                cfg.grid_forest_n_trees = _parse_list(value, int, key)
            elif key == "grid_forest_max_depth":
                cfg.grid_forest_max_depth = _parse_list(value, _parse_depth, key)
            elif key == "grid_forest_min_leaf":
                cfg.grid_forest_min_leaf = _parse_list(value, int, key)
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc

    # Environment overrides apply to the codec hookup only.
    cfg.encoder_encode = os.environ.get(ENV_ENCODER_ENCODE, cfg.encoder_encode)
    cfg.encoder_decode = os.environ.get(ENV_ENCODER_DECODE, cfg.encoder_decode)
    cfg.encoder_suffix = os.environ.get(ENV_ENCODER_SUFFIX, cfg.encoder_suffix)
    return cfg


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    return str(value)


def resolved_text(cfg: RunConfig) -> str:
    """Canonical snapshot of every effective setting (defaults included)."""
    lines = []
    scalars = [
        ("allow_small_strata", cfg.allow_small_strata),
        ("balance_per_architecture", cfg.balance_per_architecture),
        ("dataset", cfg.dataset),
        ("decision_threshold", cfg.decision_threshold),
        ("embeddings_file", cfg.embeddings_file),
        ("encoder_decode", cfg.encoder_decode),
        ("encoder_encode", cfg.encoder_encode),
        ("encoder_suffix", cfg.encoder_suffix),
        ("envelope_cutoff_hz", cfg.envelope_cutoff_hz),
        ("families", ",".join(cfg.families)),
        ("grid_forest_max_depth", ",".join(_fmt_value(v) for v in cfg.grid_forest_max_depth)),
        ("grid_forest_min_leaf", ",".join(str(v) for v in cfg.grid_forest_min_leaf)),
        ("grid_forest_n_trees", ",".join(str(v) for v in cfg.grid_forest_n_trees)),
        ("grid_linear_l2", ",".join(repr(v) for v in cfg.grid_linear_l2)),
        ("out_dir", cfg.out_dir),
        ("pair_utterances", cfg.pair_utterances),
        ("seed", cfg.seed),
        ("selection_k", cfg.selection_k),
        ("split_mode", cfg.split_mode),
        ("utterance_pattern", cfg.utterance_pattern),
        ("workers", cfg.workers),
    ]
    for key, value in scalars:
        lines.append(f"{key} = {_fmt_value(value)}")
    for directory, kind, arch in cfg.roots:
        suffix = f"|{arch}" if arch is not None else ""
        lines.append(f"root = {directory}|{kind}{suffix}")
    return "\n".join(lines) + "\n"


def write_resolved(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "resolved-config.txt"
    path.write_text(resolved_text(cfg), encoding="utf-8")
    return path
