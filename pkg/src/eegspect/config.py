"""Pipeline configuration: defaults, key=value files, and flag overrides.

Config sources merge in a fixed order: built-in defaults, then the named
preset's block, then file pairs, then command-line overrides (flags win).
Files are UTF-8 lines of "section.key=value"; blank lines and "#" comments
are ignored. Unknown keys are rejected, as are values that violate a module
invariant (the error cites the key).

Defaults are the published parameter set: window 342 / hop 2 / nfft 447 at
512 Hz, Chebyshev order 8 over 0.01 to 200 Hz with a 50 Hz / q 35 notch,
and lr 0.001 / momentum 0.9 / batch 16 / 20 epochs with a 7:1:2 split. The
"reduced" preset swaps in a 32x32 spectrogram geometry (window 44, hop 24,
nfft 63) for fast desk-scale runs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import SCHEMES, STRATEGIES
from .filters import SosCascade, design_cheby_bandpass, design_notch
from .nn.training import SELECTIONS, TrainConfig
from .stft import StftConfig
from .trial_store import RawLabel, SynthSpec


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (converter, default). Converters raise ValueError on bad input.
_SCHEMA: dict[str, tuple] = {
    "pipeline.preset": (str, "paper"),
    "paths.archive": (str, "trials.etc"),
    "paths.out": (str, "out"),
    "filter.enabled": (_bool, True),
    "filter.order": (int, 8),
    "filter.low_hz": (float, 0.01),
    "filter.high_hz": (float, 200.0),
    "filter.ripple_db": (float, 0.5),
    "filter.notch_hz": (float, 50.0),
    "filter.notch_q": (float, 35.0),
    "stft.win_len": (int, 342),
    "stft.hop": (int, 2),
    "stft.nfft": (int, 447),
    "stft.fs": (float, 512.0),
    "stft.epsilon": (float, 1e-12),
    "dataset.scheme": (str, "four_class"),
    "split.seed": (int, 0),
    "split.strategy": (str, "per_example_stratified"),
    "split.train": (int, 7),
    "split.val": (int, 1),
    "split.test": (int, 2),
    "model.n_blocks": (int, 4),
    "train.lr": (float, 0.001),
    "train.momentum": (float, 0.9),
    "train.batch_size": (int, 16),
    "train.epochs": (int, 20),
    "train.seed": (int, 0),
    "train.selection": (str, "best_val"),
    "synth.n_subjects": (int, 1),
    "synth.n_runs": (int, 10),
    "synth.trials_per_class": (int, 6),
    "synth.n_channels": (int, 61),
    "synth.n_samples": (int, 1024),
    "synth.noise_sigma": (float, 0.1),
    "synth.seed": (int, 0),
    "synth.tones": (str, "12,24,36,48,64,80,96"),
    "import.manifest": (str, ""),
    "export.channel": (str, ""),
    "export.format": (str, "pgm"),
}

PRESETS: dict[str, dict[str, str]] = {
    "paper": {},
    "reduced": {"stft.win_len": "44", "stft.hop": "24", "stft.nfft": "63"},
}


@dataclass(frozen=True)
class PipelineConfig:
    """Fully resolved configuration; values accessed via typed helpers."""

    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def resolved(self) -> dict[str, str]:
        """Canonical string rendering of every key, for audit trails."""
        return {key: _render(self.values[key]) for key in sorted(self.values)}

    def stft_config(self) -> StftConfig:
        try:
            return StftConfig(
                win_len=self["stft.win_len"],
                hop=self["stft.hop"],
                nfft=self["stft.nfft"],
                fs=self["stft.fs"],
                epsilon=self["stft.epsilon"],
            )
        except ValueError as exc:
            raise ConfigError(f"stft.*: {exc}") from None

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(
                lr=self["train.lr"],
                momentum=self["train.momentum"],
                batch_size=self["train.batch_size"],
                epochs=self["train.epochs"],
                seed=self["train.seed"],
                selection=self["train.selection"],
            )
        except ValueError as exc:
            raise ConfigError(f"train.*: {exc}") from None

    def synth_spec(self) -> SynthSpec:
        tones = self["synth.tones"].split(",")
        if len(tones) != len(RawLabel):
            raise ConfigError(
                f"synth.tones: need {len(RawLabel)} comma-separated values"
            )
        try:
            tone_map = {
                label: float(tones[int(label)].strip()) for label in RawLabel
            }
            return SynthSpec(
                n_subjects=self["synth.n_subjects"],
                n_runs=self["synth.n_runs"],
                trials_per_class_per_run=self["synth.trials_per_class"],
                n_channels=self["synth.n_channels"],
                n_samples=self["synth.n_samples"],
                fs=self["stft.fs"],
                class_tone_hz=tone_map,
                noise_sigma=self["synth.noise_sigma"],
                seed=self["synth.seed"],
            )
        except ValueError as exc:
            raise ConfigError(f"synth.*: {exc}") from None

    def cascades(self) -> list[SosCascade]:
        if not self["filter.enabled"]:
            return []
        try:
            return [
                design_cheby_bandpass(
                    self["filter.order"],
                    self["filter.low_hz"],
                    self["filter.high_hz"],
                    self["stft.fs"],
                    self["filter.ripple_db"],
                ),
                design_notch(
                    self["filter.notch_hz"], self["stft.fs"], self["filter.notch_q"]
                ),
            ]
        except ValueError as exc:
            raise ConfigError(f"filter.*: {exc}") from None

    def ratios(self) -> tuple[int, int, int]:
        return (self["split.train"], self["split.val"], self["split.test"])


def parse_config(path=None, overrides=None) -> PipelineConfig:
    """Resolve a config from an optional file plus "key=value" overrides."""
    pairs: dict[str, str] = {}
    if path is not None:
        pairs.update(_read_pairs(path))
    for item in overrides or []:
        key, value = _split_pair(item, origin="override")
        pairs[key] = value

    preset = pairs.get("pipeline.preset", _SCHEMA["pipeline.preset"][1])
    if preset not in PRESETS:
        raise ConfigError(
            f"pipeline.preset: unknown preset {preset!r} (choose from {sorted(PRESETS)})"
        )
    merged = {key: default for key, (_, default) in _SCHEMA.items()}
    merged["pipeline.preset"] = preset
    staged = dict(PRESETS[preset])
    staged.update(pairs)
    for key, text in staged.items():
        convert = _SCHEMA[key][0]
        try:
            merged[key] = convert(text) if isinstance(text, str) else text
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {text!r}") from None

    cfg = PipelineConfig(values=merged)
    _validate(cfg)
    return cfg


def _validate(cfg: PipelineConfig) -> None:
    cfg.stft_config()
    cfg.train_config()
    if cfg["dataset.scheme"] not in SCHEMES:
        raise ConfigError(f"dataset.scheme: unknown scheme {cfg['dataset.scheme']!r}")
    if cfg["split.strategy"] not in STRATEGIES:
        raise ConfigError(f"split.strategy: unknown strategy {cfg['split.strategy']!r}")
    if cfg["train.selection"] not in SELECTIONS:
        raise ConfigError(f"train.selection: unknown value {cfg['train.selection']!r}")
    if any(r <= 0 for r in cfg.ratios()):
        raise ConfigError("split.*: ratio parts must be positive")
    if not (1 <= cfg["model.n_blocks"] <= 4):
        raise ConfigError("model.n_blocks: must be in 1..4")
    if cfg["export.format"] not in ("pgm", "png"):
        raise ConfigError(f"export.format: unknown format {cfg['export.format']!r}")


def _read_pairs(path) -> dict[str, str]:
    pairs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            key, value = _split_pair(text, origin=f"{path}:{line_no}")
            pairs[key] = value
    return pairs


def _split_pair(text: str, origin: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"{origin}: expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    key = key.strip()
    if key not in _SCHEMA:
        raise ConfigError(f"{origin}: unknown key {key!r}")
    return key, value.strip()


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
