"""From filtered trials to labeled spectrogram examples and deterministic splits.

The seven recorded classes merge into movement classes: hand open/close
become hand_movement, elbow flexion/extension become elbow_movement,
supination/pronation become forearm_movement. The four-class scheme keeps
rest; the three-class scheme drops rest examples entirely.

Each (trial, channel) pair yields one example: the trial is filtered, its
first 788 samples are sliced, and the channel's stacked log-power
spectrogram becomes the input. Splits are stratified per class with a
documented floor-and-leftover rule realizing the 7:1:2 ratio, and are
invariant under input reordering because examples are canonically sorted
before the seeded permutation.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import re
from dataclasses import dataclass

import numpy as np

from .filters import SosCascade, apply_sos
from .stft import StackedSpectrogram, StftConfig, log_power, stack3, stft
from .trial_store import RawLabel, Trial, TrialSet

SLICE_SAMPLES = 788

FOUR_CLASS = "four_class"
THREE_CLASS = "three_class"
SCHEMES = (FOUR_CLASS, THREE_CLASS)


class MergedLabel(enum.IntEnum):
    HAND_MOVEMENT = 0
    ELBOW_MOVEMENT = 1
    FOREARM_MOVEMENT = 2
    REST = 3


_MERGE_MAP = {
    RawLabel.HAND_OPEN: MergedLabel.HAND_MOVEMENT,
    RawLabel.HAND_CLOSE: MergedLabel.HAND_MOVEMENT,
    RawLabel.ELBOW_FLEXION: MergedLabel.ELBOW_MOVEMENT,
    RawLabel.ELBOW_EXTENSION: MergedLabel.ELBOW_MOVEMENT,
    RawLabel.FOREARM_SUPINATION: MergedLabel.FOREARM_MOVEMENT,
    RawLabel.FOREARM_PRONATION: MergedLabel.FOREARM_MOVEMENT,
    RawLabel.REST: MergedLabel.REST,
}


def class_names(scheme: str) -> tuple[str, ...]:
    _check_scheme(scheme)
    names = ("hand_movement", "elbow_movement", "forearm_movement", "rest")
    return names if scheme == FOUR_CLASS else names[:3]


def n_classes(scheme: str) -> int:
    return len(class_names(scheme))


def merge_classes(raw: RawLabel, scheme: str) -> MergedLabel | None:
    """Map a raw label to its merged class; None means the example is dropped."""
    _check_scheme(scheme)
    merged = _MERGE_MAP[RawLabel(raw)]
    if scheme == THREE_CLASS and merged is MergedLabel.REST:
        return None
    return merged


def slice_trial(t: Trial, n: int = SLICE_SAMPLES) -> Trial:
    """Truncate every channel to its first n samples."""
    if t.n_samples < n:
        raise ValueError(
            f"trial {t.name} has {t.n_samples} samples, need at least {n}"
        )
    if t.n_samples == n:
        return t
    return dataclasses.replace(t, samples=t.samples[:, :n])


@dataclass(frozen=True)
class Example:
    """One per-channel training example with provenance."""

    stacked: StackedSpectrogram
    label: MergedLabel
    subject_id: int
    run_index: int
    trial_index: int
    channel_index: int

    @property
    def example_id(self) -> str:
        return (
            f"s{self.subject_id}r{self.run_index}"
            f"t{self.trial_index}c{self.channel_index}"
        )


def build_examples(
    trial_set: TrialSet,
    cascade_chain: list[SosCascade],
    cfg: StftConfig,
    scheme: str,
    slice_len: int = SLICE_SAMPLES,
) -> list[Example]:
    """Filter, slice, and transform every (trial, channel) into an Example.

    Cascades apply in order to each full-length channel before slicing.
    Output ordering is canonical: (subject, run, trial, channel). Errors
    from slicing or filtering carry the trial key.
    """
    _check_scheme(scheme)
    if cfg.fs != trial_set.fs:
        raise ValueError(
            f"STFT config fs {cfg.fs} does not match trial set fs {trial_set.fs}"
        )
    examples: list[Example] = []
    for trial in sorted(trial_set.trials, key=lambda t: t.key):
        label = merge_classes(trial.raw_label, scheme)
        if label is None:
            continue
        filtered = trial.samples
        for cascade in cascade_chain:
            filtered = np.stack([apply_sos(cascade, row) for row in filtered])
        sliced = slice_trial(
            dataclasses.replace(trial, samples=filtered), slice_len
        )
        for ch in range(sliced.n_channels):
            stacked = stack3(log_power(stft(sliced.samples[ch], cfg)))
            examples.append(
                Example(
                    stacked=stacked,
                    label=label,
                    subject_id=trial.subject_id,
                    run_index=trial.run_index,
                    trial_index=trial.trial_index,
                    channel_index=ch,
                )
            )
    if not examples:
        raise ValueError("no examples produced (empty or all-rest trial set)")
    return examples


PER_EXAMPLE = "per_example_stratified"
PER_TRIAL = "per_trial_grouped"
STRATEGIES = (PER_EXAMPLE, PER_TRIAL)


@dataclass(frozen=True)
class SplitManifest:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    seed: int
    strategy: str

    def partition_of(self, example_id: str) -> str:
        for name in ("train", "val", "test"):
            if example_id in getattr(self, name):
                return name
        raise KeyError(example_id)


def split(
    examples: list[Example],
    ratios: tuple[int, int, int] = (7, 1, 2),
    seed: int = 0,
    strategy: str = PER_EXAMPLE,
) -> SplitManifest:
    """Deterministic stratified train/val/test assignment.

    Within each class: floor allocation of the ratio shares, leftovers
    assigned one at a time to train, then test, then val. The permutation
    is seeded and applied after canonical sorting, so input order never
    matters. The grouped strategy allocates whole trials, keeping all
    channels of a trial in one partition.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown split strategy {strategy!r}")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive integers, got {ratios}")
    by_class: dict[MergedLabel, list[Example]] = {}
    for ex in examples:
        by_class.setdefault(ex.label, []).append(ex)
    for label in sorted(by_class):
        members = by_class[label]
        if not members:
            raise ValueError(f"class {label.name} has zero examples")
        if strategy == PER_EXAMPLE and len(members) < 10:
            raise ValueError(
                f"class {label.name} has {len(members)} examples, need >= 10"
            )
    rng = np.random.default_rng(seed)
    parts: dict[str, list[str]] = {"train": [], "val": [], "test": []}
    for label in sorted(by_class):
        members = sorted(
            by_class[label],
            key=lambda e: (e.subject_id, e.run_index, e.trial_index, e.channel_index),
        )
        if strategy == PER_EXAMPLE:
            units: list[list[str]] = [[e.example_id] for e in members]
        else:
            groups: dict[tuple[int, int, int], list[str]] = {}
            for e in members:
                groups.setdefault(
                    (e.subject_id, e.run_index, e.trial_index), []
                ).append(e.example_id)
            units = [groups[key] for key in sorted(groups)]
        order = rng.permutation(len(units))
        counts = _allocate(len(units), ratios)
        cursor = 0
        for part in ("train", "val", "test"):
            for idx in order[cursor : cursor + counts[part]]:
                parts[part].extend(units[idx])
            cursor += counts[part]
    return SplitManifest(
        train=tuple(parts["train"]),
        val=tuple(parts["val"]),
        test=tuple(parts["test"]),
        seed=seed,
        strategy=strategy,
    )


def _allocate(n: int, ratios: tuple[int, int, int]) -> dict[str, int]:
    """Floor shares of n at the given ratio; leftovers to train, test, val."""
    total = sum(ratios)
    counts = {
        "train": n * ratios[0] // total,
        "val": n * ratios[1] // total,
        "test": n * ratios[2] // total,
    }
    leftover = n - sum(counts.values())
    for part in ("train", "test", "val"):
        if leftover == 0:
            break
        counts[part] += 1
        leftover -= 1
    return counts


def manifest_to_json(manifest: SplitManifest) -> str:
    payload = {
        "seed": manifest.seed,
        "strategy": manifest.strategy,
        "train": list(manifest.train),
        "val": list(manifest.val),
        "test": list(manifest.test),
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def manifest_from_json(text: str) -> SplitManifest:
    payload = json.loads(text)
    return SplitManifest(
        train=tuple(payload["train"]),
        val=tuple(payload["val"]),
        test=tuple(payload["test"]),
        seed=int(payload["seed"]),
        strategy=str(payload["strategy"]),
    )


_ID_PATTERN = re.compile(r"^s(\d+)r(\d+)t(\d+)c(\d+)$")


def parse_example_id(example_id: str) -> tuple[int, int, int, int]:
    match = _ID_PATTERN.match(example_id)
    if match is None:
        raise ValueError(f"malformed example id {example_id!r}")
    return tuple(int(g) for g in match.groups())  # type: ignore[return-value]


def to_tensors(
    examples: list[Example], ids: tuple[str, ...] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble (X, y) arrays for training: X is N x 3 x H x W, y is int labels.

    When ids are given, only those examples are included, in id order.
    """
    if ids is not None:
        by_id = {e.example_id: e for e in examples}
        try:
            chosen = [by_id[i] for i in ids]
        except KeyError as exc:
            raise ValueError(f"manifest id {exc.args[0]!r} not in examples") from None
    else:
        chosen = list(examples)
    if not chosen:
        raise ValueError("no examples selected")
    x = np.stack([e.stacked.as_tensor() for e in chosen])
    y = np.array([int(e.label) for e in chosen], dtype=np.int64)
    return x, y


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
