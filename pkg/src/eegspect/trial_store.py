"""Trial archive format (ETC), CSV import, and synthetic data generation.

ETC ("EEG Trial Container") is the package's lossless on-disk format for
labeled multi-channel trials. All integers and floats are little-endian.

Layout::

    magic       4 bytes   "ETC1"
    version     u16       1
    fs          f64       sampling rate, Hz
    n_channels  u32
    n_trials    u32
    names       n_channels records of: u16 byte length, UTF-8 channel name
    trials      n_trials records of:
                  subject u16 | run u16 | trial u16 | raw_label u8
                  n_samples u32
                  n_channels * n_samples f64, row-major (channel-major)

Samples survive a write/read round trip bit-exactly. Trials may have uneven
lengths (per-trial n_samples); downstream slicing enforces any fixed-length
requirement.

The synthetic generator assigns each raw class a carrier tone so that class
separability is guaranteed by construction, which makes a full
train-and-evaluate run testable without any real recordings.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field

import numpy as np

ETC_MAGIC = b"ETC1"
ETC_VERSION = 1


class RawLabel(enum.IntEnum):
    """The seven recorded classes, in on-disk code order."""

    ELBOW_FLEXION = 0
    ELBOW_EXTENSION = 1
    FOREARM_SUPINATION = 2
    FOREARM_PRONATION = 3
    HAND_OPEN = 4
    HAND_CLOSE = 5
    REST = 6


RAW_LABEL_NAMES = tuple(label.name.lower() for label in RawLabel)


def raw_label_from_name(name: str) -> RawLabel:
    try:
        return RawLabel[name.upper()]
    except KeyError:
        raise ValueError(f"unknown raw label {name!r}") from None


@dataclass(frozen=True)
class Trial:
    """One labeled recording: n_channels x n_samples of microvolt values."""

    subject_id: int
    run_index: int
    trial_index: int
    raw_label: RawLabel
    samples: np.ndarray
    fs: float

    def __post_init__(self):
        arr = np.ascontiguousarray(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(
                f"trial samples must be a non-empty 2-D matrix, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("trial contains non-finite samples")
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "raw_label", RawLabel(self.raw_label))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.subject_id, self.run_index, self.trial_index)

    @property
    def name(self) -> str:
        return f"s{self.subject_id}r{self.run_index}t{self.trial_index}"


@dataclass(frozen=True)
class TrialSet:
    """An ordered collection of trials sharing channel layout and rate."""

    trials: tuple[Trial, ...]
    channel_names: tuple[str, ...]
    fs: float

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if not self.trials:
            raise ValueError("trial set is empty")
        n_channels = self.trials[0].n_channels
        if len(self.channel_names) != n_channels:
            raise ValueError(
                f"{len(self.channel_names)} channel names for {n_channels} channels"
            )
        seen = set()
        for t in self.trials:
            if t.n_channels != n_channels:
                raise ValueError(
                    f"trial {t.key} has {t.n_channels} channels, expected {n_channels}"
                )
            if t.fs != self.fs:
                raise ValueError(f"trial {t.key} has fs {t.fs}, expected {self.fs}")
            if t.key in seen:
                raise ValueError(f"duplicate trial key {t.key}")
            seen.add(t.key)

    @property
    def n_channels(self) -> int:
        return self.trials[0].n_channels

    def subjects(self) -> tuple[int, ...]:
        return tuple(sorted({t.subject_id for t in self.trials}))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the synthetic tone-per-class generator."""

    n_subjects: int = 1
    n_runs: int = 10
    trials_per_class_per_run: int = 6
    n_channels: int = 61
    n_samples: int = 1024
    fs: float = 512.0
    class_tone_hz: dict[RawLabel, float] = field(
        default_factory=lambda: {
            RawLabel.ELBOW_FLEXION: 12.0,
            RawLabel.ELBOW_EXTENSION: 24.0,
            RawLabel.FOREARM_SUPINATION: 36.0,
            RawLabel.FOREARM_PRONATION: 48.0,
            RawLabel.HAND_OPEN: 64.0,
            RawLabel.HAND_CLOSE: 80.0,
            RawLabel.REST: 96.0,
        }
    )
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("n_subjects", "n_runs", "trials_per_class_per_run", "n_channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_samples < 1 or self.fs <= 0 or self.noise_sigma < 0:
            raise ValueError("invalid synthesis parameters")
        for label in RawLabel:
            tone = float(self.class_tone_hz[label])
            if not (0.0 < tone < self.fs / 2.0):
                raise ValueError(f"tone {tone} Hz is outside (0, fs/2)")


def write_archive(trial_set: TrialSet, path) -> None:
    """Write a TrialSet in ETC format. read_archive inverts this bit-exactly."""
    chunks = [
        struct.pack(
            "<4sHdII",
            ETC_MAGIC,
            ETC_VERSION,
            trial_set.fs,
            trial_set.n_channels,
            len(trial_set.trials),
        )
    ]
    for name in trial_set.channel_names:
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
    for t in trial_set.trials:
        chunks.append(
            struct.pack(
                "<HHHBI",
                t.subject_id,
                t.run_index,
                t.trial_index,
                int(t.raw_label),
                t.n_samples,
            )
        )
        chunks.append(np.ascontiguousarray(t.samples, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def read_archive(path) -> TrialSet:
    """Read an ETC archive, rejecting bad magic, versions, and truncation."""
    with open(path, "rb") as fh:
        data = fh.read()
    reader = _Reader(data, str(path))
    magic, version, fs, n_channels, n_trials = reader.unpack("<4sHdII")
    if magic != ETC_MAGIC:
        raise ValueError(f"{path}: bad magic, not an ETC archive")
    if version != ETC_VERSION:
        raise ValueError(f"{path}: unsupported ETC version {version}")
    names = []
    for _ in range(n_channels):
        (name_len,) = reader.unpack("<H")
        names.append(reader.take(name_len).decode("utf-8"))
    trials = []
    for _ in range(n_trials):
        subject, run, trial, label_code, n_samples = reader.unpack("<HHHBI")
        if label_code > max(RawLabel):
            raise ValueError(f"{path}: raw label code {label_code} out of range")
        payload = reader.take(n_channels * n_samples * 8)
        samples = np.frombuffer(payload, dtype="<f8").reshape(n_channels, n_samples)
        trials.append(
            Trial(
                subject_id=subject,
                run_index=run,
                trial_index=trial,
                raw_label=RawLabel(label_code),
                samples=samples,
                fs=fs,
            )
        )
    return TrialSet(trials=tuple(trials), channel_names=tuple(names), fs=fs)


@dataclass(frozen=True)
class TrialMeta:
    """Descriptor accompanying one imported CSV signal file."""

    subject_id: int
    run_index: int
    trial_index: int
    raw_label: RawLabel
    fs: float


def import_csv(signal_path, meta: TrialMeta) -> Trial:
    """Parse a headerless CSV (rows = channels, columns = samples) as a Trial."""
    rows: list[list[float]] = []
    with open(signal_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            values = []
            for col, token in enumerate(line.split(","), start=1):
                try:
                    values.append(float(token))
                except ValueError:
                    raise ValueError(
                        f"{signal_path}: row {line_no}, column {col}: "
                        f"unparsable value {token.strip()!r}"
                    ) from None
            if rows and len(values) != len(rows[0]):
                raise ValueError(
                    f"{signal_path}: row {line_no} has {len(values)} values, "
                    f"expected {len(rows[0])}"
                )
            rows.append(values)
    if not rows:
        raise ValueError(f"{signal_path}: empty CSV")
    return Trial(
        subject_id=meta.subject_id,
        run_index=meta.run_index,
        trial_index=meta.trial_index,
        raw_label=meta.raw_label,
        samples=np.asarray(rows, dtype=np.float64),
        fs=meta.fs,
    )


def synthesize_dataset(spec: SynthSpec) -> TrialSet:
    """Generate a deterministic synthetic TrialSet from a SynthSpec.

    Every channel of a trial carries cos(2 pi f n / fs + phi) at the class
    tone f, with an independently drawn phase per (trial, channel), plus
    Gaussian noise of the requested sigma. Identical specs (including seed)
    produce bit-identical sets. Subjects are numbered from 1; trial indices
    enumerate (class, repetition) within each run.
    """
    rng = np.random.default_rng(spec.seed)
    n = np.arange(spec.n_samples, dtype=np.float64)
    trials = []
    for subject in range(1, spec.n_subjects + 1):
        for run in range(spec.n_runs):
            for label in RawLabel:
                tone = float(spec.class_tone_hz[label])
                omega = 2.0 * math.pi * tone / spec.fs
                for rep in range(spec.trials_per_class_per_run):
                    samples = np.empty((spec.n_channels, spec.n_samples))
                    for ch in range(spec.n_channels):
                        phase = rng.uniform(0.0, 2.0 * math.pi)
                        samples[ch] = np.cos(omega * n + phase)
                        if spec.noise_sigma > 0.0:
                            samples[ch] += rng.normal(
                                0.0, spec.noise_sigma, spec.n_samples
                            )
                    trials.append(
                        Trial(
                            subject_id=subject,
                            run_index=run,
                            trial_index=int(label) * spec.trials_per_class_per_run
                            + rep,
                            raw_label=label,
                            samples=samples,
                            fs=spec.fs,
                        )
                    )
    return TrialSet(
        trials=tuple(trials),
        channel_names=tuple(f"C{i+1}" for i in range(spec.n_channels)),
        fs=spec.fs,
    )


class _Reader:
    """Cursor over archive bytes that raises on truncation."""

    def __init__(self, data: bytes, origin: str):
        self.data = data
        self.origin = origin
        self.offset = 0

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.data):
            raise ValueError(f"{self.origin}: truncated archive")
        chunk = self.data[self.offset : self.offset + count]
        self.offset += count
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))
