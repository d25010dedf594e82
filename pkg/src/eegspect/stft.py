"""Short-time Fourier transform, log-power spectrograms, and image export.

The pipeline's working geometry: 788-sample trials at 512 Hz, window 342,
hop 2 (overlap 340), 447 DFT points. Frame t covers samples
[t*hop, t*hop + win_len); each frame is Blackman-windowed, zero-padded to
nfft and transformed, and the one-sided half of the spectrum is kept. With
nfft odd, one_sided_bins = (nfft+1)/2, so the default geometry yields
(788-342)/2 + 1 = 224 frames by (447+1)/2 = 224 bins.

Power is ln(|X|^2 + epsilon); the epsilon floor keeps silent frames finite.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .validation import as_float_vector, check_positive

SPG_MAGIC = b"SPG1"


@dataclass(frozen=True)
class StftConfig:
    """STFT parameters. Defaults give the 224 x 224 working geometry."""

    win_len: int = 342
    hop: int = 2
    nfft: int = 447
    fs: float = 512.0
    epsilon: float = 1e-12

    def __post_init__(self):
        if not (0 < self.hop <= self.win_len <= self.nfft):
            raise ValueError(
                f"need 0 < hop <= win_len <= nfft, got hop={self.hop} "
                f"win_len={self.win_len} nfft={self.nfft}"
            )
        check_positive(self.fs, "fs")
        check_positive(self.epsilon, "epsilon")

    @property
    def one_sided_bins(self) -> int:
        return self.nfft // 2 + 1

    def n_frames(self, signal_len: int) -> int:
        if signal_len < self.win_len:
            raise ValueError(
                f"signal of {signal_len} samples is shorter than the window ({self.win_len})"
            )
        return (signal_len - self.win_len) // self.hop + 1


@dataclass(frozen=True)
class ComplexStft:
    """One-sided complex STFT, shape one_sided_bins x n_frames."""

    values: np.ndarray
    cfg: StftConfig

    def __post_init__(self):
        if self.values.shape[0] != self.cfg.one_sided_bins:
            raise ValueError("row count does not match one_sided_bins")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("STFT values must be finite")


@dataclass(frozen=True)
class Spectrogram:
    """Real log-power matrix, same shape as the ComplexStft it came from."""

    values: np.ndarray
    cfg: StftConfig


@dataclass(frozen=True)
class StackedSpectrogram:
    """Min-max normalized spectrogram replicated into three equal components.

    The three components are views of one matrix, so equality of components
    holds by construction and no memory is wasted on copies.
    """

    values: np.ndarray

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.values, self.values, self.values)

    def as_tensor(self) -> np.ndarray:
        """The (3, H, W) array a convolutional network consumes."""
        return np.broadcast_to(self.values, (3,) + self.values.shape).copy()


def blackman_window(m: int) -> np.ndarray:
    """Symmetric Blackman window of length m.

    w[k] = 0.42 - 0.5 cos(2 pi k / (m-1)) + 0.08 cos(4 pi k / (m-1)).
    The second half is mirrored from the first so w[k] == w[m-1-k] holds
    bit-exactly, which the cosine evaluations alone would not guarantee.
    Returns [1.0] for m == 1.
    """
    if m < 1:
        raise ValueError(f"window length must be >= 1, got {m}")
    if m == 1:
        return np.ones(1)
    k = np.arange((m + 1) // 2, dtype=np.float64)
    phase = 2.0 * np.pi * k / (m - 1)
    half = 0.42 - 0.5 * np.cos(phase) + 0.08 * np.cos(2.0 * phase)
    w = np.empty(m, dtype=np.float64)
    w[: half.size] = half
    w[m - half.size :] = half[::-1]
    return w


def stft(signal, cfg: StftConfig) -> ComplexStft:
    """Windowed, zero-padded, one-sided STFT of a real signal.

    Frame t covers samples [t*hop, t*hop + win_len); frames are multiplied
    by the symmetric Blackman window, zero-padded to nfft and DFT'd, and
    rows 0 .. one_sided_bins-1 are retained. Column t of the result is the
    spectrum of frame t.
    """
    x = as_float_vector(signal, "signal")
    n_frames = cfg.n_frames(x.size)
    window = blackman_window(cfg.win_len)
    starts = np.arange(n_frames) * cfg.hop
    frames = x[starts[:, None] + np.arange(cfg.win_len)[None, :]]
    spectrum = np.fft.fft(frames * window, n=cfg.nfft, axis=1)
    return ComplexStft(values=spectrum[:, : cfg.one_sided_bins].T.copy(), cfg=cfg)


def log_power(s: ComplexStft) -> Spectrogram:
    """Natural log of the absolute square, floored by the config epsilon."""
    power = s.values.real**2 + s.values.imag**2
    return Spectrogram(values=np.log(power + s.cfg.epsilon), cfg=s.cfg)


def stack3(p: Spectrogram) -> StackedSpectrogram:
    """Min-max normalize to [0, 1] and replicate into three components.

    A constant spectrogram has no range to normalize, so it maps to all
    zeros by convention.
    """
    return StackedSpectrogram(values=_minmax(p.values))


def export_image(p: Spectrogram, path, format: str = "pgm") -> None:
    """Write an 8-bit grayscale image of the spectrogram.

    Width is n_frames, height is n_bins; row 0 of the matrix (the lowest
    frequency) lands at the bottom of the image, so the matrix is flipped
    vertically on write. Intensity is round(255 * minmax(p)).
    """
    img = np.rint(255.0 * _minmax(p.values)).astype(np.uint8)[::-1, :]
    if format == "pgm":
        header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(img.tobytes())
    elif format == "png":
        from PIL import Image

        Image.fromarray(img, mode="L").save(path, format="PNG")
    else:
        raise ValueError(f"unsupported image format {format!r}")


def write_matrix(values: np.ndarray, path) -> None:
    """Dump a real matrix as SPG1: 16-byte header, then row-major f64 LE.

    Header layout: magic "SPG1" | u32 rows | u32 cols | u32 reserved (zero).
    """
    arr = np.ascontiguousarray(values, dtype="<f8")
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", SPG_MAGIC, arr.shape[0], arr.shape[1], 0))
        fh.write(arr.tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) < 16 or header[:4] != SPG_MAGIC:
            raise ValueError(f"{path}: bad magic, not an SPG1 matrix dump")
        _, rows, cols, _ = struct.unpack("<4sIII", header)
        payload = fh.read(rows * cols * 8)
    if len(payload) != rows * cols * 8:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()


def _minmax(values: np.ndarray) -> np.ndarray:
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)
