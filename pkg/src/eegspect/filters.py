"""IIR preprocessing filters realized as cascades of second-order sections.

The preprocessing chain consists of a Chebyshev type-I bandpass (default
8th-order prototype, 0.01 to 200 Hz at fs 512) and a 50 Hz power-line notch.
Both are represented as :class:`SosCascade` values: ordered biquad sections
plus a scalar gain. Second-order sections are the only supported realization
because the 0.01 Hz lower band edge places poles within ~5e-6 of the unit
circle, where a single-polynomial transfer function is numerically unusable.

Filtering is causal single-pass with zero initial state on every call; no
state is carried between signals.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as _sps

from .validation import as_float_vector, check_positive

# Stability margin required of every section: |pole| < 1 - _MARGIN.
_MARGIN = 1e-12


@dataclass(frozen=True)
class Biquad:
    """One second-order section, feedback normalized so a0 = 1.

    Transfer function: (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
    Construction fails unless both poles lie strictly inside the unit circle.
    """

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def __post_init__(self):
        for coef in (self.b0, self.b1, self.b2, self.a1, self.a2):
            if not math.isfinite(coef):
                raise ValueError("biquad coefficients must be finite")
        if max(abs(p) for p in self.poles()) >= 1.0 - _MARGIN:
            raise ValueError(
                f"unstable biquad: pole magnitude {max(abs(p) for p in self.poles())!r}"
            )

    def poles(self) -> tuple[complex, complex]:
        """Roots of z^2 + a1 z + a2, via the quadratic formula."""
        disc = cmath.sqrt(self.a1 * self.a1 - 4.0 * self.a2)
        return ((-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0)


@dataclass(frozen=True)
class SosCascade:
    """A stable IIR filter: ordered biquad sections and an overall gain."""

    sections: tuple[Biquad, ...]
    overall_gain: float = 1.0

    def __post_init__(self):
        if len(self.sections) == 0:
            raise ValueError("cascade must contain at least one section")
        if not math.isfinite(self.overall_gain):
            raise ValueError("overall_gain must be finite")


def design_cheby_bandpass(
    order: int, low_hz: float, high_hz: float, fs: float, ripple_db: float
) -> SosCascade:
    """Design a Chebyshev type-I bandpass as ``order`` biquad sections.

    The analog type-I prototype of the given order is band-transformed to
    [low_hz, high_hz] and bilinear-mapped at ``fs`` with band-edge
    prewarping; the bandpass transform doubles the pole count, so prototype
    order 8 yields 16 poles factored into 8 sections. Passband magnitude
    ripples within [10^(-ripple_db/20), 1].

    Parameters
    ----------
    order : int
        Prototype order. Must be even and >= 2.
    low_hz, high_hz : float
        Band edges, 0 <= low_hz < high_hz < fs/2.
    fs : float
        Sampling rate in Hz.
    ripple_db : float
        Peak-to-peak passband ripple in dB, > 0.
    """
    check_positive(fs, "fs")
    check_positive(ripple_db, "ripple_db")
    if order < 2 or order % 2 != 0:
        raise ValueError(f"order must be even and >= 2, got {order}")
    if not (0.0 <= low_hz < high_hz < fs / 2.0):
        raise ValueError(
            f"band edges must satisfy 0 <= low < high < fs/2, got [{low_hz}, {high_hz}] at fs {fs}"
        )
    sos = _sps.cheby1(
        order, ripple_db, [low_hz, high_hz], btype="bandpass", output="sos", fs=fs
    )
    return _cascade_from_sos_array(sos)


def design_notch(f0_hz: float, fs: float, q: float) -> SosCascade:
    """Design a single-biquad notch with zeros on the unit circle at +-f0.

    The numerator is z^2 - 2 cos(w0) z + 1 (roots exactly e^{+-i w0}); the
    poles sit at radius sqrt((1-alpha)/(1+alpha)) on the same angle, where
    alpha = sin(w0)/(2q). Narrower q pulls the poles toward the zeros and
    shrinks the notch width. Gain is exactly 1 at DC and Nyquist.
    """
    check_positive(q, "q")
    check_positive(fs, "fs")
    if not (0.0 < f0_hz < fs / 2.0):
        raise ValueError(f"notch frequency must lie in (0, fs/2), got {f0_hz}")
    w0 = 2.0 * math.pi * f0_hz / fs
    alpha = math.sin(w0) / (2.0 * q)
    scale = 1.0 + alpha
    section = Biquad(
        b0=1.0 / scale,
        b1=-2.0 * math.cos(w0) / scale,
        b2=1.0 / scale,
        a1=-2.0 * math.cos(w0) / scale,
        a2=(1.0 - alpha) / scale,
    )
    return SosCascade(sections=(section,), overall_gain=1.0)


def apply_sos(cascade: SosCascade, signal) -> np.ndarray:
    """Run ``signal`` through the cascade (causal, zero initial state).

    Each section is applied in direct-form II transposed; the output is
    scaled by ``overall_gain``. Output length equals input length.
    """
    x = as_float_vector(signal, "signal")
    y = _sps.sosfilt(_sos_array(cascade), x)
    if cascade.overall_gain != 1.0:
        y = y * cascade.overall_gain
    return y


def frequency_response(cascade: SosCascade, freqs_hz, fs: float) -> np.ndarray:
    """Evaluate H(e^{i 2 pi f / fs}) at each frequency in ``freqs_hz``.

    Computed directly as the product over sections of
    (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2), times the overall
    gain. Kept independent of any library evaluator on purpose: this is the
    instrument the design functions are verified against.
    """
    check_positive(fs, "fs")
    f = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
    if np.any(f < 0.0) or np.any(f > fs / 2.0):
        raise ValueError("frequencies must lie within [0, fs/2]")
    zinv = np.exp(-2j * np.pi * f / fs)
    zinv2 = zinv * zinv
    h = np.full(f.shape, cascade.overall_gain, dtype=np.complex128)
    for s in cascade.sections:
        h *= (s.b0 + s.b1 * zinv + s.b2 * zinv2) / (1.0 + s.a1 * zinv + s.a2 * zinv2)
    return h


def cascade_to_json(cascade: SosCascade) -> str:
    """Serialize a cascade for cross-checking against external design tools."""
    payload = {
        "gain": cascade.overall_gain,
        "sections": [
            {"b0": s.b0, "b1": s.b1, "b2": s.b2, "a1": s.a1, "a2": s.a2}
            for s in cascade.sections
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def cascade_from_json(text: str) -> SosCascade:
    payload = json.loads(text)
    sections = tuple(
        Biquad(s["b0"], s["b1"], s["b2"], s["a1"], s["a2"]) for s in payload["sections"]
    )
    return SosCascade(sections=sections, overall_gain=float(payload["gain"]))


def _sos_array(cascade: SosCascade) -> np.ndarray:
    rows = [(s.b0, s.b1, s.b2, 1.0, s.a1, s.a2) for s in cascade.sections]
    return np.asarray(rows, dtype=np.float64)


def _cascade_from_sos_array(sos: np.ndarray) -> SosCascade:
    sections = []
    for row in np.asarray(sos, dtype=np.float64):
        b0, b1, b2, a0, a1, a2 = row
        # Defensive: scipy emits a0 == 1, but normalize rather than assume.
        sections.append(Biquad(b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0))
    return SosCascade(sections=tuple(sections), overall_gain=1.0)
