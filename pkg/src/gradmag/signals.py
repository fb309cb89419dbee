"""1-D signal utilities: target derivatives and zero-phase band-pass filtering.

The band-pass filters are Butterworth designs built from the analog
prototype with frequency pre-warping and the bilinear transform, stored
as a cascade of biquad sections and run in Direct Form II transposed
with float64 state. ``filtfilt`` applies the cascade forward and
backward over odd-reflection padding with steady-state initial
conditions, so constant inputs produce exactly zero output and the
composite response has zero phase.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError


@dataclass(frozen=True)
class SignalTrace:
    """A uniformly sampled scalar time series."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ArgumentError("trace needs at least 2 samples")
        if not self.fs > 0:
            raise ArgumentError(f"fs must be positive, got {self.fs}")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class FilterSpec:
    """Cascade of band-pass biquads: (b0, b1, b2, a1, a2) per section, a0 == 1."""

    biquad_sections: tuple
    order: int
    lo_hz: float
    hi_hz: float

    def __post_init__(self):
        if len(self.biquad_sections) != self.order // 2:
            raise ArgumentError("section count must equal order/2")
        for b0, b1, b2, a1, a2 in self.biquad_sections:
            poles = np.roots([1.0, a1, a2])
            if np.any(np.abs(poles) >= 1.0):
                raise ArgumentError(f"unstable biquad (a1={a1}, a2={a2})")


def first_difference(trace: SignalTrace) -> SignalTrace:
    """Forward first difference y(t) = p(t+1) - p(t); length drops by one."""
    if len(trace) < 2:
        raise ArgumentError("need at least 2 samples to difference")
    return SignalTrace(samples=np.diff(trace.samples), fs=trace.fs)


def _butter_prototype_poles(n: int) -> np.ndarray:
    """Left-half-plane poles of the unit analog Butterworth low-pass."""
    k = np.arange(n)
    return np.exp(1j * np.pi * (2 * k + n + 1) / (2 * n))


def butter_bandpass(order: int, lo_hz: float, hi_hz: float, fs: float) -> FilterSpec:
    """Design an order-`order` Butterworth band-pass as order/2 biquads.

    `order` counts the poles of the final band-pass filter (the paper-
    style usage: a "6th-order" band-pass comes from a 3rd-order low-pass
    prototype). The digital peak sits at the bilinear image of the
    pre-warped geometric band center and is normalized to unit gain.
    """
    if order not in (2, 4, 6, 8):
        raise ArgumentError(f"order must be one of 2, 4, 6, 8, got {order}")
    if not (0 < lo_hz < hi_hz < fs / 2):
        raise ArgumentError(f"need 0 < lo < hi < fs/2, got lo={lo_hz}, hi={hi_hz}, fs={fs}")

    n = order // 2
    # Pre-warp the band edges so the bilinear transform lands them exactly.
    w_lo = 2.0 * fs * math.tan(math.pi * lo_hz / fs)
    w_hi = 2.0 * fs * math.tan(math.pi * hi_hz / fs)
    w0 = math.sqrt(w_lo * w_hi)
    bw = w_hi - w_lo

    # Low-pass prototype pole p maps to the two roots of s^2 - bw*p*s + w0^2.
    analog_poles = []
    for p in _butter_prototype_poles(n):
        disc = np.sqrt((bw * p) ** 2 - 4.0 * w0 ** 2 + 0j)
        analog_poles.append((bw * p + disc) / 2.0)
        analog_poles.append((bw * p - disc) / 2.0)
    z_poles = np.array([(2 * fs + s) / (2 * fs - s) for s in analog_poles])

    # Pair each pole with its conjugate to get real-coefficient biquads.
    remaining = list(z_poles)
    pairs = []
    reals = []
    while remaining:
        z = remaining.pop(0)
        if abs(z.imag) < 1e-10:
            reals.append(z.real)
            continue
        match = min(range(len(remaining)), key=lambda i: abs(remaining[i] - z.conjugate()))
        remaining.pop(match)
        pairs.append((z, z.conjugate()))
    reals.sort()
    while reals:
        pairs.append((reals.pop(0), reals.pop(-1)))

    w_center = 2.0 * math.atan(w0 / (2.0 * fs))
    zc = np.exp(1j * w_center)
    sections = []
    for z1, z2 in pairs:
        a1 = float(-(z1 + z2).real)
        a2 = float((z1 * z2).real)
        # Numerator (z^2 - 1): one zero each at z = +1 and z = -1 per section.
        resp = (zc ** 2 - 1.0) / (zc ** 2 + a1 * zc + a2)
        g = 1.0 / abs(resp)
        sections.append((g, 0.0, -g, a1, a2))
    return FilterSpec(
        biquad_sections=tuple(sections), order=order, lo_hz=lo_hz, hi_hz=hi_hz
    )


def filter_gain(spec: FilterSpec, freq_hz, fs: float, *, zero_phase: bool = False):
    """Magnitude response |H| (or |H|^2 for the zero-phase composite)."""
    w = 2.0 * np.pi * np.asarray(freq_hz, dtype=np.float64) / fs
    z = np.exp(1j * w)
    h = np.ones_like(z)
    for b0, b1, b2, a1, a2 in spec.biquad_sections:
        h = h * (b0 * z ** 2 + b1 * z + b2) / (z ** 2 + a1 * z + a2)
    mag = np.abs(h)
    return mag ** 2 if zero_phase else mag


def _biquad_zi(b0, b1, b2, a1, a2):
    """Steady-state DF2T state for unit constant input."""
    y = (b0 + b1 + b2) / (1.0 + a1 + a2)
    s2 = b2 - a2 * y
    s1 = b1 + s2 - a1 * y
    return s1, s2


def _sos_forward(x: np.ndarray, sections) -> np.ndarray:
    """Run the biquad cascade along axis 0 with steady-state initial state."""
    y = x.astype(np.float64, copy=True)
    for b0, b1, b2, a1, a2 in sections:
        zi1, zi2 = _biquad_zi(b0, b1, b2, a1, a2)
        s1 = zi1 * y[0]
        s2 = zi2 * y[0]
        out = np.empty_like(y)
        for t in range(y.shape[0]):
            xt = y[t]
            yt = b0 * xt + s1
            s1 = b1 * xt + s2 - a1 * yt
            s2 = b2 * xt - a2 * yt
            out[t] = yt
        y = out
    return y


def filtfilt_array(x: np.ndarray, spec: FilterSpec, axis: int = 0) -> np.ndarray:
    """Zero-phase filtering along `axis` of an N-d array.

    Odd-reflection padding (2*x[0] - x[k]) of length 3*order at both
    ends, forward pass, backward pass, then the padding is stripped.
    """
    x = np.asarray(x, dtype=np.float64)
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    pad = 3 * spec.order
    if n <= pad:
        raise ArgumentError(f"input length {n} must exceed 3*order = {pad}")
    head = 2.0 * x[0] - x[pad:0:-1]
    tail = 2.0 * x[-1] - x[-2 : -pad - 2 : -1]
    ext = np.concatenate([head, x, tail], axis=0)
    ext = _sos_forward(ext, spec.biquad_sections)
    ext = _sos_forward(ext[::-1], spec.biquad_sections)[::-1]
    return np.moveaxis(ext[pad : pad + n], 0, axis)


def filtfilt(trace: SignalTrace, spec: FilterSpec) -> SignalTrace:
    """Zero-phase band-pass of a trace; output has the input's length and fs."""
    return SignalTrace(samples=filtfilt_array(trace.samples, spec), fs=trace.fs)


def save_trace_csv(path, trace: SignalTrace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for i, v in enumerate(trace.samples):
            writer.writerow([i / trace.fs, repr(float(v))])


def load_trace_csv(path) -> SignalTrace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[0] != ["t", "value"]:
        raise ArgumentError(f"{path}: expected a t,value CSV with >= 2 samples")
    times = np.array([float(r[0]) for r in rows[1:]])
    values = np.array([float(r[1]) for r in rows[1:]])
    fs = 1.0 / np.mean(np.diff(times))
    return SignalTrace(samples=values, fs=float(fs))
