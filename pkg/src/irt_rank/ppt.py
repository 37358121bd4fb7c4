"""Pulse phase thermography: pixel-wise forward DFT of the time axis.

The transform uses the 1/N-normalized DFT
F(u) = (1/N) * sum_n f(n) * exp(-j*2*pi*u*n/N); only the non-negative
frequencies u = 0..floor(N/2) are kept for the real-valued input. Amplitude
is |F(u)|, phase the four-quadrant arctangent of Im/Re (0 when both vanish).
"""

from dataclasses import dataclass

import numpy as np

from .core import DataError, ImageSequence

UNIFORMITY_RTOL = 1e-6


@dataclass(frozen=True)
class SpectralPair:
    """Amplitude and phase stacks over frequency.

    The u = 0 (DC) bin is retained for amplitude curves but its phase is
    degenerate; `dc_index` marks it.
    """

    amplitude: ImageSequence
    phase: ImageSequence
    frequencies: np.ndarray
    dc_index: int = 0


def ppt_transform(seq):
    """Transform a time sequence into amplitude and phase frequency stacks."""
    if seq.axis_kind != "time":
        raise DataError(f"PPT needs a time sequence, got axis_kind={seq.axis_kind!r}")
    n = seq.n_frames
    if n < 2:
        raise DataError("PPT needs at least 2 frames")
    steps = np.diff(seq.axis_values)
    dt = (seq.axis_values[-1] - seq.axis_values[0]) / (n - 1)
    if np.max(np.abs(steps - dt)) > UNIFORMITY_RTOL * dt:
        raise DataError("time axis is not uniformly sampled")

    spectrum = np.fft.rfft(seq.frames, axis=0) / n
    amplitude = np.abs(spectrum)
    re = spectrum.real
    im = spectrum.imag
    phase = np.arctan2(im, re)
    phase[(re == 0.0) & (im == 0.0)] = 0.0

    frame_rate = 1.0 / dt
    freqs = np.arange(spectrum.shape[0]) * frame_rate / n
    return SpectralPair(
        amplitude=ImageSequence(frames=amplitude, axis_kind="frequency", axis_values=freqs),
        phase=ImageSequence(frames=phase, axis_kind="frequency", axis_values=freqs),
        frequencies=freqs,
    )
