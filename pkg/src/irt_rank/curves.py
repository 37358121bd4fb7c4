"""Metric-curve post-processing: normalization, zero-phase low-pass filtering,
peak-range detection, and CSV/SVG emission."""

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.signal import butter, filtfilt

from .core import ConfigError, DataError, _frozen_array


@dataclass(frozen=True)
class MetricCurve:
    """One scalar metric value per sequence index."""

    name: str
    axis_values: np.ndarray
    values: np.ndarray
    filtered: bool = False
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "axis_values", _frozen_array(self.axis_values))
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.values.shape != self.axis_values.shape or self.values.ndim != 1:
            raise DataError("curve values and axis_values must be 1D and equally long")

    @property
    def indices(self):
        return np.arange(self.values.size)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class PeakRange:
    """Contiguous index range around one detected maximum."""

    start: int
    stop: int          # inclusive
    peak_index: int
    peak_value: float
    is_global: bool


def normalize01(curve):
    """Min-max map onto [0, 1]; a constant curve maps to zeros."""
    v = curve.values
    if not np.all(np.isfinite(v)):
        raise DataError(f"curve {curve.name!r} has non-finite values")
    lo, hi = v.min(), v.max()
    out = np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo)
    return replace(curve, values=out, normalized=True)


def butterworth_lowpass(curve, order=3, cutoff_frac=0.05):
    """Zero-phase digital Butterworth low-pass along the index axis.

    cutoff_frac is the cutoff as a fraction of the Nyquist frequency of the
    index axis. The filter runs forward and backward with odd-reflection
    padding of 6*order samples at both ends.
    """
    if not 0.0 < cutoff_frac < 1.0:
        raise ConfigError(f"cutoff_frac must be in (0, 1), got {cutoff_frac}")
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    padlen = 6 * order
    if len(curve) <= padlen:
        raise DataError(f"curve of length {len(curve)} too short for order {order} "
                        f"(needs > {padlen} samples)")
    b, a = butter(order, cutoff_frac)
    out = filtfilt(b, a, curve.values, padtype="odd", padlen=padlen)
    return replace(curve, values=out, filtered=True)


def _prominence(values, peak):
    """Topographic prominence of a local maximum at index `peak`.

    On each side, the base is the lowest value passed before reaching
    strictly higher terrain (or the curve end); prominence is the height
    above the higher of the two bases.
    """
    h = values[peak]
    base = -np.inf
    for step in (-1, 1):
        lowest = h
        i = peak + step
        while 0 <= i < values.size and values[i] <= h:
            lowest = min(lowest, values[i])
            i += step
        base = max(base, lowest)
    return h - base


def find_max_ranges(curve, prominence_frac=0.1, top_k=3):
    """Locate maxima with sufficient prominence and their surrounding ranges.

    A range extends from the peak while values stay above
    peak - prominence_threshold/2. The highest peak is flagged global
    (earliest index on ties). Boundary maxima are eligible.
    """
    v = curve.values
    if v.size == 0:
        raise DataError("cannot locate maxima of an empty curve")
    span = float(v.max() - v.min())
    if span == 0.0:
        return [PeakRange(0, v.size - 1, 0, float(v[0]), True)]
    threshold = prominence_frac * span

    candidates = []
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[j + 1] == v[i]:
            j += 1
        left_ok = i == 0 or v[i - 1] < v[i]
        right_ok = j == v.size - 1 or v[j + 1] < v[i]
        if left_ok and right_ok:
            candidates.append(i)          # plateau represented by its first index
        i = j + 1

    peaks = [p for p in candidates if _prominence(v, p) >= threshold]
    if not peaks:
        peaks = [int(np.argmax(v))]
    peaks.sort(key=lambda p: (-v[p], p))
    peaks = peaks[:top_k]

    ranges = []
    for rank, p in enumerate(peaks):
        floor = v[p] - threshold / 2.0
        start = p
        while start > 0 and v[start - 1] >= floor:
            start -= 1
        stop = p
        while stop + 1 < v.size and v[stop + 1] >= floor:
            stop += 1
        ranges.append(PeakRange(start=start, stop=stop, peak_index=p,
                                peak_value=float(v[p]), is_global=rank == 0))
    ranges.sort(key=lambda r: r.peak_index)
    return ranges


def write_curve_csv(path, name, axis_values, raw, filtered=None, normalized=None):
    """CSV with columns index,axis_value,value_raw,value_filtered,value_normalized."""
    raw = np.asarray(raw, dtype=np.float64)
    filtered = raw if filtered is None else np.asarray(filtered, dtype=np.float64)
    normalized = raw if normalized is None else np.asarray(normalized, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "axis_value", "value_raw", "value_filtered",
                         "value_normalized"])
        for i in range(raw.size):
            writer.writerow([i, _fmt(axis_values[i]), _fmt(raw[i]),
                             _fmt(filtered[i]), _fmt(normalized[i])])


def read_curve_csv(path):
    """Read a CSV written by write_curve_csv; returns dict of column arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if header[:2] != ["index", "axis_value"]:
        raise DataError(f"{path}: not a metric-curve CSV")
    cols = {name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(header)}
    return cols


def _fmt(x):
    return format(float(x), ".17g")


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def write_curves_svg(path, curves, peak_ranges=None, width=880, height=420, title=""):
    """Static SVG line plot of normalized curves with peak-range bars.

    curves: list of (name, values) with values already in [0, 1] (curves are
    normalized here if they are not). peak_ranges: optional dict name ->
    list[PeakRange]; bars take the color of their curve.
    """
    if not curves:
        raise DataError("no curves to plot")
    peak_ranges = peak_ranges or {}
    ml, mr, mt, mb = 50, 14, 28, 34
    pw, ph = width - ml - mr, height - mt - mb
    n = max(len(v) for _, v in curves)

    def sx(i):
        return ml + (pw * i / max(n - 1, 1))

    def sy(y):
        return mt + ph * (1.0 - y)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
             'stroke="#888" stroke-width="1"/>']
    if title:
        parts.append(f'<text x="{ml}" y="18" font-family="sans-serif" font-size="13">'
                     f'{title}</text>')

    bar_h = 7
    for idx, (name, values) in enumerate(curves):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        v = np.asarray(values, dtype=np.float64)
        lo, hi = v.min(), v.max()
        vn = np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo)
        pts = " ".join(f"{sx(i):.2f},{sy(vn[i]):.2f}" for i in range(v.size))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
                     f'points="{pts}"/>')
        y_bar = height - mb + 4 + idx * (bar_h + 2)
        for rng in peak_ranges.get(name, []):
            x0, x1 = sx(rng.start), sx(rng.stop)
            opacity = "0.9" if rng.is_global else "0.45"
            parts.append(f'<rect x="{x0:.2f}" y="{y_bar:.2f}" '
                         f'width="{max(x1 - x0, 1.5):.2f}" height="{bar_h}" '
                         f'fill="{color}" fill-opacity="{opacity}"/>')
        lx = ml + 8 + idx * 110
        parts.append(f'<text x="{lx}" y="{mt + 14}" font-family="sans-serif" '
                     f'font-size="11" fill="{color}">{name}</text>')

    parts.append(f'<text x="{ml}" y="{height - mb + 4 + len(curves) * (bar_h + 2) + 10}" '
                 'font-family="sans-serif" font-size="10" fill="#444">index</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
