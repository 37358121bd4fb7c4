"""Discrete 2D Minkowski functionals of binary masks and of windowed sub-regions.

Raw values are counts on the pixel grid:

  m0  foreground pixel count (area)
  m1  unit edges between foreground and background-or-border (boundary length)
  m2  Euler characteristic, V - E + F on the cubical complex of the
      foreground pixels (8-connected foreground by default)

The "paper" normalization rescales the boundary by 1/(2*pi) and reports the
Euler characteristic as chi/pi; both are positive per-functional scalings, so
coefficient-of-variation statistics downstream are identical either way.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, DataError

NORMALIZATIONS = ("raw", "paper")


@dataclass(frozen=True)
class MinkowskiTriple:
    m0: float
    m1: float
    m2: float
    normalization: str = "raw"


def _normalize_triple(m0, m1, m2, normalization):
    if normalization == "raw":
        return MinkowskiTriple(float(m0), float(m1), float(m2), "raw")
    if normalization == "paper":
        return MinkowskiTriple(float(m0), m1 / (2.0 * math.pi), m2 / math.pi, "paper")
    raise ConfigError(f"unknown normalization {normalization!r}, expected one of {NORMALIZATIONS}")


def functionals(mask, normalization="raw", connectivity=8):
    """Minkowski triple of a boolean mask (empty foreground gives zeros)."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.size == 0:
        raise DataError(f"mask must be a non-empty 2D grid, got shape {mask.shape}")
    if connectivity not in (4, 8):
        raise ConfigError(f"connectivity must be 4 or 8, got {connectivity}")

    f = int(np.count_nonzero(mask))
    if f == 0:
        return _normalize_triple(0, 0, 0, normalization)

    adj_h = int(np.count_nonzero(mask[:, :-1] & mask[:, 1:]))
    adj_v = int(np.count_nonzero(mask[:-1, :] & mask[1:, :]))
    adj = adj_h + adj_v
    m1 = 4 * f - 2 * adj

    # Vertices of the closed complex: grid nodes touching any foreground pixel.
    h, w = mask.shape
    pad = np.zeros((h + 2, w + 2), dtype=bool)
    pad[1:-1, 1:-1] = mask
    verts = pad[:-1, :-1] | pad[:-1, 1:] | pad[1:, :-1] | pad[1:, 1:]
    v = int(np.count_nonzero(verts))
    e = 4 * f - adj
    chi = v - e + f
    if connectivity == 4:
        a, b = mask[:-1, :-1], mask[:-1, 1:]
        c, d = mask[1:, :-1], mask[1:, 1:]
        diag = (a & d & ~b & ~c) | (b & c & ~a & ~d)
        chi += int(np.count_nonzero(diag))
    return _normalize_triple(f, m1, chi, normalization)


def functionals_window(segmented, window, phase, normalization="raw", connectivity=8):
    """Functionals of {label == phase} inside a window, border treated as background."""
    labels = segmented.labels
    if phase < 0 or phase >= segmented.phi:
        raise DataError(f"phase {phase} outside [0, {segmented.phi})")
    h, w = labels.shape
    if window.x < 0 or window.y < 0 or window.x + window.n > w or window.y + window.n > h:
        raise DataError(f"window {window} exceeds image bounds {w}x{h}")
    sub = labels[window.y:window.y + window.n, window.x:window.x + window.n]
    return functionals(sub == phase, normalization=normalization, connectivity=connectivity)


# ---------------------------------------------------------------------------
# Batch evaluation over many windows of one segmented image.
#
# All three functionals of an n x n window reduce to rectangle sums over a
# handful of per-phase indicator images (pixels, 4-adjacencies, occupied
# quads, pairwise ORs), so 2D prefix sums make every window O(1).
# ---------------------------------------------------------------------------

def _prefix2(img):
    p = np.zeros((img.shape[0] + 1, img.shape[1] + 1), dtype=np.int64)
    np.cumsum(img, axis=0, dtype=np.int64, out=p[1:, 1:])
    np.cumsum(p[1:, 1:], axis=1, out=p[1:, 1:])
    return p


def _rect(p, y, x, hh, ww):
    if hh <= 0 or ww <= 0:
        return np.zeros_like(y, dtype=np.int64)
    return p[y + hh, x + ww] - p[y, x + ww] - p[y + hh, x] + p[y, x]


class PhaseTables:
    """Prefix-summed indicator images for one phase of a labeled image."""

    __slots__ = ("b", "p_f", "p_ah", "p_av", "p_q", "p_oh", "p_ov", "p_d")

    def __init__(self, phase_mask, connectivity=8):
        b = np.asarray(phase_mask, dtype=bool)
        self.b = b
        self.p_f = _prefix2(b)
        self.p_ah = _prefix2(b[:, :-1] & b[:, 1:])
        self.p_av = _prefix2(b[:-1, :] & b[1:, :])
        a, bb = b[:-1, :-1], b[:-1, 1:]
        c, d = b[1:, :-1], b[1:, 1:]
        self.p_q = _prefix2(a | bb | c | d)
        self.p_oh = _prefix2(b[:, :-1] | b[:, 1:])
        self.p_ov = _prefix2(b[:-1, :] | b[1:, :])
        if connectivity == 4:
            self.p_d = _prefix2((a & d & ~bb & ~c) | (bb & c & ~a & ~d))
        else:
            self.p_d = None


def build_phase_tables(labels, phi, connectivity=8):
    """PhaseTables for every phase label of a segmented image."""
    labels = np.asarray(labels)
    return [PhaseTables(labels == p, connectivity=connectivity) for p in range(phi)]


def window_functionals_batch(tables, ys, xs, n):
    """Raw (m0, m1, m2) arrays for all windows (ys, xs) of side n, one phase.

    Window borders count as background, matching functionals() on the
    extracted sub-mask.
    """
    ys = np.asarray(ys, dtype=np.intp)
    xs = np.asarray(xs, dtype=np.intp)
    f = _rect(tables.p_f, ys, xs, n, n)
    adj = _rect(tables.p_ah, ys, xs, n, n - 1) + _rect(tables.p_av, ys, xs, n - 1, n)
    m1 = 4 * f - 2 * adj

    interior = _rect(tables.p_q, ys, xs, n - 1, n - 1)
    top = _rect(tables.p_oh, ys, xs, 1, n - 1)
    bottom = _rect(tables.p_oh, ys + n - 1, xs, 1, n - 1)
    left = _rect(tables.p_ov, ys, xs, n - 1, 1)
    right = _rect(tables.p_ov, ys, xs + n - 1, n - 1, 1)
    b = tables.b
    corners = (b[ys, xs].astype(np.int64) + b[ys, xs + n - 1]
               + b[ys + n - 1, xs] + b[ys + n - 1, xs + n - 1])
    v = interior + top + bottom + left + right + corners
    chi = v - 3 * f + adj
    if tables.p_d is not None:
        chi = chi + _rect(tables.p_d, ys, xs, n - 1, n - 1)
    return f, m1, chi
