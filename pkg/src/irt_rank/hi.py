"""Homogeneity Index of Mixture.

The frame is normalized to [0, 1] and binned into k equal-width intensity
bins; a global reference probability per bin is compared against per-cell
probabilities over M x M cells. HI is the sum over bins of the across-cell
standard deviation of those probabilities (0 for a perfectly homogeneous
image). Cells come from a fixed grid (static mode) or are drawn at random
positions until the running HI converges (dynamic mode).
"""

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import ConfigError, DataError, normalize01_frame, parallel_map
from .curves import MetricCurve


@dataclass(frozen=True)
class HIConfig:
    bins: object = "auto"        # int or "auto": sqrt/log rule on pixel count
    cell_size: object = "auto"   # int or "auto": smallest M with M*M >= 4k
    mode: str = "static"         # "static" or "dynamic"
    seed: int = 0                # dynamic mode only
    conv_rel_tol: float = 1e-3   # dynamic: relative HI change over 10 iters
    max_iters: int = 1000        # dynamic iteration cap

    def __post_init__(self):
        if self.mode not in ("static", "dynamic"):
            raise ConfigError(f"mode must be 'static' or 'dynamic', got {self.mode!r}")
        if self.bins != "auto" and int(self.bins) < 2:
            raise ConfigError(f"bins must be >= 2, got {self.bins}")


@dataclass(frozen=True)
class HIResult:
    hi: float
    per_bin_sigma: np.ndarray
    n_cells: int
    global_probs: np.ndarray


def bin_count(n_obs):
    """Histogram bin count for n_obs observations.

    Below 1000 observations: round(sqrt(n)); from 1000 on: round(10*log10(n)).
    """
    if n_obs < 4:
        raise DataError(f"need at least 4 observations, got {n_obs}")
    if n_obs < 1000:
        return int(round(math.sqrt(n_obs)))
    return int(round(10.0 * math.log10(n_obs)))


def _bin_indices(values01, k):
    idx = (values01 * k).astype(np.intp)
    np.minimum(idx, k - 1, out=idx)   # value 1.0 joins the last bin
    return idx


def global_hist(values01, k):
    """Reference bin probabilities of [0,1] values over k equal-width bins."""
    values01 = np.asarray(values01, dtype=np.float64)
    if values01.size == 0:
        raise DataError("empty frame")
    if values01.min() < 0.0 or values01.max() > 1.0:
        raise DataError("values must lie in [0, 1]")
    counts = np.bincount(_bin_indices(values01.ravel(), k), minlength=k)
    return counts / values01.size


def _resolve(frame_shape, cfg):
    h, w = frame_shape
    k = bin_count(h * w) if cfg.bins == "auto" else int(cfg.bins)
    m = math.isqrt(4 * k - 1) + 1 if cfg.cell_size == "auto" else int(cfg.cell_size)
    if m * m < k:
        raise ConfigError(f"cell size {m} too small: needs M*M >= k ({k} bins)")
    if h < m or w < m:
        raise DataError(f"frame {w}x{h} smaller than one {m}x{m} cell")
    return k, m


def hi(frame, cfg=HIConfig()):
    """Homogeneity index of one frame (normalized internally)."""
    frame = np.asarray(frame, dtype=np.float64)
    k, m = _resolve(frame.shape, cfg)
    norm = normalize01_frame(frame)
    p_global = global_hist(norm, k)
    bins = _bin_indices(norm, k)

    if cfg.mode == "static":
        gy, gx = frame.shape[0] // m, frame.shape[1] // m
        core = bins[:gy * m, :gx * m]
        cell_of = (np.arange(gy * m) // m)[:, None] * gx + (np.arange(gx * m) // m)[None, :]
        flat = cell_of * k + core
        counts = np.bincount(flat.ravel(), minlength=gy * gx * k).reshape(gy * gx, k)
        probs = counts / (m * m)
        sigma = np.sqrt(np.mean((probs - p_global) ** 2, axis=0))
        return HIResult(hi=float(sigma.sum()), per_bin_sigma=sigma,
                        n_cells=gy * gx, global_probs=p_global)

    rng = np.random.default_rng(cfg.seed)
    sum_p = np.zeros(k)
    sum_p2 = np.zeros(k)
    history = []
    n = 0
    for _ in range(cfg.max_iters):
        y = int(rng.integers(0, frame.shape[0] - m + 1))
        x = int(rng.integers(0, frame.shape[1] - m + 1))
        counts = np.bincount(bins[y:y + m, x:x + m].ravel(), minlength=k)
        p = counts / (m * m)
        sum_p += p
        sum_p2 += p * p
        n += 1
        var = sum_p2 / n - 2.0 * p_global * (sum_p / n) + p_global ** 2
        sigma = np.sqrt(np.maximum(var, 0.0))
        value = float(sigma.sum())
        history.append(value)
        if n >= 10:
            window = history[-10:]
            spread = max(window) - min(window)
            ref = abs(window[-1])
            if (spread == 0.0) or (ref > 0.0 and spread / ref < cfg.conv_rel_tol):
                break
    return HIResult(hi=history[-1], per_bin_sigma=sigma, n_cells=n, global_probs=p_global)


def _hi_one(item, cfg):
    index, frame = item
    if cfg.mode == "dynamic":
        cfg = HIConfig(bins=cfg.bins, cell_size=cfg.cell_size, mode=cfg.mode,
                       seed=cfg.seed ^ index, conv_rel_tol=cfg.conv_rel_tol,
                       max_iters=cfg.max_iters)
    return hi(frame, cfg).hi


def hi_curve(seq, cfg=HIConfig(), workers=1):
    """Per-frame HI over a sequence. Dynamic-mode RNG is reseeded per frame
    (seed XOR frame index) so results do not depend on evaluation order."""
    values = parallel_map(partial(_hi_one, cfg=cfg),
                          list(enumerate(seq.frames)), workers=workers)
    return MetricCurve(name="hi", axis_values=seq.axis_values,
                       values=np.asarray(values, dtype=np.float64))
