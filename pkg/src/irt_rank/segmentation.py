"""Intensity quantization of one frame into ordered phases.

The default method is a deterministic 1D k-means (Lloyd iterations seeded at
the (j+0.5)/phi quantiles, no RNG); `equal_width` simply cuts the intensity
range into equal intervals. Frames are min-max normalized first, which makes
the label map invariant under positive affine intensity transforms.
"""

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, _frozen_array, normalize01_frame

METHODS = ("kmeans1d", "equal_width")


@dataclass(frozen=True)
class SegmentedImage:
    """Per-pixel phase labels, phase 0 being the lowest-intensity cluster.

    thresholds are the phi-1 cut points in the units of the original frame;
    a value equal to a cut point belongs to the lower phase.
    """

    labels: np.ndarray
    phi: int
    thresholds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", _frozen_array(self.labels, dtype=np.int32))
        object.__setattr__(self, "thresholds", _frozen_array(self.thresholds))

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]


def kmeans1d(values, k, max_iters=500, objective_trace=None):
    """Lloyd's algorithm on sorted 1D data with quantile-seeded centers.

    Returns (centers, thresholds); thresholds are the midpoints between
    adjacent centers. Deterministic: no RNG is involved. If
    `objective_trace` is a list, the within-cluster sum of squares after
    each assignment is appended to it.
    """
    s = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = s.size
    if k < 1 or n == 0:
        raise ConfigError(f"kmeans1d needs k >= 1 and data, got k={k}, n={n}")

    centers = s[np.minimum((((np.arange(k) + 0.5) * n) / k).astype(np.intp), n - 1)]
    if np.unique(centers).size < k:
        # duplicate quantiles (heavily tied data): seed from distinct values
        u = np.unique(s)
        centers = u[np.minimum((((np.arange(k) + 0.5) * u.size) / k).astype(np.intp), u.size - 1)]

    csum = np.concatenate([[0.0], np.cumsum(s)])
    csum2 = np.concatenate([[0.0], np.cumsum(s * s)])
    prev_split = None
    for _ in range(max_iters):
        thresholds = 0.5 * (centers[:-1] + centers[1:])
        split = np.concatenate([[0], np.searchsorted(s, thresholds, side="left"), [n]])
        if objective_trace is not None:
            sse = 0.0
            for j in range(k):
                lo, hi = split[j], split[j + 1]
                cnt = hi - lo
                if cnt > 0:
                    sse += (csum2[hi] - csum2[lo]) - (csum[hi] - csum[lo]) ** 2 / cnt
            objective_trace.append(sse)
        if prev_split is not None and np.array_equal(split, prev_split):
            break
        prev_split = split
        counts = np.diff(split)
        sums = np.diff(csum[split])
        centers = np.where(counts > 0, sums / np.maximum(counts, 1), centers)
    return centers, 0.5 * (centers[:-1] + centers[1:])


def segment(frame, phi, method="kmeans1d"):
    """Quantize a frame into `phi` intensity phases.

    A constant frame maps entirely to phase 0 with degenerate thresholds;
    for kmeans1d with fewer distinct values than phi, only as many phases as
    there are distinct values are occupied and the trailing ones stay empty.
    """
    if phi < 2:
        raise ConfigError(f"phi must be >= 2, got {phi}")
    if method not in METHODS:
        raise ConfigError(f"unknown segmentation method {method!r}, expected one of {METHODS}")
    frame = np.asarray(frame, dtype=np.float64)
    lo = frame.min()
    hi = frame.max()
    if hi == lo:
        return SegmentedImage(labels=np.zeros(frame.shape, dtype=np.int32), phi=phi,
                              thresholds=np.full(phi - 1, lo))

    norm = normalize01_frame(frame)
    if method == "equal_width":
        cuts = np.arange(1, phi) / phi
    else:
        distinct = np.unique(norm).size
        k_eff = min(phi, distinct)
        _, cuts = kmeans1d(norm, k_eff)
        if k_eff < phi:
            # unoccupied trailing phases: park their cut points above the data
            cuts = np.concatenate([cuts, np.full(phi - k_eff, np.nextafter(1.0, 2.0))])

    # ties at a cut point go to the lower phase
    labels = np.searchsorted(cuts, norm.ravel(), side="left").reshape(frame.shape)
    return SegmentedImage(labels=labels.astype(np.int32), phi=phi,
                          thresholds=lo + cuts * (hi - lo))
