"""Independent brute-force oracles used across the test suite.

These deliberately avoid the production code paths: the Euler
characteristic comes from explicit vertex/edge/face set enumeration, the
boundary measure from per-pixel neighbor checks, and statistics from plain
loops.
"""

import numpy as np


def complex_counts(mask):
    """(V, E, F) of the closed cubical complex of the foreground pixels."""
    verts = set()
    edges = set()
    faces = 0
    h, w = mask.shape
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            faces += 1
            verts.update({(y, x), (y, x + 1), (y + 1, x), (y + 1, x + 1)})
            edges.update({
                ("h", y, x), ("h", y + 1, x),     # top, bottom
                ("v", y, x), ("v", y, x + 1),     # left, right
            })
    return len(verts), len(edges), faces


def euler_characteristic(mask, connectivity=8):
    """V - E + F over the explicit complex; +diagonal quads for 4-connectivity."""
    v, e, f = complex_counts(mask)
    chi = v - e + f
    if connectivity == 4:
        h, w = mask.shape
        for y in range(h - 1):
            for x in range(w - 1):
                a, b = mask[y, x], mask[y, x + 1]
                c, d = mask[y + 1, x], mask[y + 1, x + 1]
                if (a and d and not b and not c) or (b and c and not a and not d):
                    chi += 1
    return chi


def boundary_edges(mask):
    """Unit edges between foreground and background-or-border."""
    h, w = mask.shape
    count = 0
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ny, nx = y + dy, x + dx
                if not (0 <= ny < h and 0 <= nx < w) or not mask[ny, nx]:
                    count += 1
    return count


def minkowski_triple(mask, connectivity=8):
    return (int(np.count_nonzero(mask)), boundary_edges(mask),
            euler_characteristic(mask, connectivity))


def aic_onset_reference(series):
    """Exhaustive two-segment AIC split, smallest minimizer, per-slice var."""
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    best_t, best = None, None
    for t in range(2, n - 1):
        cost = (t * np.log(np.var(x[:t]) + 1e-20)
                + (n - t - 1) * np.log(np.var(x[t:]) + 1e-20))
        if best is None or cost < best:
            best, best_t = cost, t
    return best_t


def tanimoto_counts_reference(detected, truth):
    """Triple-loop confusion counts."""
    n_rd = n_fd = n_md = 0
    h, w = detected.shape
    for y in range(h):
        for x in range(w):
            d, t = bool(detected[y, x]), bool(truth[y, x])
            if d and t:
                n_rd += 1
            elif d and not t:
                n_fd += 1
            elif t and not d:
                n_md += 1
    return n_rd, n_fd, n_md


def dft_reference(signal):
    """Direct-summation DFT with 1/N normalization, bins 0..floor(N/2)."""
    x = np.asarray(signal, dtype=np.float64)
    n = x.size
    out = []
    for u in range(n // 2 + 1):
        angles = -2j * np.pi * u * np.arange(n) / n
        out.append(np.sum(x * np.exp(angles)) / n)
    return np.array(out)
