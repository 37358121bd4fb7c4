"""Window-size schedules and window placement strategies.

Two placement strategies are supported: a static non-overlapping grid and
random placement of distinct (possibly overlapping) windows capped at a
target sample count. When fewer placements exist than the cap, all of them
are used.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ConfigError, DataError

# Default number of sampled windows per size, from sample-size planning for a
# coefficient-of-variation estimate: assumed CV = 0.5, target confidence
# interval width w = 0.125, assurance gamma = 0.99.
DEFAULT_NOS = 439
NOS_PLANNING_CV = 0.5
NOS_PLANNING_WIDTH = 0.125
NOS_PLANNING_ASSURANCE = 0.99

STRATEGIES = ("static_grid", "random")


@dataclass(frozen=True)
class Window:
    """Square window: top-left pixel (x, y) and side length n."""

    x: int
    y: int
    n: int


@dataclass(frozen=True)
class SamplingPlan:
    strategy: str = "random"
    nos_set: int = DEFAULT_NOS
    seed: int = 0
    sizes: tuple = ()

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if self.nos_set < 1:
            raise ConfigError(f"nos_set must be >= 1, got {self.nos_set}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        sizes = tuple(int(n) for n in self.sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError(f"sizes must be strictly increasing, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    def with_seed(self, seed):
        return replace(self, seed=seed)


def size_schedule(width, height, phi, stride=1):
    """Window sizes n_min..n_max for an image and phase count.

    n_min = max(2, ceil(sqrt(phi))) so the smallest window holds at least phi
    pixels; n_max = floor(min(width, height) / 2) so at least four placements
    exist at every size.
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    n_min = max(2, math.isqrt(phi - 1) + 1)
    n_max = min(width, height) // 2
    if n_max < n_min:
        raise DataError(f"image {width}x{height} too small for phi={phi} (n_min={n_min})")
    return list(range(n_min, n_max + 1, stride))


def sample_positions(width, height, n, plan):
    """Top-left (ys, xs) arrays for all sampled windows of side n.

    Random placements derive their RNG stream from plan.seed XOR n, so
    per-size sampling is order-independent. Positions are pairwise distinct.
    """
    if n < 1 or n > min(width, height):
        raise DataError(f"window size {n} out of range for image {width}x{height}")
    ny = height - n + 1
    nx = width - n + 1

    if plan.strategy == "static_grid":
        gy = height // n
        gx = width // n
        ys, xs = np.divmod(np.arange(gy * gx, dtype=np.intp), gx)
        return ys * n, xs * n

    total = ny * nx
    if total <= plan.nos_set:
        ys, xs = np.divmod(np.arange(total, dtype=np.intp), nx)
        return ys, xs

    rng = np.random.default_rng(plan.seed ^ n)
    if total <= 4 * plan.nos_set:
        flat = rng.permutation(total)[:plan.nos_set]
    else:
        # rejection with a seen-set; cheaper than permuting a huge index space
        seen = set()
        picked = []
        while len(picked) < plan.nos_set:
            for v in rng.integers(0, total, size=2 * (plan.nos_set - len(picked))):
                v = int(v)
                if v not in seen:
                    seen.add(v)
                    picked.append(v)
                    if len(picked) == plan.nos_set:
                        break
        flat = np.asarray(picked, dtype=np.intp)
    ys, xs = np.divmod(flat.astype(np.intp), nx)
    return ys, xs


def sample_windows(width, height, n, plan):
    """Window objects for all sampled placements of side n."""
    ys, xs = sample_positions(width, height, n, plan)
    return [Window(x=int(x), y=int(y), n=n) for y, x in zip(ys, xs)]
