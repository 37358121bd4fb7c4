"""Windowed Minkowski statistics, TGI/dTGI curves, TVE and REA.

Per frame: the image is segmented into phases; for every window size the
three Minkowski functionals are evaluated over sampled windows (one window
set per size, shared across phases); each functional is summarized by a
sample-count-normalized coefficient of variation cv = (sigma/mu)/sqrt(k).
The per-phase sum of the three cv values over window size is the TGI curve;
its discrete derivative feeds the Total Variation Energy
TVE = sum_phases sum_sizes (dTGI)^2 and the representative-elementary-area
estimate (AIC onset of the dTGI series, falling back to n_max when the tail
never settles, aggregated over phases by maximum).
"""

from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import ConfigError, DataError, parallel_map
from .curves import MetricCurve
from .minkowski import build_phase_tables, window_functionals_batch
from .sampling import sample_positions
from .segmentation import segment

MU_EPS = 1e-12       # guards sigma/|mu| when the mean is (near) zero
CV_MAX = 1e6         # cap keeps TVE finite when the guard engages
AIC_VAR_EPS = 1e-20
TAIL_TOL_DEFAULT = 0.05

# paper-style display scaling per functional (positive, so cv is unchanged)
_PAPER_SCALE = np.array([1.0, 1.0 / (2.0 * np.pi), 1.0 / np.pi])


@dataclass(frozen=True)
class FunctionalStats:
    """Window statistics of (m0, m1, m2) for one phase at one window size."""

    phase: int
    n: int
    k: int
    mean: np.ndarray       # (3,)
    std: np.ndarray        # (3,) population std
    cv_norm: np.ndarray    # (3,)
    saturated: np.ndarray  # (3,) bool, True where the mu ~ 0 cap engaged


@dataclass(frozen=True)
class TGICurve:
    phase: int
    sizes: np.ndarray
    tgi: np.ndarray
    dtgi: np.ndarray       # forward difference / size step, length len(sizes)-1


@dataclass(frozen=True)
class ReaTveResult:
    tve: float
    rea: int
    phase_reas: tuple
    converged: tuple


def cv_norm(mu, sigma, k):
    """(sigma/|mu|)/sqrt(k) with zero-std and zero-mean guards.

    Returns (value, saturated). sigma == 0 gives exactly 0; a vanishing mean
    with nonzero spread is capped at CV_MAX before the sqrt(k) scaling.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    ratio = sigma / (np.abs(mu) + MU_EPS)
    saturated = ratio > CV_MAX
    ratio = np.where(saturated, CV_MAX, ratio)
    ratio = np.where(sigma == 0.0, 0.0, ratio)
    return ratio / np.sqrt(k), saturated & (sigma != 0.0)


def stage1(segmented, plan, normalization="raw", connectivity=8):
    """Per-(phase, size) window statistics of the Minkowski functionals.

    Windows are sampled once per size and reused for every phase. Lists are
    ordered by size, then phase.
    """
    if not plan.sizes:
        raise ConfigError("sampling plan has no window sizes")
    if segmented.phi < 2:
        raise DataError("need at least two phases")
    scale = _PAPER_SCALE if normalization == "paper" else np.ones(3)
    tables = build_phase_tables(segmented.labels, segmented.phi, connectivity=connectivity)

    stats = []
    for n in plan.sizes:
        ys, xs = sample_positions(segmented.width, segmented.height, n, plan)
        k = ys.size
        for phase, tab in enumerate(tables):
            m = np.stack(window_functionals_batch(tab, ys, xs, n)).astype(np.float64)
            m *= scale[:, None]
            mean = m.mean(axis=1)
            std = m.std(axis=1)
            cv, sat = cv_norm(mean, std, k)
            stats.append(FunctionalStats(phase=phase, n=n, k=k, mean=mean,
                                         std=std, cv_norm=cv, saturated=sat))
    return stats


def stage2(stats):
    """TGI and dTGI per phase from stage-1 statistics."""
    by_phase = {}
    for st in stats:
        by_phase.setdefault(st.phase, []).append(st)
    curves = []
    for phase in sorted(by_phase):
        entries = sorted(by_phase[phase], key=lambda st: st.n)
        sizes = np.array([st.n for st in entries], dtype=np.float64)
        if sizes.size < 2:
            raise DataError("need at least two window sizes for a TGI curve")
        tgi = np.array([st.cv_norm.sum() for st in entries])
        dtgi = np.diff(tgi) / np.diff(sizes)
        curves.append(TGICurve(phase=phase, sizes=sizes, tgi=tgi, dtgi=dtgi))
    return curves


def tve(curves):
    """Total Variation Energy: sum over phases and sizes of squared dTGI."""
    if not curves:
        raise DataError("no TGI curves")
    return float(sum(np.sum(c.dtgi ** 2) for c in curves))


def aic_onset(series):
    """Two-segment variance split index minimizing the AIC cost.

    For a series of length N, evaluates
    AIC(t) = t*ln(var(x[:t]) + eps) + (N-t-1)*ln(var(x[t:]) + eps) over
    t in [2, N-2] and returns the smallest minimizing t (first index of the
    tail segment).
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n < 5:
        raise DataError(f"series of length {n} too short for onset picking (need >= 5)")
    # prefix moments give all split variances in one pass
    s1 = np.concatenate([[0.0], np.cumsum(x)])
    s2 = np.concatenate([[0.0], np.cumsum(x * x)])
    t = np.arange(2, n - 1)
    var_head = s2[t] / t - (s1[t] / t) ** 2
    cnt_tail = n - t
    var_tail = (s2[n] - s2[t]) / cnt_tail - ((s1[n] - s1[t]) / cnt_tail) ** 2
    aic = (t * np.log(np.maximum(var_head, 0.0) + AIC_VAR_EPS)
           + (n - t - 1) * np.log(np.maximum(var_tail, 0.0) + AIC_VAR_EPS))
    return int(t[np.argmin(aic)])


def rea(curves, n_max, tail_tol=TAIL_TOL_DEFAULT):
    """Representative elementary area from dTGI curves.

    Per phase: the AIC onset splits the dTGI series; the phase converged if
    the tail spread stays within tail_tol of the full dTGI range, in which
    case its REA is the size following the onset. Otherwise n_max is
    assigned. The overall REA is the maximum over phases.
    """
    phase_reas = []
    flags = []
    for c in curves:
        j = aic_onset(c.dtgi)
        spread = float(c.dtgi.max() - c.dtgi.min())
        tail_std = float(np.std(c.dtgi[j:]))
        ok = tail_std <= tail_tol * spread
        phase_reas.append(int(c.sizes[j + 1]) if ok else int(n_max))
        flags.append(ok)
    return max(phase_reas), tuple(phase_reas), tuple(flags)


def analyze_frame(frame, phi, plan, method="kmeans1d", normalization="raw",
                  connectivity=8, tail_tol=TAIL_TOL_DEFAULT):
    """Segment one frame and run stages 1-3; returns a ReaTveResult."""
    seg = segment(frame, phi, method=method)
    curves = stage2(stage1(seg, plan, normalization=normalization,
                           connectivity=connectivity))
    n_max = int(plan.sizes[-1])
    overall, per_phase, flags = rea(curves, n_max, tail_tol=tail_tol)
    return ReaTveResult(tve=tve(curves), rea=overall, phase_reas=per_phase,
                        converged=flags)


def _frame_result(item, phi, plan, method, normalization, connectivity, tail_tol):
    index, frame = item
    res = analyze_frame(frame, phi, plan.with_seed(plan.seed ^ index), method=method,
                        normalization=normalization, connectivity=connectivity,
                        tail_tol=tail_tol)
    return res.tve, res.rea


def rea_tve_curve(seq, phi, plan, method="kmeans1d", normalization="raw",
                  connectivity=8, tail_tol=TAIL_TOL_DEFAULT, workers=1):
    """TVE and REA curves over a sequence.

    Window sampling is reseeded per frame (plan seed XOR frame index), so
    identical configuration gives bit-identical curves at any worker count.
    """
    fn = partial(_frame_result, phi=phi, plan=plan, method=method,
                 normalization=normalization, connectivity=connectivity,
                 tail_tol=tail_tol)
    results = parallel_map(fn, list(enumerate(seq.frames)), workers=workers)
    tve_values = np.array([r[0] for r in results], dtype=np.float64)
    rea_values = np.array([r[1] for r in results], dtype=np.float64)
    return (MetricCurve(name="tve", axis_values=seq.axis_values, values=tve_values),
            MetricCurve(name="rea", axis_values=seq.axis_values, values=rea_values))
