"""Supervised reference metrics: SNR, Tanimoto criterion, and the
quadratic-background spatial filter applied before both."""

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import DataError, NumericError, parallel_map
from .curves import MetricCurve

NO_CONTRAST = float("-inf")   # SNR sentinel: zero mean difference


@dataclass(frozen=True)
class FilterFit:
    """Coefficients of z = c1*x^2 + c2*y^2 + c3 on center-origin coordinates."""

    c1: float
    c2: float
    c3: float


def _centered_coords(shape):
    h, w = shape
    y = np.arange(h, dtype=np.float64) - (h - 1) / 2.0
    x = np.arange(w, dtype=np.float64) - (w - 1) / 2.0
    return np.meshgrid(x, y)


def fit_quadratic_background(frame):
    """Least-squares fit of a centered quadratic surface to a frame."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size < 3:
        raise DataError(f"frame with {frame.size} pixels cannot constrain 3 coefficients")
    xx, yy = _centered_coords(frame.shape)
    design = np.stack([xx.ravel() ** 2, yy.ravel() ** 2, np.ones(frame.size)], axis=1)
    coeffs, _, _, _ = np.linalg.lstsq(design, frame.ravel(), rcond=None)
    if not np.all(np.isfinite(coeffs)):
        raise NumericError("quadratic background fit produced non-finite coefficients")
    return FilterFit(c1=float(coeffs[0]), c2=float(coeffs[1]), c3=float(coeffs[2]))


def subtract_background(frame, fit):
    """Residual after removing the fitted quadratic surface."""
    frame = np.asarray(frame, dtype=np.float64)
    xx, yy = _centered_coords(frame.shape)
    return frame - (fit.c1 * xx ** 2 + fit.c2 * yy ** 2 + fit.c3)


def _check_masks(frame, defect, ref):
    defect = np.asarray(defect, dtype=bool)
    ref = np.asarray(ref, dtype=bool)
    if defect.shape != frame.shape or ref.shape != frame.shape:
        raise DataError("mask dimensions must match the frame")
    if not defect.any() or not ref.any():
        raise DataError("defect and reference masks must both be non-empty")
    if (defect & ref).any():
        raise DataError("defect and reference masks must be disjoint")
    return defect, ref


def snr(frame, defect, ref):
    """Contrast of the defect area against the reference area, in dB:
    20*log10(|mean_def - mean_ref| / std_ref).

    A zero-spread reference region is an error; equal means return the
    NO_CONTRAST sentinel (-inf) rather than a silent NaN.
    """
    frame = np.asarray(frame, dtype=np.float64)
    defect, ref = _check_masks(frame, defect, ref)
    sigma_ref = float(np.std(frame[ref]))
    if sigma_ref == 0.0:
        raise NumericError("reference region has zero standard deviation; SNR undefined")
    diff = abs(float(np.mean(frame[defect])) - float(np.mean(frame[ref])))
    if diff == 0.0:
        return NO_CONTRAST
    return 20.0 * math.log10(diff / sigma_ref)


def tanimoto(detected, truth):
    """Tanimoto criterion (N_rd - N_md) / (N_rd + N_fd) of two masks."""
    detected = np.asarray(detected, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if detected.shape != truth.shape:
        raise DataError("detected and truth masks must have identical dimensions")
    n_rd = int(np.count_nonzero(detected & truth))
    n_fd = int(np.count_nonzero(detected & ~truth))
    n_md = int(np.count_nonzero(~detected & truth))
    if n_rd + n_fd == 0:
        raise DataError("nothing detected: Tanimoto criterion undefined")
    return (n_rd - n_md) / (n_rd + n_fd)


def threshold_detector(residual, quantile=0.95):
    """Stand-in defect detector: pixels above the given residual quantile."""
    threshold = np.quantile(residual, quantile)
    return residual >= threshold


def _filter_one(frame):
    return subtract_background(frame, fit_quadratic_background(frame))


def filter_sequence(seq, workers=1):
    """Remove the fitted quadratic background from every frame."""
    from .core import ImageSequence
    residuals = parallel_map(_filter_one, list(seq.frames), workers=workers)
    return ImageSequence(frames=np.stack(residuals), axis_kind=seq.axis_kind,
                         axis_values=seq.axis_values)


def _reference_one(frame, defect, ref, detector_quantile):
    fit = fit_quadratic_background(frame)
    residual = subtract_background(frame, fit)
    sigma_ref = float(np.std(residual[ref]))
    if sigma_ref == 0.0:
        snr_value = NO_CONTRAST
    else:
        snr_value = snr(residual, defect, ref)
    detected = threshold_detector(residual, detector_quantile)
    if not detected.any():
        tc_value = float("nan")
    else:
        tc_value = tanimoto(detected, defect)
    return snr_value, tc_value


def reference_curves(seq, defect, ref, detector_quantile=0.95, workers=1):
    """Per-frame SNR and Tanimoto curves with background filtering first.

    Frames with a degenerate (zero-spread) reference region report the
    NO_CONTRAST sentinel instead of raising, so constant sequences still
    produce a curve.
    """
    defect = np.asarray(defect, dtype=bool)
    ref = np.asarray(ref, dtype=bool)
    fn = partial(_reference_one, defect=defect, ref=ref,
                 detector_quantile=detector_quantile)
    results = parallel_map(fn, list(seq.frames), workers=workers)
    snr_values = np.array([r[0] for r in results])
    tc_values = np.array([r[1] for r in results])
    return (MetricCurve(name="snr", axis_values=seq.axis_values, values=snr_values),
            MetricCurve(name="tc", axis_values=seq.axis_values, values=tc_values))
