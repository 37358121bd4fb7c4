"""Ranking of defect-representative images in thermographic image sequences.

Unsupervised metrics (HI, REA, TVE) plus supervised references (SNR,
Tanimoto), pulse phase thermography, and a multilayer thermal phantom
generator for end-to-end validation.
"""

from .core import (ConfigError, DataError, ImageSequence, NumericError, Rect,
                   crop_roi, exclude_frames, load_sequence, normalize01_frame,
                   read_mask_pgm, save_sequence, write_mask_pgm)
from .curves import (MetricCurve, PeakRange, butterworth_lowpass,
                     find_max_ranges, normalize01)
from .hi import HIConfig, HIResult, bin_count, global_hist, hi, hi_curve
from .minkowski import MinkowskiTriple, functionals, functionals_window
from .phantom import (AIR, CFRP, FEP, DefectSpec, LayerSpec, PhantomSpec,
                      contrast_curve, diffusion_length, fd_solve,
                      generate_phantom, make_layer)
from .ppt import SpectralPair, ppt_transform
from .rea_tve import (FunctionalStats, ReaTveResult, TGICurve, aic_onset,
                      analyze_frame, cv_norm, rea, rea_tve_curve, stage1,
                      stage2, tve)
from .reference import (FilterFit, fit_quadratic_background, reference_curves,
                        snr, subtract_background, tanimoto)
from .sampling import (DEFAULT_NOS, SamplingPlan, Window, sample_windows,
                       size_schedule)
from .segmentation import SegmentedImage, segment

__version__ = "0.1.0"
