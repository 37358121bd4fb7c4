"""Synthetic ground truth: 1D multilayer transient heat conduction and
phantom stack generation.

The solver is a finite-volume discretization of the 1D heat equation with
per-layer uniform grids, series-resistance (harmonic-mean) interface
conductances, adiabatic faces, and Crank-Nicolson time stepping (a few
backward-Euler startup steps damp the ringing a Dirac surface pulse would
otherwise excite). The flash pulse deposits an areal energy Q in the first
cell at t = 0.

Phantom stacks broadcast one pulse response per distinct layer stack across
the pixel grid (no lateral diffusion), modulated by a centered quadratic
heating-nonuniformity map, plus Gaussian sensor noise.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse import csc_matrix, diags
from scipy.sparse.linalg import splu

from .core import ConfigError, DataError, ImageSequence, NumericError, Rect
from .curves import MetricCurve

# Material properties (density kg/m^3, specific heat J/(kg K),
# conductivity W/(m K)); out-of-plane conductivity for the laminate.
CFRP = {"rho": 1602.0, "cp": 930.0, "lam": 0.35}
FEP = {"rho": 2200.0, "cp": 1145.0, "lam": 0.23}
AIR = {"rho": 1.204, "cp": 1006.0, "lam": 0.026}

REF_MARGIN_PX = 4            # gap between defect rects and the reference mask
MAX_GRID_NODES = 60000


@dataclass(frozen=True)
class LayerSpec:
    thickness: float
    rho: float
    cp: float
    lam: float

    def __post_init__(self):
        if min(self.thickness, self.rho, self.cp, self.lam) <= 0:
            raise DataError(f"layer properties must be positive: {self}")

    @property
    def alpha(self):
        return self.lam / (self.rho * self.cp)

    @property
    def effusivity(self):
        return math.sqrt(self.lam * self.rho * self.cp)

    @property
    def diffusion_time(self):
        return self.thickness ** 2 / self.alpha


def make_layer(props, thickness):
    return LayerSpec(thickness=thickness, **props)


def diffusion_length(alpha, f):
    """Thermal diffusion length sqrt(alpha / (pi * f)) in meters."""
    if f <= 0:
        raise DataError(f"frequency must be positive, got {f}")
    return math.sqrt(alpha / (math.pi * f))


class _Conduction1D:
    """Finite-volume grid and factored time-step operators for one stack."""

    def __init__(self, layers, min_nodes_per_layer=20, dx_cap=None, refine=1):
        if not layers:
            raise DataError("need at least one layer")
        dx_list = []
        lam_list = []
        rhocp_list = []
        for layer in layers:
            cells = max(min_nodes_per_layer, 2)
            if dx_cap is not None:
                cells = max(cells, math.ceil(layer.thickness / dx_cap))
            cells *= refine
            dx_list.append(np.full(cells, layer.thickness / cells))
            lam_list.append(np.full(cells, layer.lam))
            rhocp_list.append(np.full(cells, layer.rho * layer.cp))
        self.dx = np.concatenate(dx_list)
        if self.dx.size > MAX_GRID_NODES:
            raise NumericError(f"grid of {self.dx.size} nodes exceeds cap {MAX_GRID_NODES}")
        lam = np.concatenate(lam_list)
        self.mass = np.concatenate(rhocp_list) * self.dx   # areal heat capacity per cell

        # series resistance between adjacent cell centers
        resist = self.dx[:-1] / (2.0 * lam[:-1]) + self.dx[1:] / (2.0 * lam[1:])
        g = 1.0 / resist
        n = self.dx.size
        main = np.zeros(n)
        main[:-1] -= g
        main[1:] -= g
        self.conduction = diags([g, main, g], offsets=[-1, 0, 1], format="csc")
        self._lu = {}
        self.g_inner = g
        self.lam_front = lam[0]
        self._x0 = self.dx[0] / 2.0
        self._x1 = self.dx[0] + self.dx[1] / 2.0

    def _operators(self, dt, theta):
        key = (dt, theta)
        if key not in self._lu:
            m_dt = diags(self.mass / dt, format="csc")
            lhs = csc_matrix(m_dt - theta * self.conduction)
            rhs = csc_matrix(m_dt + (1.0 - theta) * self.conduction)
            self._lu[key] = (splu(lhs), rhs)
        return self._lu[key]

    def step(self, temp, dt, theta, source=0.0):
        """Advance one step; `source` is the front-face heat flux (W/m^2)."""
        lu, rhs = self._operators(dt, theta)
        b = rhs @ temp
        if source:
            b[0] += source
        return lu.solve(b)

    def energy(self, temp):
        return float(np.dot(self.mass, temp))

    def face_value(self, temp, face_gradient=0.0):
        """Temperature at x = 0 by a quadratic through the first two cell
        centers matching the known face gradient (0 for an adiabatic face)."""
        x0, x1 = self._x0, self._x1
        curv = ((temp[1] - temp[0]) - face_gradient * (x1 - x0)) / (x1 ** 2 - x0 ** 2)
        return temp[0] - face_gradient * x0 - curv * x0 ** 2


def _grid_cap(layers, t_min):
    """Cell-size cap resolving the thermal penetration at the earliest time."""
    alpha_front = layers[0].alpha
    return math.sqrt(alpha_front * t_min) / 4.0


def fd_solve(layers, fluence, times, dt=None, min_nodes_per_layer=20,
             diagnostics=False, refine=1):
    """Front-surface temperature response to a Dirac flash pulse.

    layers:  stack from the heated face inward, both faces adiabatic
    fluence: absorbed pulse energy per area (J/m^2)
    times:   strictly positive, increasing query times (s)

    Returns temperatures above ambient at the requested times; with
    diagnostics=True also a dict with the relative energy drift and the
    step count.
    """
    layers = list(layers)
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0 or times[0] <= 0 or np.any(np.diff(times) <= 0):
        raise DataError("times must be strictly increasing and positive")
    if fluence <= 0:
        raise DataError(f"fluence must be positive, got {fluence}")
    if min_nodes_per_layer < 20:
        raise ConfigError("need at least 20 grid nodes per layer")

    tau_min = min(layer.diffusion_time for layer in layers)
    if dt is None:
        dt = min(0.1 * tau_min, times[0] / 20.0)
    elif dt > 0.1 * tau_min:
        raise NumericError(f"dt={dt:g} exceeds 0.1x the smallest layer diffusion "
                           f"time ({0.1 * tau_min:g} s)")

    grid = _Conduction1D(layers, min_nodes_per_layer=min_nodes_per_layer,
                         dx_cap=_grid_cap(layers, times[0]), refine=refine)
    temp = np.zeros(grid.dx.size)
    temp[0] = fluence / grid.mass[0]
    e0 = grid.energy(temp)

    t = 0.0
    t_hist = [0.0]
    surf = [grid.face_value(temp)]
    drift = 0.0
    # backward-Euler startup damps the Dirac-initial-condition oscillations
    for _ in range(4):
        temp = grid.step(temp, dt / 2.0, theta=1.0)
        t += dt / 2.0
        t_hist.append(t)
        surf.append(grid.face_value(temp))
    t_end = times[-1]
    while t < t_end:
        temp = grid.step(temp, dt, theta=0.5)
        t += dt
        t_hist.append(t)
        surf.append(grid.face_value(temp))
        drift = max(drift, abs(grid.energy(temp) - e0) / e0)

    result = np.interp(times, t_hist, surf)
    if diagnostics:
        return result, {"energy_drift": drift, "steps": len(t_hist) - 1,
                        "nodes": grid.dx.size}
    return result


def grid_convergence(layers, fluence, times, min_nodes_per_layer=20):
    """Max relative surface-temperature change when every cell is halved."""
    base = fd_solve(layers, fluence, times, min_nodes_per_layer=min_nodes_per_layer)
    fine = fd_solve(layers, fluence, times, min_nodes_per_layer=min_nodes_per_layer,
                    refine=2)
    return float(np.max(np.abs(fine - base) / np.max(np.abs(base))))


def _lockin_grid(layers, f, min_nodes_per_layer=20):
    cap = diffusion_length(layers[0].alpha, f) / 32.0
    return _Conduction1D(layers, min_nodes_per_layer=min_nodes_per_layer, dx_cap=cap)


def _steady_field(layers, f, min_nodes_per_layer=20):
    """Steady periodic temperature phasor under a unit front-face flux:
    solve (j*omega*M - A) T = e0 on the finite-volume grid."""
    grid = _lockin_grid(layers, f, min_nodes_per_layer)
    omega = 2.0 * math.pi * f
    n = grid.dx.size
    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = -grid.g_inner                      # superdiagonal
    ab[2, :-1] = -grid.g_inner                     # subdiagonal
    ab[1, :] = 1j * omega * grid.mass
    ab[1, :-1] += grid.g_inner
    ab[1, 1:] += grid.g_inner
    rhs = np.zeros(n, dtype=np.complex128)
    rhs[0] = 1.0
    temp = solve_banded((1, 1), ab, rhs)
    return grid, temp


def _lockin_steady_lag(layers, f, min_nodes_per_layer=20):
    grid, temp = _steady_field(layers, f, min_nodes_per_layer)
    face = grid.face_value(temp, face_gradient=-1.0 / grid.lam_front)
    return -math.atan2(face.imag, face.real)


def penetration_depth(layers, f, min_nodes_per_layer=20):
    """Equivalent penetration depth of the steady thermal wave.

    Defined as the integral of the normalized oscillation amplitude over
    depth, int |T(x)| dx / |T(0)|; for a semi-infinite homogeneous body this
    equals the textbook diffusion length sqrt(alpha/(pi*f)) exactly.
    """
    if f <= 0:
        raise DataError(f"frequency must be positive, got {f}")
    grid, temp = _steady_field(layers, f, min_nodes_per_layer)
    face = abs(grid.face_value(temp, face_gradient=-1.0 / grid.lam_front))
    return float(np.sum(np.abs(temp) * grid.dx) / face)


def _lockin_timestep_lag(layers, f, steps_per_period=256, min_nodes_per_layer=20):
    """Phase lag by explicit periodic integration and demodulation of the
    last two periods; slower and coarser than the steady solve, kept as an
    independent cross-check of it."""
    period = 1.0 / f
    dt = period / steps_per_period
    total_l = sum(layer.thickness for layer in layers)
    alpha_min = min(layer.alpha for layer in layers)
    tau_slow = (2.0 * total_l / math.pi) ** 2 / alpha_min
    n_periods = max(8, math.ceil(6.0 * tau_slow / period) + 2)

    grid = _lockin_grid(layers, f, min_nodes_per_layer)
    temp = np.zeros(grid.dx.size)
    omega = 2.0 * math.pi * f
    n_steps = n_periods * steps_per_period
    tail = 2 * steps_per_period
    surf = np.empty(tail)
    t = 0.0
    for i in range(n_steps):
        source = math.sin(omega * (t + dt / 2.0))   # midpoint flux for CN
        temp = grid.step(temp, dt, theta=0.5, source=source)
        t += dt
        if i >= n_steps - tail:
            flux_now = math.sin(omega * t)
            surf[i - (n_steps - tail)] = grid.face_value(
                temp, face_gradient=-flux_now / grid.lam_front)

    t_tail = (np.arange(n_steps - tail, n_steps) + 1) * dt
    sig = surf - surf.mean()
    a = 2.0 * np.mean(sig * np.sin(omega * t_tail))
    b = 2.0 * np.mean(sig * np.cos(omega * t_tail))
    return -math.atan2(b, a)


def lockin_phase_lag(layers, f, method="steady", min_nodes_per_layer=20):
    """Surface phase lag under a sinusoidal front-face flux.

    The lag is positive and equals pi/4 for a semi-infinite homogeneous
    body. method="steady" solves the periodic steady state of the
    finite-volume operator directly; method="timestep" integrates the same
    operator in time and demodulates, which is slower and less accurate but
    independent of the steady solve.
    """
    if f <= 0:
        raise DataError(f"frequency must be positive, got {f}")
    if method == "steady":
        return _lockin_steady_lag(layers, f, min_nodes_per_layer)
    if method == "timestep":
        return _lockin_timestep_lag(layers, f, min_nodes_per_layer=min_nodes_per_layer)
    raise ConfigError(f"unknown lock-in method {method!r}")


def contrast_curve(ref_layers, def_layers, freqs, measure="penetration"):
    """Frequency-dependent contrast of effective thermal penetration between
    a reference stack and a defect stack (reference minus defect).

    measure="penetration" (default) uses the amplitude-integral penetration
    depth, which gives single-lobed contrast curves whose peaks cluster near
    the plate's transit frequency and narrow with defect depth.
    measure="phase_lag" converts the steady surface phase lag into an
    effective depth mu * lag / pi instead; those curves change sign at a
    finite frequency (blind-frequency analog) but their extrema sit at the
    plate frequency rather than in the defect band. Identical stacks give an
    identically zero curve either way.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    if freqs.size == 0 or np.any(freqs <= 0) or np.any(np.diff(freqs) <= 0):
        raise DataError("freqs must be strictly increasing and positive")
    values = np.empty(freqs.size)
    for i, f in enumerate(freqs):
        if measure == "penetration":
            d_ref = penetration_depth(ref_layers, f)
            d_def = penetration_depth(def_layers, f)
        elif measure == "phase_lag":
            d_ref = diffusion_length(ref_layers[0].alpha, f) * lockin_phase_lag(ref_layers, f) / math.pi
            d_def = diffusion_length(def_layers[0].alpha, f) * lockin_phase_lag(def_layers, f) / math.pi
        else:
            raise ConfigError(f"unknown contrast measure {measure!r}")
        values[i] = d_ref - d_def
    return MetricCurve(name="diffusion_contrast", axis_values=freqs, values=values)


def insert_defect_layer(plate, depth, layer):
    """Stack with `layer` substituting the plate material at its depth.

    The total thickness is unchanged: the host material between depth and
    depth + layer.thickness is replaced by the defect layer, splitting host
    layers as needed.
    """
    total = sum(l.thickness for l in plate)
    end = depth + layer.thickness
    if not (0.0 < depth and end < total):
        raise DataError(f"defect at depth {depth} with thickness {layer.thickness} "
                        f"does not fit inside the {total} m plate")
    tol = 1e-12 * total   # drop split slivers below float resolution
    out = []
    pos = 0.0
    inserted = False
    for l in plate:
        a, b = pos, pos + l.thickness
        pos = b
        if min(b, depth) > a + tol:
            out.append(LayerSpec(min(b, depth) - a, l.rho, l.cp, l.lam))
        if not inserted and b > depth:
            out.append(layer)
            inserted = True
        if b > max(a, end) + tol:
            out.append(LayerSpec(b - max(a, end), l.rho, l.cp, l.lam))
    return tuple(out)


@dataclass(frozen=True)
class DefectSpec:
    rect: Rect
    depth: float
    layer: LayerSpec


@dataclass(frozen=True)
class PhantomSpec:
    width: int
    height: int
    plate: tuple
    defects: tuple = ()
    pixel_pitch: float = 3.0e-4   # m per pixel
    frame_rate: float = 60.0      # Hz
    duration: float = 10.0        # s
    fluence: float = 2000.0       # J/m^2
    heating_a1: float = 0.0       # 1/px^2, quadratic nonuniformity along x
    heating_a2: float = 0.0       # 1/px^2, along y
    noise_std: float = 0.020      # K, sensor noise
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError("phantom needs positive pixel dimensions")
        if self.frame_rate <= 0 or self.duration <= 0:
            raise DataError("frame_rate and duration must be positive")
        total = sum(l.thickness for l in self.plate)
        occupied = np.zeros((self.height, self.width), dtype=bool)
        for d in self.defects:
            if not d.rect.inside(self.width, self.height):
                raise DataError(f"defect rect {d.rect} outside the {self.width}x{self.height} frame")
            region = occupied[d.rect.y0:d.rect.y0 + d.rect.h, d.rect.x0:d.rect.x0 + d.rect.w]
            if region.any():
                raise DataError("defect rects must be disjoint")
            region[:] = True
            if d.depth <= 0 or d.depth + d.layer.thickness >= total:
                raise DataError(f"defect depth {d.depth} + thickness {d.layer.thickness} "
                                f"must stay inside the {total} m plate")

    @property
    def n_frames(self):
        return int(round(self.duration * self.frame_rate))


def generate_phantom(spec):
    """Simulate a phantom stack; returns (sequence, defect_mask, ref_mask).

    Reference pixels carry the plate pulse response, defect pixels the
    response of the plate with the defect layer inserted at its depth; the
    fluence is modulated by 1 + a1*x^2 + a2*y^2 on centered pixel
    coordinates and Gaussian noise of noise_std is added. The reference
    mask excludes a guard margin around every defect rect.
    """
    n = spec.n_frames
    times = (np.arange(n) + 1) / spec.frame_rate
    t_ref = fd_solve(spec.plate, spec.fluence, times)

    xc = np.arange(spec.width, dtype=np.float64) - (spec.width - 1) / 2.0
    yc = np.arange(spec.height, dtype=np.float64) - (spec.height - 1) / 2.0
    scale = 1.0 + spec.heating_a1 * xc[None, :] ** 2 + spec.heating_a2 * yc[:, None] ** 2

    frames = t_ref[:, None, None] * scale[None, :, :]
    defect_mask = np.zeros((spec.height, spec.width), dtype=bool)
    ref_mask = np.ones((spec.height, spec.width), dtype=bool)
    for d in spec.defects:
        stack = insert_defect_layer(spec.plate, d.depth, d.layer)
        t_def = fd_solve(stack, spec.fluence, times)
        ys = slice(d.rect.y0, d.rect.y0 + d.rect.h)
        xs = slice(d.rect.x0, d.rect.x0 + d.rect.w)
        frames[:, ys, xs] = t_def[:, None, None] * scale[None, ys, xs]
        defect_mask[ys, xs] = True
        m = REF_MARGIN_PX
        ref_mask[max(0, d.rect.y0 - m):d.rect.y0 + d.rect.h + m,
                 max(0, d.rect.x0 - m):d.rect.x0 + d.rect.w + m] = False

    if spec.noise_std > 0:
        rng = np.random.default_rng(spec.seed)
        frames = frames + rng.normal(0.0, spec.noise_std, size=frames.shape)

    seq = ImageSequence(frames=frames, axis_kind="time", axis_values=times)
    return seq, defect_mask, ref_mask
