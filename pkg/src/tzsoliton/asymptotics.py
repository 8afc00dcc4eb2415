"""Soliton kinematics: free velocities, lab-frame boosts, trajectory fits.

The determinant column of soliton j carries the exponential
exp(z_j), z_j = -(Lambda_j + Lambda_j*) x - (1/Lambda_j + 1/Lambda_j*) t,
equivalently growth rates built from kappa_inf = Re k and kappa_0 = Re 1/k
at the sigma-images of the marked pair.  The free trajectory is the line
Re(z_j) = const; its slope in the (x, t) plane is the reciprocal of the
velocity quotient

    v_j = -(kappa_inf(sigma Lambda_j*) - kappa_inf(sigma Lambda_j))
          / (kappa_0(sigma Lambda_j*) - kappa_0(sigma Lambda_j)),

i.e. v_j = dt/dx along the ridge while a fitted x(t) has slope 1/v_j; the
empirical tracker below confirms this orientation, and for the canonical
principal-branch placement v_j = -lambda_j^{2/3}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dressing
from .exceptions import DegenerateTrajectoryError, TrackingError, VelocityPoleError
from .spectral_curve import BackgroundProvider, sigma


@dataclass(frozen=True)
class SolitonKinematics:
    """Per-soliton kinematic quantities."""

    v: float
    V: float
    kappa_inf_diff: float
    kappa_0_diff: float


@dataclass(frozen=True)
class TrackResult:
    """Least-squares trajectory fit from peak tracking."""

    slope: float          # dx/dt of the fitted ridge line
    intercept: float
    velocity: float       # dt/dx, the Eq.-(3.3)-convention velocity
    t_values: tuple
    x_peaks: tuple
    rms_deviation: float


def growth_exponents(cfg: dressing.SolitonConfig, bg: BackgroundProvider,
                     j: int) -> tuple[float, float]:
    """(kappa_inf difference, kappa_0 difference) of soliton j.

    Differences are taken between the sigma-images of Lambda_j* and
    Lambda_j; they are the x and t growth rates of the column exponential.
    """
    P, Ps = cfg.points[j]
    sP, sPs = sigma(P), sigma(Ps)
    d_inf = bg.kappa_inf(sPs) - bg.kappa_inf(sP)
    d_0 = bg.kappa_0(sPs) - bg.kappa_0(sP)
    return float(d_inf), float(d_0)


def velocity_lightcone(cfg: dressing.SolitonConfig, bg: BackgroundProvider,
                       j: int) -> float:
    """Free light-cone velocity v_j = -d_inf / d_0 (dt/dx orientation)."""
    d_inf, d_0 = growth_exponents(cfg, bg, j)
    scale = max(abs(d_inf), abs(d_0), 1.0)
    if abs(d_0) <= 1e-15 * scale:
        raise DegenerateTrajectoryError(
            f"soliton {j}: kappa_0 difference vanishes, trajectory parallel to the x axis"
        )
    return -d_inf / d_0


def trajectory_slope(cfg: dressing.SolitonConfig, bg: BackgroundProvider,
                     j: int) -> float:
    """dx/dt of the free trajectory, the reciprocal of velocity_lightcone."""
    d_inf, d_0 = growth_exponents(cfg, bg, j)
    scale = max(abs(d_inf), abs(d_0), 1.0)
    if abs(d_inf) <= 1e-15 * scale:
        raise DegenerateTrajectoryError(
            f"soliton {j}: kappa_inf difference vanishes, trajectory parallel to the t axis"
        )
    return -d_0 / d_inf


def velocity_lab(v: float, eps: float) -> float:
    """Lab-frame velocity V = (e^eps v + e^-eps) / (e^-eps - e^eps v).

    eps is the rapidity fixing the Lorentzian coordinates.  V = 1 is light
    speed; the map has a pole where the frame moves at the trajectory's own
    speed.
    """
    a, b = math.exp(eps), math.exp(-eps)
    den = b - a * v
    num = a * v + b
    if abs(den) <= 1e-15 * max(abs(num), 1.0):
        raise VelocityPoleError("lab velocity pole: e^-eps = e^eps v")
    return num / den


def kinematics_table(cfg: dressing.SolitonConfig, bg: BackgroundProvider,
                     eps: float = 0.0) -> list[SolitonKinematics]:
    out = []
    for j in range(cfg.N):
        d_inf, d_0 = growth_exponents(cfg, bg, j)
        v = velocity_lightcone(cfg, bg, j)
        V = velocity_lab(v, eps)
        out.append(SolitonKinematics(v=v, V=V, kappa_inf_diff=d_inf,
                                     kappa_0_diff=d_0))
    return out


def _refine_peak(xs: np.ndarray, vals: np.ndarray, idx: int) -> float:
    """Sub-cell peak position by a parabola through three samples."""
    if idx <= 0 or idx >= len(xs) - 1:
        return float(xs[idx])
    y0, y1, y2 = vals[idx - 1], vals[idx], vals[idx + 1]
    den = y0 - 2.0 * y1 + y2
    if den >= 0 or not np.isfinite(den):
        return float(xs[idx])
    delta = 0.5 * (y0 - y2) / den
    delta = float(np.clip(delta, -0.5, 0.5))
    h = xs[1] - xs[0]
    return float(xs[idx] + delta * h)


def track_trajectory(cfg: dressing.SolitonConfig, bg: BackgroundProvider,
                     t_values, x_window: tuple[float, float], nx: int = 801,
                     threads: int = 1, peak_rel: float = 0.5) -> TrackResult:
    """Fit the ridge line x(t) of the dominant soliton in an x window.

    Per t-slice the peak of |e^u - e^v| is located (single-valued field, no
    branch issues) and refined to sub-cell accuracy; a least-squares line
    through the peaks gives the slope dx/dt, reported together with its
    reciprocal for comparison against velocity_lightcone.  Multiple
    separated peaks above peak_rel of the maximum, a flat field, or a peak
    pinned to the window edge raise TrackingError.
    """
    t_values = np.asarray(t_values, dtype=float).reshape(-1)
    if t_values.size < 2:
        raise TrackingError("need at least two t samples to fit a line")
    xs = np.linspace(x_window[0], x_window[1], int(nx))
    ev = complex(bg.background_field(0.0, 0.0))
    x_peaks = np.empty(t_values.size)
    for i, t in enumerate(t_values):
        flat = dressing.evaluate_points(
            cfg, bg, xs, np.full(xs.shape, t), derivatives=False, threads=threads
        )
        dev = np.abs(flat["exp_u"] - ev)
        dev = np.where(np.isfinite(dev), dev, 0.0)
        top = float(np.max(dev))
        if top <= 1e-12 * max(1.0, abs(ev)):
            raise TrackingError(f"no peak above background at t = {t}")
        above = dev >= peak_rel * top
        runs = np.flatnonzero(np.diff(above.astype(int)) == 1).size + int(above[0])
        if runs > 1:
            raise TrackingError(f"multiple peaks in the window at t = {t}")
        idx = int(np.argmax(dev))
        if idx in (0, len(xs) - 1):
            raise TrackingError(f"peak pinned to the window edge at t = {t}")
        x_peaks[i] = _refine_peak(xs, dev, idx)
    slope, intercept = np.polyfit(t_values, x_peaks, 1)
    fit = slope * t_values + intercept
    rms = float(np.sqrt(np.mean((x_peaks - fit) ** 2)))
    if abs(slope) <= 1e-15:
        raise TrackingError("fitted ridge is parallel to the x axis")
    return TrackResult(
        slope=float(slope),
        intercept=float(intercept),
        velocity=1.0 / float(slope),
        t_values=tuple(float(t) for t in t_values),
        x_peaks=tuple(float(x) for x in x_peaks),
        rms_deviation=rms,
    )
