"""Multidimensional theta series and its directional derivatives.

Convention:

    theta(z | B) = sum over n in Z^g of exp(i pi n.B.n + 2 pi i n.z)

with B symmetric and Im B positive definite.  Terms decay like a Gaussian
centred at m = -Im(B)^{-1} Im(z); the summation box is centred on round(m)
and its radius is chosen from an ellipsoid tail bound so the truncation
error stays below the policy target.  Derivatives are always term-wise
analytic; finite differences appear only in tests as oracles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import PeriodMatrixError, ThetaDivisorError, TruncationOverflowError

TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class TruncationPolicy:
    """Accuracy target and summation-radius cap for the lattice sum."""

    target_abs_error: float = 1e-12
    max_radius: int = 60

    def __post_init__(self):
        if not (self.target_abs_error > 0):
            raise ValueError("target_abs_error must be positive")
        if self.max_radius < 1:
            raise ValueError("max_radius must be at least 1")


DEFAULT_POLICY = TruncationPolicy()


class PeriodMatrix:
    """Validated g x g period matrix with positive definite imaginary part."""

    def __init__(self, B):
        B = np.asarray(B, dtype=complex)
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] < 1:
            raise PeriodMatrixError("period matrix must be square and nonempty")
        if not np.array_equal(B, B.T):
            raise PeriodMatrixError("period matrix must be symmetric as stored")
        Y = np.ascontiguousarray(B.imag)
        try:
            np.linalg.cholesky(Y)
        except np.linalg.LinAlgError as exc:
            raise PeriodMatrixError("Im(B) must be positive definite") from exc
        self.B = B
        self.Y = Y
        self._Yinv = np.linalg.inv(Y)
        self._lam_min = float(np.linalg.eigvalsh(Y)[0])

    @property
    def g(self) -> int:
        return self.B.shape[0]


def _as_vector(z, g: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape != (g,):
        raise ValueError(f"argument must be a length-{g} vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("argument entries must be finite")
    return z


def _peak_center(z: np.ndarray, B: PeriodMatrix) -> tuple[np.ndarray, float]:
    """Gaussian peak of |terms| and the log of the peak magnitude."""
    y = z.imag
    m = -B._Yinv @ y
    log_peak = math.pi * float(y @ B._Yinv @ y)
    return m, log_peak


def _choose_radius(B: PeriodMatrix, log_peak: float, pol: TruncationPolicy,
                   deriv_scale: float, order: int) -> int:
    """Smallest box radius whose Gaussian tail bound meets the target."""
    g = B.g
    for r in range(1, pol.max_radius + 1):
        rho = max(r - 1, 0)
        # conservative shell count times the largest surviving term; each
        # derivative multiplies terms by at most 2*pi*|n|*|dir|
        log_bound = (
            log_peak
            + g * math.log(2 * r + 3)
            - math.pi * B._lam_min * rho * rho
            + order * math.log(max(2 * math.pi * (r + 2) * deriv_scale * math.sqrt(g), 1.0))
        )
        if log_bound <= math.log(pol.target_abs_error):
            return r
    raise TruncationOverflowError(
        f"required lattice radius exceeds max_radius={pol.max_radius}"
    )


def _lattice(center: np.ndarray, radius: int, g: int) -> np.ndarray:
    axes = [np.arange(c - radius, c + radius + 1) for c in center]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.reshape(-1) for a in grids], axis=-1).astype(float)


def _terms(z: np.ndarray, B: PeriodMatrix, pol: TruncationPolicy,
           deriv_scale: float, order: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Summation lattice, term values, and the factored-out log scale.

    Returns (n, terms, log_scale) with the true term values equal to
    terms * exp(log_scale); factoring the peak out keeps exp() finite.
    """
    m, log_peak = _peak_center(z, B)
    radius = _choose_radius(B, log_peak, pol, deriv_scale, order)
    center = np.round(m).astype(int)
    n = _lattice(center, radius, B.g)
    expo = 1j * math.pi * np.einsum("ij,jk,ik->i", n, B.B, n) + TWO_PI_I * (n @ z)
    log_scale = float(np.max(expo.real)) if expo.size else 0.0
    terms = np.exp(expo - log_scale)
    return n, terms, log_scale


def theta(z, B: PeriodMatrix, pol: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Truncated lattice sum with estimated tail below the policy target."""
    z = _as_vector(z, B.g)
    n, terms, log_scale = _terms(z, B, pol, 1.0, 0)
    return complex(np.exp(log_scale) * np.sum(terms))


def theta_dirderiv(z, B: PeriodMatrix, dirs: Sequence, pol: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Mixed directional derivative of theta, one derivative per entry of dirs."""
    z = _as_vector(z, B.g)
    dir_vecs = [_as_vector(d, B.g) for d in dirs]
    scale = max([float(np.max(np.abs(d))) for d in dir_vecs], default=1.0)
    n, terms, log_scale = _terms(z, B, pol, max(scale, 1e-300), len(dir_vecs))
    for d in dir_vecs:
        terms = terms * (TWO_PI_I * (n @ d))
    return complex(np.exp(log_scale) * np.sum(terms))


def theta_with_xt_jet(z, B: PeriodMatrix, U, V, pol: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Taylor coefficients c[i,j] = d_x^i d_t^j theta(z + U x + V t) / (i! j!).

    Returned as a (3, 3) complex array at x = t = 0, covering all mixed
    derivatives through order (2, 2) in one lattice pass.
    """
    z = _as_vector(z, B.g)
    U = _as_vector(U, B.g)
    V = _as_vector(V, B.g)
    scale = max(float(np.max(np.abs(U))), float(np.max(np.abs(V))), 1e-300)
    n, terms, log_scale = _terms(z, B, pol, scale, 4)
    fu = TWO_PI_I * (n @ U)
    fv = TWO_PI_I * (n @ V)
    out = np.empty((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            out[i, j] = np.sum(terms * fu**i * fv**j) / (
                math.factorial(i) * math.factorial(j)
            )
    return np.exp(log_scale) * out


def theta_scale(z, B: PeriodMatrix) -> float:
    """Magnitude of the dominant series term; the natural scale of theta near z."""
    z = _as_vector(z, B.g)
    _, log_peak = _peak_center(z, B)
    return float(np.exp(log_peak))


def theta_log_d2(z, B: PeriodMatrix, dir1, dir2,
                 pol: TruncationPolicy = DEFAULT_POLICY,
                 zero_threshold: float = 1e-10) -> complex:
    """Mixed second directional derivative of log theta at z.

    Combines the term-wise sums by the quotient rule,
    (theta * theta_12 - theta_1 * theta_2) / theta^2.  Raises
    ThetaDivisorError when |theta| falls below zero_threshold times the
    local series scale: z is then too close to the theta divisor.
    """
    z = _as_vector(z, B.g)
    d1 = _as_vector(dir1, B.g)
    d2 = _as_vector(dir2, B.g)
    scale = max(float(np.max(np.abs(d1))), float(np.max(np.abs(d2))), 1e-300)
    n, terms, log_scale = _terms(z, B, pol, scale, 2)
    f1 = TWO_PI_I * (n @ d1)
    f2 = TWO_PI_I * (n @ d2)
    th = np.sum(terms)
    th1 = np.sum(terms * f1)
    th2 = np.sum(terms * f2)
    th12 = np.sum(terms * f1 * f2)
    # divisor proximity compared in log space so huge peaks cannot overflow
    _, log_peak = _peak_center(z, B)
    log_abs_th = math.log(abs(th)) + log_scale if th != 0 else -math.inf
    if log_abs_th < math.log(zero_threshold) + log_peak:
        raise ThetaDivisorError("argument lies too close to the theta divisor")
    # the common exp(log_scale) factor cancels in the quotient
    return complex((th * th12 - th1 * th2) / th**2)
