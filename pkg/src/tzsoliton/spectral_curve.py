"""Genus-0 spectral curve: points, involutions, vacuum Baker-Akhiezer data.

The curve is the Riemann sphere with global coordinate k and spectral
parameter lambda = k^3.  lambda has a third-order pole at k = infinity and a
third-order zero at k = 0; those two marked points are never represented as
SpectralPoint values.  The holomorphic involution sigma sends k to -k (so
lambda changes sign) and the anti-holomorphic involution tau conjugates k.

The vacuum background (u = v = 0) admits the closed-form Baker-Akhiezer
vector

    e_i(x, t, P) = k^{-i} exp(k x + t / k),   i = 1, 2, 3,

which solves both Lax systems exactly.  VacuumBackground packages that data
together with everything the dressing construction consumes: the skew
pairing, the kernel in exponential-separable form, the weight of the
third-kind differential, and the growth exponents kappa.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CoincidentSpectrumError, MarkedPointError

# primitive cube root of unity
EPS3 = complex(np.exp(2j * np.pi / 3))


def principal_cbrt(w: complex) -> complex:
    """Cube root with argument in (-pi/3, pi/3].

    numpy's angle() returns +pi for negative reals, so the branch cut lands
    on arg = pi/3 inclusive, matching the stated convention.
    """
    w = complex(w)
    if w == 0:
        return 0.0 + 0.0j
    return abs(w) ** (1.0 / 3.0) * complex(np.exp(1j * np.angle(w) / 3.0))


@dataclass(frozen=True)
class SpectralPoint:
    """A non-marked point of the curve, held by its k coordinate."""

    k: complex

    def __post_init__(self):
        k = complex(self.k)
        if k == 0:
            raise MarkedPointError("k = 0 is a marked point and has no SpectralPoint")
        object.__setattr__(self, "k", k)

    @property
    def lam(self) -> complex:
        return self.k**3

    @property
    def q(self) -> complex:
        """Local coordinate at the other marked point, q = 1/k."""
        return 1.0 / self.k


def lam(P: SpectralPoint) -> complex:
    """Spectral parameter lambda(P) = k^3."""
    return P.lam


def sigma(P: SpectralPoint) -> SpectralPoint:
    """Holomorphic involution, lambda(sigma P) = -lambda(P)."""
    return SpectralPoint(-P.k)


def tau(P: SpectralPoint) -> SpectralPoint:
    """Anti-holomorphic involution, lambda(tau P) = conj(lambda(P))."""
    return SpectralPoint(complex(P.k).conjugate())


def preimages(lam0: complex) -> tuple[SpectralPoint, SpectralPoint, SpectralPoint]:
    """The three solutions of lambda(P) = lam0, principal root first."""
    lam0 = complex(lam0)
    if lam0 == 0:
        raise MarkedPointError("lambda = 0 has no preimages away from the marked points")
    k0 = principal_cbrt(lam0)
    return (SpectralPoint(k0), SpectralPoint(k0 * EPS3), SpectralPoint(k0 * EPS3**2))


@dataclass(frozen=True)
class BAValue:
    """Components of a Baker-Akhiezer vector at one point."""

    psi1: complex
    psi2: complex
    psi3: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.psi1, self.psi2, self.psi3], dtype=complex)


def baker_vacuum(x: float, t: float, P: SpectralPoint) -> BAValue:
    """Vacuum Baker-Akhiezer vector e_i = k^{-i} exp(kx + t/k)."""
    k = P.k
    E = np.exp(k * x + t / k)
    return BAValue(E / k, E / k**2, E / k**3)


def pairing(psi: BAValue, phi: BAValue, lam_p: complex) -> complex:
    """Skew pairing <psi|phi> = -psi1*phi2 + psi2*phi1 + lambda(P)*psi3*phi3."""
    return -psi.psi1 * phi.psi2 + psi.psi2 * phi.psi1 + lam_p * psi.psi3 * phi.psi3


def kappa_inf(P: SpectralPoint) -> float:
    """Growth exponent from the differential dk: Re k."""
    return float(np.real(P.k))


def kappa_0(P: SpectralPoint) -> float:
    """Growth exponent from the differential dq, q = 1/k: Re(1/k)."""
    return float(np.real(1.0 / P.k))


def lax_L(u_x: complex, lam0: complex) -> np.ndarray:
    """x-part of the Lax pair at field slope u_x and spectral parameter lambda."""
    return np.array(
        [[-u_x, 0.0, lam0], [1.0, u_x, 0.0], [0.0, 1.0, 0.0]], dtype=complex
    )


def lax_A(u: complex, lam0: complex) -> np.ndarray:
    """t-part of the Lax pair at field value u and spectral parameter lambda."""
    eu = np.exp(u)
    return np.array(
        [[0.0, np.exp(-2.0 * u), 0.0], [0.0, 0.0, eu], [eu / lam0, 0.0, 0.0]],
        dtype=complex,
    )


class BackgroundProvider:
    """Contract the dressing construction needs from a background.

    Implementations supply the curve data (lambda, sigma), the background
    Baker-Akhiezer vector with its analytic x/t derivatives, the constant
    value of the diagonal pairing, the weight omega/dk of the third-kind
    differential entering the residue conditions, the growth exponents, and
    the background field itself (as e^v together with v and v_x for the Lax
    matrices).

    Grid evaluation additionally requires the raw kernel in
    exponential-separable form, kernel_exponents(P, Q) -> (coef, d1, d2)
    with Omega_raw = coef * exp(d1*x + d2*t); only backgrounds with that
    structure (the vacuum) support dressing in this package.
    """

    genus = None  # subclasses set an integer

    def lam(self, P: SpectralPoint) -> complex:
        return P.lam

    def sigma(self, P: SpectralPoint) -> SpectralPoint:
        return sigma(P)

    # --- Baker-Akhiezer data -------------------------------------------------
    def baker(self, x: float, t: float, P: SpectralPoint) -> BAValue:
        raise NotImplementedError

    def baker_dx(self, x: float, t: float, P: SpectralPoint) -> BAValue:
        raise NotImplementedError

    def baker_dt(self, x: float, t: float, P: SpectralPoint) -> BAValue:
        raise NotImplementedError

    def pairing_diag_constant(self, P: SpectralPoint) -> complex:
        raise NotImplementedError

    def omega_weight(self, P: SpectralPoint) -> complex:
        raise NotImplementedError

    # --- growth exponents ----------------------------------------------------
    def kappa_inf(self, P: SpectralPoint) -> float:
        return kappa_inf(P)

    def kappa_0(self, P: SpectralPoint) -> float:
        return kappa_0(P)

    # --- background field ----------------------------------------------------
    def background_field(self, x: float, t: float) -> complex:
        """Value of e^v at (x, t)."""
        raise NotImplementedError

    def background_u(self, x: float, t: float) -> complex:
        """Value of v at (x, t)."""
        raise NotImplementedError

    def background_u_dx(self, x: float, t: float) -> complex:
        """Value of v_x at (x, t)."""
        raise NotImplementedError

    # --- kernel --------------------------------------------------------------
    def kernel_exponents(self, P: SpectralPoint, Q: SpectralPoint):
        raise NotImplementedError


class VacuumBackground(BackgroundProvider):
    """The trivial background u = v = 0 with closed-form spectral data."""

    genus = 0

    def baker(self, x, t, P):
        return baker_vacuum(x, t, P)

    def baker_dx(self, x, t, P):
        # d/dx shifts the component index down: d e_i / dx = k e_i = e_{i-1}
        k = P.k
        E = np.exp(k * x + t / k)
        return BAValue(E, E / k, E / k**2)

    def baker_dt(self, x, t, P):
        # d/dt shifts the component index up: d e_i / dt = e_i / k = e_{i+1}
        k = P.k
        E = np.exp(k * x + t / k)
        return BAValue(E / k**2, E / k**3, E / k**4)

    def pairing_diag_constant(self, P):
        # <e(P)|e(sigma P)> for the vacuum components; (x,t)-independent
        return -3.0 / P.k**3

    def omega_weight(self, P):
        # omega = dk/k: simple poles at the two marked points, residues -+1
        return 1.0 / P.k

    def background_field(self, x, t):
        return 1.0 + 0.0j

    def background_u(self, x, t):
        return 0.0 + 0.0j

    def background_u_dx(self, x, t):
        return 0.0 + 0.0j

    def kernel_exponents(self, P: SpectralPoint, Q: SpectralPoint):
        """Raw kernel as coef * exp(d1*x + d2*t).

        Closed form of <e(P)|e(sigma Q)> / (lambda(P) - lambda(Q)): the
        cubic difference cancels against the pairing numerator, leaving

            Omega_raw = -exp((k-kap)x + (1/k-1/kap)t) / (k^2 kap^3 (k-kap)),

        finite whenever k(P) != k(Q), including the lambda(P) = lambda(Q),
        P != Q points the block matrix needs.
        """
        k = P.k
        kap = Q.k
        if abs(k - kap) <= 1e-14 * max(abs(k), abs(kap)):
            raise CoincidentSpectrumError(
                f"kernel pole: coincident spectral points k = {k}"
            )
        coef = -1.0 / (k**2 * kap**3 * (k - kap))
        return coef, k - kap, 1.0 / k - 1.0 / kap
