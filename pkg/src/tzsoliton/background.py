"""Finite-gap background fields e^v = c - 2 d_x d_t log theta(Ux + Vt + zD).

Genus 0 is the built-in exact vacuum: e^v = c with c = 1 by default, the
only constant that solves the field equation (c^3 = 1 picks the real root).
For g > 0 the frequency vectors U, V, the phase zD and the constant c are
user data; the evaluator makes no attempt to derive them from a curve and
no claim that arbitrary data solves the equation.  Verification treats the
resulting residual as information.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core.jets import jet_log
from .exceptions import ConfigError
from .grid import FLAG_BRANCH, FLAG_OK, FLAG_SINGULAR, FieldGrid, GridSpec, branch_tracked_log
from .theta import DEFAULT_POLICY, PeriodMatrix, TruncationPolicy, theta_log_d2, theta_scale, theta_with_xt_jet

DIVISOR_THRESHOLD = 1e-10  # |theta| below this times the local scale: singular


@dataclass(frozen=True)
class BackgroundData:
    """Evaluation data of a finite-gap background."""

    genus: int = 0
    c: complex = 1.0 + 0.0j
    U: tuple = ()
    V: tuple = ()
    zD: tuple = ()
    prym: PeriodMatrix | None = None

    def __post_init__(self):
        g = int(self.genus)
        if g < 0:
            raise ConfigError("genus must be nonnegative")
        U = tuple(complex(u) for u in self.U)
        V = tuple(complex(v) for v in self.V)
        zD = tuple(complex(z) for z in self.zD)
        if g == 0:
            if U or V or zD or self.prym is not None:
                raise ConfigError("genus-0 background takes no vectors and no period matrix")
        else:
            if not (len(U) == len(V) == len(zD) == g):
                raise ConfigError(f"U, V, zD must all have length {g}")
            if self.prym is None or self.prym.g != g:
                raise ConfigError(f"period matrix must be {g} x {g}")
        object.__setattr__(self, "genus", g)
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "zD", zD)

    @property
    def is_vacuum(self) -> bool:
        return self.genus == 0 and self.c == 1.0 + 0.0j


def exp_v(data: BackgroundData, x: float, t: float,
          pol: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Background field value; raises ThetaDivisorError on the divisor."""
    if data.genus == 0:
        return data.c
    z = np.asarray(data.zD) + x * np.asarray(data.U) + t * np.asarray(data.V)
    return data.c - 2.0 * theta_log_d2(z, data.prym, data.U, data.V, pol,
                                       zero_threshold=DIVISOR_THRESHOLD)


def _jet_planes(data: BackgroundData, x: float, t: float,
                pol: TruncationPolicy):
    """(e^v, e^v_x, e^v_t, e^v_xt, singular) at one point via theta jets."""
    z = np.asarray(data.zD) + x * np.asarray(data.U) + t * np.asarray(data.V)
    J = theta_with_xt_jet(z, data.prym, data.U, data.V, pol)
    th = J[0, 0]
    if not np.all(np.isfinite(J)) or abs(th) < DIVISOR_THRESHOLD * theta_scale(z, data.prym):
        nan = complex(np.nan, np.nan)
        return nan, nan, nan, nan, True
    L = jet_log(J)
    ev = data.c - 2.0 * L[1, 1]
    return ev, -4.0 * L[2, 1], -4.0 * L[1, 2], -8.0 * L[2, 2], False


def v_field(data: BackgroundData, spec: GridSpec, threads: int = 1,
            pol: TruncationPolicy = DEFAULT_POLICY) -> FieldGrid:
    """Sample the background over a grid with derivative planes.

    Divisor hits become singular-flagged cells rather than aborts; the
    logarithm v is branch-tracked along rows and stitched across rows.
    """
    xs, ts = spec.xs(), spec.ts()
    shape = (spec.nt, spec.nx)
    if data.genus == 0:
        ev = np.full(shape, complex(data.c))
        zero = np.zeros(shape, dtype=complex)
        u, branch = branch_tracked_log(ev, np.zeros(shape, dtype=bool))
        flags = np.full(shape, FLAG_OK, dtype=np.uint8)
        flags[branch] = FLAG_BRANCH
        return FieldGrid(
            xs=xs, ts=ts, u=u, exp_u=ev, flags=flags,
            planes={"exp_u_x": zero, "exp_u_t": zero.copy(), "exp_u_xt": zero.copy()},
            meta={"genus": 0},
        )

    ev = np.empty(shape, dtype=complex)
    evx = np.empty(shape, dtype=complex)
    evt = np.empty(shape, dtype=complex)
    evxt = np.empty(shape, dtype=complex)
    singular = np.zeros(shape, dtype=bool)

    def run_row(i: int):
        t = ts[i]
        for j, x in enumerate(xs):
            ev[i, j], evx[i, j], evt[i, j], evxt[i, j], singular[i, j] = _jet_planes(
                data, float(x), float(t), pol
            )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_row, range(spec.nt)))
    else:
        for i in range(spec.nt):
            run_row(i)

    u, branch = branch_tracked_log(ev, singular)
    flags = np.full(shape, FLAG_OK, dtype=np.uint8)
    flags[branch] = FLAG_BRANCH
    flags[singular] = FLAG_SINGULAR
    return FieldGrid(
        xs=xs, ts=ts, u=u, exp_u=ev, flags=flags,
        planes={"exp_u_x": evx, "exp_u_t": evt, "exp_u_xt": evxt},
        meta={"genus": data.genus},
    )


def check_real_positive(data: BackgroundData, spec: GridSpec,
                        tol: float = 1e-9) -> tuple[bool, float, float]:
    """Sampled reality check for backgrounds asserted real and nonsingular.

    Returns (ok, max |Im e^v|, min Re e^v) over the grid, skipping
    divisor-flagged cells.  This verifies only the sampled values; whether
    the underlying data has the symmetry that guarantees reality is outside
    scope.
    """
    fg = v_field(data, spec)
    good = fg.flags == FLAG_OK
    if not np.any(good):
        return False, float("inf"), float("-inf")
    vals = fg.exp_u[good]
    max_im = float(np.max(np.abs(vals.imag)))
    min_re = float(np.min(vals.real))
    return (max_im <= tol and min_re > tol), max_im, min_re
