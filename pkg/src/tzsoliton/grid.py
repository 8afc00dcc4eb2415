"""Rectangular evaluation grids and sampled fields.

A FieldGrid stores u and e^u over a tensor grid, a per-cell status flag, and
optionally the analytic derivative planes of e^u (exact Taylor data from the
determinant evaluation) that the verifier prefers over stencils.  Arrays are
indexed [t, x], matching the t-major row order of the CSV format.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FLAG_OK = 0
FLAG_SINGULAR = 1
FLAG_BRANCH = 2

FLAG_NAMES = {FLAG_OK: "ok", FLAG_SINGULAR: "singular", FLAG_BRANCH: "branch"}
FLAG_CODES = {v: k for k, v in FLAG_NAMES.items()}


@dataclass(frozen=True)
class GridSpec:
    """Bounds and resolution of a rectangular (x, t) lattice."""

    x0: float
    x1: float
    t0: float
    t1: float
    nx: int
    nt: int

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.t1 > self.t0):
            raise ValueError("grid bounds must satisfy x1 > x0 and t1 > t0")
        if self.nx < 3 or self.nt < 3:
            raise ValueError("grid needs at least 3 points per axis")

    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    def ts(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.nt)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def ht(self) -> float:
        return (self.t1 - self.t0) / (self.nt - 1)


@dataclass
class FieldGrid:
    """Sampled complex field over a rectangular lattice.

    planes may carry 'exp_u_x', 'exp_u_t', 'exp_u_xt' (analytic derivatives
    of e^u) and tau_abs the balance-normalized |det| used for flagging.
    """

    xs: np.ndarray
    ts: np.ndarray
    u: np.ndarray
    exp_u: np.ndarray
    flags: np.ndarray
    planes: dict = field(default_factory=dict)
    tau_abs: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (len(self.ts), len(self.xs))
        for name in ("u", "exp_u", "flags"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")

    @property
    def has_planes(self) -> bool:
        return all(k in self.planes for k in ("exp_u_x", "exp_u_t", "exp_u_xt"))

    @property
    def hx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    @property
    def ht(self) -> float:
        return float(self.ts[1] - self.ts[0])


def _track_row(logs, ok, ref, first):
    """Branch-track one row of principal logs.

    Splits the row into maximal runs of usable cells, unwraps the phase
    inside each run, then shifts each run by a multiple of 2 pi i to match
    the previous row (ref) where both are usable.  Runs with no vertical
    anchor restart on the principal branch and, except for the very first
    run of the grid, get a branch mark at their first cell.
    """
    n = logs.shape[0]
    u = np.full(n, np.nan + 0j)
    branch = np.zeros(n, dtype=bool)
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return u, branch
    splits = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[0], splits + 1])
    ends = np.concatenate([splits, [idx.size - 1]])
    first_run = first
    for s_i, e_i in zip(starts, ends):
        cells = idx[s_i:e_i + 1]
        seg = logs[cells]
        d = np.diff(seg)
        im = d.imag
        wrapped = (im + np.pi) % (2.0 * np.pi) - np.pi
        corr = np.concatenate([[0.0], np.cumsum(wrapped - im)])
        useg = seg + 1j * corr
        branch_seg = np.zeros(cells.size, dtype=bool)
        if d.size:
            # a jump near pi is ambiguous: a zero or pole passed between samples
            branch_seg[1:][np.abs(wrapped) > 2.8] = True
        shift = 0.0
        anchored = False
        if ref is not None:
            refs = ref[cells]
            good = ~np.isnan(refs)
            if np.any(good):
                j = np.flatnonzero(good)[0]
                delta = refs[j].imag - useg[j].imag
                shift = 2.0 * np.pi * np.round(delta / (2.0 * np.pi))
                anchored = True
        if not anchored and not first_run:
            branch_seg[0] = True
        first_run = False
        u[cells] = useg + 1j * shift
        branch[cells] |= branch_seg
    return u, branch


def branch_tracked_log(values, singular_mask):
    """Continuously tracked complex logarithm of a sampled field.

    The branch is chosen by phase continuity along each t-row, and rows are
    stitched through the first column where consecutive rows are both
    regular.  Returns (u, branch_mask); the mask marks cells where the
    tracked branch is unreliable (near-pi phase jumps between neighbours,
    anchor-less restarts after a singular gap, zeros of the field).
    Singular cells receive the principal log and are never used as anchors.
    """
    vals = np.asarray(values)
    if vals.ndim != 2:
        raise ValueError("branch_tracked_log expects a 2-d field")
    finite = np.isfinite(vals)
    nz = finite & (vals != 0)
    ok = nz & ~np.asarray(singular_mask, dtype=bool)
    logs = np.full(vals.shape, np.nan + 0j)
    logs[nz] = np.log(vals[nz])
    u = np.full(vals.shape, np.nan + 0j)
    branch = ~nz
    prev = None
    for i in range(vals.shape[0]):
        row_u, row_branch = _track_row(logs[i], ok[i], prev, first=(i == 0))
        u[i] = row_u
        branch[i] |= row_branch
        prev = row_u
    rest = nz & np.isnan(u)
    u[rest] = logs[rest]
    return u, branch
