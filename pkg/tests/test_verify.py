"""Verification machinery: stencils, exclusions, Goursat, Lax, scanning."""
import numpy as np
import pytest

from tzsoliton import verify
from tzsoliton.dressing import SolitonConfig, evaluate_grid
from tzsoliton.grid import FLAG_OK, FLAG_SINGULAR, FieldGrid, GridSpec
from tzsoliton.spectral_curve import SpectralPoint
from tzsoliton.verify import (
    exclusion_mask,
    goursat_cross_check,
    lax_check,
    make_field_source,
    polish_singularity,
    polish_singularity_2d,
    residual_lab,
    residual_lightcone,
    singularity_scan,
    stencil_mixed_xt,
    stencil_wave,
    zero_curvature_gap,
)


def synthetic_field(u_func, spec, frame=None):
    xs, ts = spec.xs(), spec.ts()
    X, T = np.meshgrid(xs, ts)
    u = np.asarray(u_func(X, T), dtype=complex)
    meta = {} if frame is None else {"frame": frame}
    return FieldGrid(xs=xs, ts=ts, u=u, exp_u=np.exp(u),
                     flags=np.zeros(u.shape, dtype=np.uint8), meta=meta)


def test_mixed_stencil_polynomial_exact():
    spec = GridSpec(-1, 1, -1, 1, 9, 9)
    f = synthetic_field(lambda x, t: x**3 * t**2 + 2 * x * t - t**3, spec)
    got = stencil_mixed_xt(f.u, f.hx, f.ht)
    X, T = np.meshgrid(spec.xs(), spec.ts())
    want = 6 * X**2 * T + 2
    assert np.allclose(got[2:-2, 2:-2], want[2:-2, 2:-2], atol=1e-11)
    assert np.all(np.isnan(got[:2, :].real))


def test_wave_stencil_polynomial_exact():
    spec = GridSpec(-1, 1, -1, 1, 9, 9)
    f = synthetic_field(lambda x, t: x**3 * t**3 + x**2 - t**2, spec)
    got = stencil_wave(f.u, f.hx, f.ht)
    X, T = np.meshgrid(spec.xs(), spec.ts())
    want = (6 * T * X**3 - 2) - (6 * X * T**3 + 2)
    assert np.allclose(got[2:-2, 2:-2], want[2:-2, 2:-2], atol=1e-11)


def test_residual_flags_non_solution():
    # u = x t is not a solution: u_xt = 1 but the right side vanishes at 0
    spec = GridSpec(-0.5, 0.5, -0.5, 0.5, 11, 11)
    f = synthetic_field(lambda x, t: x * t, spec)
    rep = residual_lightcone(f, mode="stencil")
    assert rep.max_abs_residual > 0.5


def test_residual_accepts_vacuum():
    spec = GridSpec(-1, 1, -1, 1, 11, 11)
    f = synthetic_field(lambda x, t: np.zeros_like(x), spec)
    rep = residual_lightcone(f, mode="stencil")
    assert rep.max_abs_residual <= 1e-13
    assert rep.n_excluded == 0


def test_exclusion_mask_and_dilation():
    spec = GridSpec(-1, 1, -1, 1, 11, 11)
    f = synthetic_field(lambda x, t: np.zeros_like(x), spec)
    f.flags[5, 5] = FLAG_SINGULAR
    f.exp_u[2, 8] = np.nan
    bad = exclusion_mask(f)
    assert bad[5, 5] and bad[2, 8]
    assert np.count_nonzero(bad) == 2
    dil = verify._dilate(bad, 1)
    assert dil[4, 4] and dil[6, 6] and dil[1, 7]
    assert np.count_nonzero(dil) == 18


def test_branch_jump_mask():
    spec = GridSpec(-1, 1, -1, 1, 9, 9)
    f = synthetic_field(lambda x, t: np.zeros_like(x), spec)
    f.u[4, 4:] += 2j * np.pi  # cut ray entering at column 4 of row 4
    cut = verify._branch_jump_mask(f.u)
    assert cut[4, 3] and cut[4, 4]
    assert cut[3, 5] and cut[5, 5]
    assert not cut[0, 0]


def test_resolution_filter_drops_wild_cells():
    spec = GridSpec(-1, 1, -1, 1, 17, 17)
    # single-node spike no 0.125-step grid can resolve: the fourth- and
    # second-order rebuilds disagree by more than the field scale around it
    f = synthetic_field(lambda x, t: 3 * np.exp(-(x**2 + t**2) / 1e-4), spec)
    rep = residual_lightcone(f, mode="stencil")
    assert rep.n_excluded > 0


def test_residual_corruption_detected(vacuum, one_soliton, clean_window):
    f = evaluate_grid(one_soliton, vacuum, clean_window)
    base = residual_lightcone(f, mode="stencil")
    assert base.rel_residual <= 1e-4
    f.u[10, 10] += 0.1
    f.exp_u[10, 10] *= np.exp(0.1)
    bumped = residual_lightcone(f, mode="stencil")
    assert bumped.rel_residual > 50 * base.rel_residual


def test_analytic_equals_exact(vacuum, one_soliton, clean_window):
    f = evaluate_grid(one_soliton, vacuum, clean_window)
    rep = residual_lightcone(f)  # auto -> analytic
    assert rep.mode == "analytic"
    assert rep.rel_residual <= 1e-10


def test_lab_stencil_frame_guard(vacuum, one_soliton, clean_window):
    f = evaluate_grid(one_soliton, vacuum, clean_window)  # lightcone frame
    with pytest.raises(ValueError):
        residual_lab(f, mode="stencil")


def test_goursat_converges_second_order(vacuum, one_soliton):
    source = make_field_source(one_soliton, vacuum)
    rep = goursat_cross_check(source, GridSpec(0, 2, 0, 2, 33, 33), refinements=2)
    assert not rep.deviations["blow_up"]
    assert 1.7 <= rep.convergence_order <= 2.3


def test_goursat_trivial_background(vacuum):
    source = make_field_source(SolitonConfig((), (), ()), vacuum)
    rep = goursat_cross_check(source, GridSpec(0, 1, 0, 1, 9, 9), refinements=1)
    assert rep.max_abs_residual <= 1e-14
    assert rep.convergence_order is None


def test_goursat_detects_corrupt_boundary(vacuum, one_soliton):
    inner = make_field_source(one_soliton, vacuum)

    def corrupted(xs, ts):
        u = inner(xs, ts)
        u[0, :] += 0.05  # poison the t = t0 trace
        return u

    good = goursat_cross_check(inner, GridSpec(0, 1, 0, 1, 9, 9), refinements=1)
    bad = goursat_cross_check(corrupted, GridSpec(0, 1, 0, 1, 9, 9), refinements=1)
    # the deviation no longer shrinks under refinement: order collapses
    assert bad.max_abs_residual > 5 * good.max_abs_residual
    assert bad.convergence_order < 1.7 <= good.convergence_order


def test_lax_analytic_and_fd(vacuum):
    P = SpectralPoint(1.0)
    dev_x, dev_t = lax_check(P, 0.4, -0.7, vacuum, mode="analytic")
    assert dev_x <= 1e-12 and dev_t <= 1e-12
    c1 = lax_check(P, 0.4, -0.7, vacuum, mode="fd", h=1e-3)
    c2 = lax_check(P, 0.4, -0.7, vacuum, mode="fd", h=5e-4)
    for a, b in zip(c1, c2):
        assert 3.5 <= a / b <= 4.5  # order-2 decay


def test_lax_wrong_lambda_control(vacuum):
    P = SpectralPoint(1.0)
    dev_x, dev_t = lax_check(P, 0.4, -0.7, vacuum, mode="analytic",
                             lam_override=2.0)
    assert max(dev_x, dev_t) > 1e-2


def test_zero_curvature(vacuum):
    assert zero_curvature_gap(0.3, -0.2, vacuum, 1.7) <= 1e-12


def test_polish_and_scan_flow(vacuum):
    cfg = SolitonConfig.canonical([1.0], [1.0])
    xs, ts, tmin = polish_singularity_2d(cfg, vacuum, -3.5, 2.0)
    assert tmin <= 1e-10
    # 1-d sweep along x at the zero's own t recovers the x coordinate
    x1, tau1 = polish_singularity(cfg, vacuum, xs + 0.1, ts, axis="x",
                                  half_width=0.3)
    assert abs(x1 - xs) <= 1e-6
    assert tau1 <= 1e-9
    spec = GridSpec(xs - 1, xs + 1, ts - 1, ts + 1, 11, 11)
    hits = singularity_scan(cfg, vacuum, spec)
    assert len(hits) >= 1
    assert any(abs(h["x"] - xs) < 1e-9 and abs(h["t"] - ts) < 1e-9 for h in hits)


def test_scan_clean_for_complex_C(vacuum, one_soliton):
    spec = GridSpec(-4.5, -2.5, 1.0, 3.0, 11, 11)
    assert singularity_scan(one_soliton, vacuum, spec) == []


def test_report_serialization(vacuum, one_soliton, clean_window):
    f = evaluate_grid(one_soliton, vacuum, clean_window)
    rep = residual_lightcone(f)
    d = rep.as_dict()
    assert d["kind"] == "residual_lightcone"
    assert isinstance(d["rel_residual"], float)
    assert d["n_cells"] > 0
