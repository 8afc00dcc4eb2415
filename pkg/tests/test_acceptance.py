"""Acceptance suite: one test and one printed PASS/FAIL line per guarantee.

Run `pytest tests/test_acceptance.py -v -s` to see the summary lines with
the measured margins.  Every test is independent and uses fixed seeds.
"""
import json
import time

import numpy as np

from tzsoliton.asymptotics import (
    track_trajectory,
    trajectory_slope,
    velocity_lab,
)
from tzsoliton.background import BackgroundData, exp_v
from tzsoliton.cli import main
from tzsoliton.dressing import (
    SolitonConfig,
    exp_u,
    exp_u_via_linear_system,
    evaluate_grid,
    evaluate_points,
    residue_identity_check,
)
from tzsoliton.grid import GridSpec
from tzsoliton.spectral_curve import SpectralPoint, VacuumBackground, pairing
from tzsoliton.theta import PeriodMatrix, theta, theta_log_d2, theta_scale
from tzsoliton.verify import (
    goursat_cross_check,
    lax_check,
    make_field_source,
    polish_singularity_2d,
    residual_lightcone,
    singularity_scan,
)

SEED = 20260817
VAC = VacuumBackground()
BOX = GridSpec(-5.0, 5.0, -5.0, 5.0, 41, 41)


def _line(tag, ok, detail):
    print(f"[{tag}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{tag}: {detail}"


def test_a01_vacuum_background_exact():
    t0 = time.perf_counter()
    cfg = SolitonConfig.canonical([], [])
    field = evaluate_grid(cfg, VAC, BOX)
    rep = residual_lightcone(field)
    took = time.perf_counter() - t0
    ok = rep.max_abs_residual <= 1e-13 and took < 1.0
    _line("a01 vacuum sanity", ok,
          f"max residual {rep.max_abs_residual:.2e} on 41x41, {took:.2f} s")


def test_a02_kernel_residue_calibration():
    worst_one = 0.0
    worst_stable = 0.0
    worst_moved = 0.0
    for kq in (1.0, 2.0, np.exp(1j * np.pi / 3)):
        Q = SpectralPoint(kq)
        base = residue_identity_check(Q, VAC)
        fine = residue_identity_check(Q, VAC, quadrature_points=1024,
                                      radius=0.025)
        moved = residue_identity_check(Q, VAC, quadrature_points=512,
                                       radius=0.05, x=1.3, t=-0.7)
        worst_one = max(worst_one, abs(base - 1.0), abs(fine - 1.0))
        worst_stable = max(worst_stable, abs(fine - base))
        worst_moved = max(worst_moved, abs(moved - base))
    ok = worst_one <= 1e-8 and worst_stable <= 1e-8 and worst_moved <= 1e-9
    _line("a02 residue calibration", ok,
          f"|res-1| {worst_one:.2e}, refinement drift {worst_stable:.2e}, "
          f"(x,t) drift {worst_moved:.2e}")


def test_a03_pairing_constancy():
    rng = np.random.default_rng(SEED)
    xs = np.linspace(-2.0, 2.0, 20)
    ts = np.linspace(-2.0, 2.0, 20)
    worst = 0.0
    for _ in range(10):
        k = rng.normal() + 1j * rng.normal()
        if abs(k) < 0.3:
            k += 1.0
        P = SpectralPoint(k)
        sP = VAC.sigma(P)
        vals = np.array([
            pairing(VAC.baker(x, t, P), VAC.baker(x, t, sP), VAC.lam(P))
            for x in xs for t in ts
        ])
        worst = max(worst, float(np.std(vals) / abs(np.mean(vals))))
    ok = worst <= 1e-12
    _line("a03 pairing constancy", ok,
          f"relative std {worst:.2e} over 20x20 grid, 10 random P")


def test_a04_one_soliton_residual():
    t0 = time.perf_counter()
    cfg = SolitonConfig.canonical([1.0], [1j])
    field = evaluate_grid(cfg, VAC, BOX)
    rep = residual_lightcone(field)
    took = time.perf_counter() - t0
    ok = rep.rel_residual <= 1e-8 and took < 5.0
    _line("a04 one-soliton residual", ok,
          f"rel residual {rep.rel_residual:.2e}, "
          f"{rep.n_excluded} cells excluded, {took:.2f} s")


def test_a05_two_soliton_residual_and_routes():
    cfg = SolitonConfig.canonical([1.0, 2.2], [1j, 1.0 + 0.5j])
    field = evaluate_grid(cfg, VAC, BOX)
    rep = residual_lightcone(field)
    rng = np.random.default_rng(SEED)
    worst_route = 0.0
    for _ in range(25):
        x, t = rng.uniform(-2.0, 2.0, size=2)
        a = exp_u(x, t, cfg, VAC)
        b = exp_u_via_linear_system(x, t, cfg, VAC)
        worst_route = max(worst_route, abs(a - b) / max(abs(a), 1.0))
    ok = rep.rel_residual <= 1e-7 and worst_route <= 1e-9
    _line("a05 two-soliton residual + routes", ok,
          f"rel residual {rep.rel_residual:.2e}, "
          f"route gap {worst_route:.2e} at 25 points")


def test_a06_gauge_invariance():
    worst = 0.0
    for x, t in ((0.4, -0.3), (-1.1, 0.8), (1.7, 1.2)):
        base = exp_u(x, t, SolitonConfig.canonical([1.0], [1j]), VAC)
        for s in (0.5, -3.0, 2j):
            rescaled = SolitonConfig.canonical([1.0], [1j / s])
            got = exp_u(x, t, rescaled, VAC, gauge=s)
            worst = max(worst, abs(got - base) / abs(base))
    ok = worst <= 1e-12
    _line("a06 gauge invariance", ok,
          f"max field change {worst:.2e} for s in {{0.5, -3, 2i}}")


def test_a07_goursat_cross_check():
    cfg = SolitonConfig.canonical([1.0], [1j])
    rep = goursat_cross_check(make_field_source(cfg, VAC),
                              GridSpec(0.0, 2.0, 0.0, 2.0, 33, 33),
                              refinements=3)
    devs = rep.deviations["levels"]
    orders = rep.deviations["orders"]
    decreasing = all(devs[i + 1] < devs[i] for i in range(len(devs) - 1))
    ok = (not rep.deviations["blow_up"] and decreasing
          and len(orders) == 3 and all(1.7 <= o <= 2.3 for o in orders))
    _line("a07 goursat order", ok,
          f"orders {[round(o, 3) for o in orders]}, "
          f"finest deviation {devs[-1]:.2e}")


def test_a08_lax_systems():
    worst = 0.0
    for k in (1.3, 0.7 + 0.4j, np.exp(1j * np.pi / 3)):
        P = SpectralPoint(k)
        for x, t in ((0.0, 0.0), (0.4, -0.7), (-1.2, 0.9)):
            dx, dt = lax_check(P, x, t, VAC, mode="analytic")
            worst = max(worst, dx, dt)
    P = SpectralPoint(1.3)
    c1 = lax_check(P, 0.4, -0.7, VAC, mode="fd", h=1e-3)
    c2 = lax_check(P, 0.4, -0.7, VAC, mode="fd", h=5e-4)
    ratios = (c1[0] / c2[0], c1[1] / c2[1])
    ok = worst <= 1e-12 and all(3.5 <= r <= 4.5 for r in ratios)
    _line("a08 lax systems", ok,
          f"analytic deviation {worst:.2e}, "
          f"fd halving ratios {[round(r, 2) for r in ratios]}")


def test_a09_kinematics():
    cfg = SolitonConfig.canonical([1.0], [1j])
    want = trajectory_slope(cfg, VAC, 0)
    fwd = track_trajectory(cfg, VAC, np.linspace(15.0, 25.0, 6),
                           (-30.0, -10.0), nx=801)
    bwd = track_trajectory(cfg, VAC, np.linspace(-25.0, -15.0, 6),
                           (10.0, 30.0), nx=801)
    err = max(abs(fwd.slope - want), abs(bwd.slope - want)) / abs(want)
    # both kappa differences negative gives v < 0, hence |V| < 1 at any boost
    rng = np.random.default_rng(SEED + 9)
    n_sub = 0
    n_total = 1200
    for _ in range(n_total):
        d_inf = -np.exp(rng.uniform(-4.0, 4.0))
        d_0 = -np.exp(rng.uniform(-4.0, 4.0))
        V = velocity_lab(-d_inf / d_0, rng.uniform(-4.0, 4.0))
        n_sub += abs(V) < 1.0
    ok = err <= 0.02 and n_sub == n_total
    _line("a09 kinematics", ok,
          f"tracked slope error {100 * err:.2f}% for |t| in [15,25], "
          f"subluminal {n_sub}/{n_total}")


def test_a10_real_soliton_singularity():
    cfg = SolitonConfig.canonical([1.0], [1.0])
    X, T = np.meshgrid(BOX.xs(), BOX.ts())
    ta = evaluate_points(cfg, VAC, X.ravel(), T.ravel(),
                         derivatives=False)["tau_abs"]
    i = int(np.argmin(np.where(np.isfinite(ta), ta, np.inf)))
    xs, ts, tmin = polish_singularity_2d(cfg, VAC, float(X.ravel()[i]),
                                         float(T.ravel()[i]))
    # node spacing divides the box so one node lands on the polished zero
    spec = GridSpec(xs - 2.5, xs + 2.5, ts - 2.5, ts + 2.5, 41, 41)
    hits = singularity_scan(cfg, VAC, spec)
    ok = tmin <= 1e-10 and len(hits) >= 1
    _line("a10 real-C singularity", ok,
          f"zero at ({xs:.4f}, {ts:.4f}), |det| {tmin:.1e}, "
          f"{len(hits)} flagged cell(s) on the 5x5 real window")


def test_a11_theta_identities_and_background():
    rng = np.random.default_rng(SEED + 11)
    worst_qp = 0.0
    worst_even = 0.0
    for g in (1, 2, 3):
        A = rng.normal(size=(g, g))
        X = rng.normal(scale=0.3, size=(g, g))
        B = PeriodMatrix((X + X.T) / 2 + 1j * (A @ A.T + g * np.eye(g)))
        for _ in range(3):
            z = rng.normal(scale=0.5, size=g) + 1j * rng.normal(scale=0.3, size=g)
            base = theta(z, B)
            scale = max(abs(base), theta_scale(z, B) * 1e-6)
            for j in range(g):
                lhs = theta(z + B.B[:, j], B)
                fac = np.exp(-1j * np.pi * B.B[j, j] - 2j * np.pi * z[j])
                worst_qp = max(worst_qp, abs(lhs - fac * base)
                               / max(abs(fac * base), scale))
            worst_even = max(worst_even, abs(theta(-z, B) - base) / scale)
    B2 = PeriodMatrix([[1.2j, 0.3], [0.3, 0.9j]])
    z2 = np.array([0.21 + 0.05j, -0.33 + 0.1j])
    U, V = np.array([0.4, -0.2]), np.array([0.1, 0.6])
    h = 1e-4

    def lg(a, b):
        return np.log(theta(z2 + a * U + b * V, B2))

    fd = (lg(h, h) - lg(h, -h) - lg(-h, h) + lg(-h, -h)) / (4 * h * h)
    d2_err = abs(theta_log_d2(z2, B2, U, V) - fd)
    data = BackgroundData(genus=1, c=2.0, U=(0.4,), V=(0.7,),
                          zD=(0.1 + 0.2j,), prym=PeriodMatrix([[1j]]))
    worst_bg = 0.0
    for x0, t0 in ((0.5, -0.3), (-0.8, 0.4), (1.1, 0.9), (0.0, 0.0)):
        def lt(x, t):
            return np.log(theta(np.asarray(data.zD) + x * np.asarray(data.U)
                                + t * np.asarray(data.V), data.prym))

        fd_v = (lt(x0 + h, t0 + h) - lt(x0 + h, t0 - h)
                - lt(x0 - h, t0 + h) + lt(x0 - h, t0 - h)) / (4 * h * h)
        want = data.c - 2.0 * fd_v
        worst_bg = max(worst_bg,
                       abs(exp_v(data, x0, t0) - want) / max(abs(want), 1.0))
    ok = (worst_qp <= 1e-8 and worst_even <= 1e-8
          and d2_err <= 1e-6 and worst_bg <= 1e-6)
    _line("a11 theta and background", ok,
          f"quasi-periodicity {worst_qp:.2e}, evenness {worst_even:.2e}, "
          f"log_d2 vs fd {d2_err:.2e}, background vs fd {worst_bg:.2e}")


def test_a12_cli_determinism(tmp_path):
    doc = {
        "background": "vacuum",
        "solitons": {"placement": "canonical",
                     "lambdas": [[1.0, 0.0]], "C": [[0.0, 1.0]]},
        "grid": {"x0": 0.0, "x1": 2.0, "t0": 0.0, "t1": 2.0,
                 "nx": 17, "nt": 17},
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    outs = []
    for name in ("f1.csv", "f2.csv"):
        out = tmp_path / name
        assert main(["field", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    reps = []
    for name in ("v1.json", "v2.json"):
        out = tmp_path / name
        assert main(["verify", "--config", str(cfg), "--out", str(out)]) == 0
        reps.append(out.read_bytes())
    ok = outs[0] == outs[1] and reps[0] == reps[1]
    _line("a12 determinism", ok,
          f"field csv {len(outs[0])} bytes and verify json "
          f"{len(reps[0])} bytes byte-identical across reruns")
