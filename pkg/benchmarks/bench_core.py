#!/usr/bin/env python3
"""Benchmark the batched jet log-det kernel: compiled extension vs numpy.

Also times end-to-end field grids so the kernel share of the total is
visible.  Run from the repository root:

    python3 benchmarks/bench_core.py
"""
import time

import numpy as np

from tzsoliton.core import backend_name
from tzsoliton.core.fallback import logdet_jets as logdet_python
from tzsoliton.dressing import SolitonConfig, evaluate_grid
from tzsoliton.grid import GridSpec
from tzsoliton.spectral_curve import VacuumBackground

try:
    from tzsoliton.core import _detcore

    logdet_compiled = _detcore.logdet_jets
except ImportError:
    logdet_compiled = None


def _random_stack(rng, batch, n):
    """Well-conditioned jet stacks shaped like dressing matrices."""
    mats = np.zeros((batch, n, n, 3, 3), dtype=complex)
    base = rng.normal(size=(batch, n, n)) + 1j * rng.normal(size=(batch, n, n))
    base += n * np.eye(n)[None, :, :]
    mats[..., 0, 0] = base
    for i, j in ((1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2)):
        mats[..., i, j] = 0.1 * (
            rng.normal(size=(batch, n, n)) + 1j * rng.normal(size=(batch, n, n))
        )
    return mats


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_kernel():
    rng = np.random.default_rng(0)
    print(f"active backend: {backend_name()}")
    print()
    print(f"{'batch':>7} {'n':>3} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for batch, n in ((64, 2), (441, 2), (1681, 2), (441, 4), (1681, 4),
                     (441, 8), (1681, 8), (441, 16)):
        mats = _random_stack(rng, batch, n)
        t_py, out_py = _time(logdet_python, mats)
        if logdet_compiled is None:
            print(f"{batch:>7} {n:>3} {t_py * 1e3:>10.2f}ms {'n/a':>12} {'n/a':>8}")
            continue
        t_c, out_c = _time(logdet_compiled, mats)
        agree = np.allclose(out_py, out_c, rtol=1e-12, atol=1e-12)
        flag = "" if agree else "  MISMATCH"
        print(f"{batch:>7} {n:>3} {t_py * 1e3:>10.2f}ms {t_c * 1e3:>10.2f}ms "
              f"{t_py / t_c:>7.1f}x{flag}")


def bench_field():
    vac = VacuumBackground()
    print()
    print("end-to-end field grids (41x41, derivatives on):")
    for label, cfg in (
        ("N=1", SolitonConfig.canonical([1.0], [1j])),
        ("N=2", SolitonConfig.canonical([1.0, 2.2], [1j, 1.0 + 0.5j])),
        ("N=4", SolitonConfig.canonical([1.0, 2.2, 0.6, 3.1],
                                        [1j, 1.0 + 0.5j, 2.0, 1j])),
    ):
        spec = GridSpec(-5.0, 5.0, -5.0, 5.0, 41, 41)
        t, _ = _time(evaluate_grid, cfg, vac, spec, repeats=3)
        print(f"  {label}: {t * 1e3:.1f} ms")


if __name__ == "__main__":
    bench_kernel()
    bench_field()
