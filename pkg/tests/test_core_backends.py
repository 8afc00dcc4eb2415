"""Log-det kernel: jet algebra, backend agreement, failure semantics."""
import os
import subprocess
import sys

import numpy as np
import pytest

from tzsoliton import core
from tzsoliton.core import backend_name, logdet_jets
from tzsoliton.core.fallback import logdet_jets as logdet_python
from tzsoliton.core.jets import (
    jet_const,
    jet_from_exponential,
    jet_inv,
    jet_log,
    jet_mul,
)


def random_jet_batch(rng, batch=6, n=4):
    m = rng.normal(size=(batch, n, n, 3, 3)) + 1j * rng.normal(size=(batch, n, n, 3, 3))
    # keep the constant parts well conditioned
    for b in range(batch):
        m[b, :, :, 0, 0] += 3.0 * np.eye(n)
    return m


def test_jet_exponential_log_roundtrip():
    j = jet_from_exponential(2.0 + 1.0j, 0.3 - 0.2j, -0.7j)
    # coefficients of c * exp(d1 x + d2 t): c d1^i d2^j / (i! j!)
    assert j[0, 0] == pytest.approx(2.0 + 1.0j)
    assert j[1, 0] == pytest.approx((2.0 + 1.0j) * (0.3 - 0.2j))
    assert j[2, 1] == pytest.approx((2.0 + 1.0j) * (0.3 - 0.2j) ** 2 * (-0.7j) / 2)
    lg = jet_log(j)
    assert lg[0, 0] == pytest.approx(np.log(2.0 + 1.0j))
    assert lg[1, 0] == pytest.approx(0.3 - 0.2j)
    assert lg[0, 1] == pytest.approx(-0.7j)
    # log of a pure exponential is affine: every higher coefficient vanishes
    assert abs(lg[1, 1]) <= 1e-14
    assert abs(lg[2, 2]) <= 1e-14


def test_jet_mul_inv():
    a = jet_from_exponential(1.5, 0.2, -0.4)
    b = jet_from_exponential(-0.5 + 1j, -0.1, 0.3)
    prod = jet_mul(a, b)
    want = jet_from_exponential(1.5 * (-0.5 + 1j), 0.1, -0.1)
    assert np.allclose(prod, want, atol=1e-14)
    ident = jet_mul(a, jet_inv(a))
    assert np.allclose(ident, jet_const(1.0), atol=1e-14)


def test_logdet_scalar_case():
    j = jet_from_exponential(3.0, 0.25, -0.5)[None, None, None]
    out = logdet_jets(j)[0]
    assert out[0, 0] == pytest.approx(np.log(3.0))
    assert out[1, 0] == pytest.approx(0.25)
    assert out[0, 1] == pytest.approx(-0.5)


def test_logdet_parity():
    # constant antidiagonal swap matrix: det = -1, log det = i pi
    m = np.zeros((1, 2, 2, 3, 3), dtype=complex)
    m[0, 0, 1, 0, 0] = 1.0
    m[0, 1, 0, 0, 0] = 1.0
    for impl in (logdet_jets, logdet_python):
        out = impl(m)[0]
        assert out[0, 0].real == pytest.approx(0.0, abs=1e-14)
        assert abs(out[0, 0].imag) == pytest.approx(np.pi, rel=1e-14)


def test_logdet_matches_slogdet(rng):
    m = random_jet_batch(rng)
    out = logdet_jets(m)
    for b in range(m.shape[0]):
        sign, logabs = np.linalg.slogdet(m[b, :, :, 0, 0])
        want = logabs + np.log(sign)
        got = out[b, 0, 0]
        # log det agrees modulo 2 pi i
        assert abs(np.exp(got - want) - 1.0) <= 1e-10


def test_logdet_derivative_coefficients_match_fd(rng):
    # analytic family M(x, t) with exponential entries; compare jet output
    n = 3
    c = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    d1 = rng.normal(size=(n, n))
    d2 = rng.normal(size=(n, n))
    c += 3 * np.eye(n)

    def mat(x, t):
        return c * np.exp(d1 * x + d2 * t)

    def ld(x, t):
        sign, logabs = np.linalg.slogdet(mat(x, t))
        return np.log(sign) + logabs

    jets = np.empty((1, n, n, 3, 3), dtype=complex)
    for i in range(n):
        for j in range(n):
            jets[0, i, j] = jet_from_exponential(c[i, j], d1[i, j], d2[i, j])
    out = logdet_jets(jets)[0]
    h = 1e-5
    fx = (ld(h, 0) - ld(-h, 0)) / (2 * h)
    ft = (ld(0, h) - ld(0, -h)) / (2 * h)
    fxt = (ld(h, h) - ld(h, -h) - ld(-h, h) + ld(-h, -h)) / (4 * h * h)
    assert out[1, 0] == pytest.approx(fx, rel=1e-8)
    assert out[0, 1] == pytest.approx(ft, rel=1e-8)
    assert out[1, 1] == pytest.approx(fxt, rel=1e-4)


def test_backends_agree(rng):
    if backend_name() != "compiled":
        pytest.skip("compiled extension not available")
    m = random_jet_batch(rng, batch=8, n=5)
    a = logdet_jets(m)
    b = logdet_python(m)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_nan_semantics():
    m = np.zeros((2, 2, 2, 3, 3), dtype=complex)
    # batch 0: singular constant part; batch 1: healthy
    m[0, 0, 0, 0, 0] = 0.0
    m[0, 1, 1, 0, 0] = 1.0
    m[1, 0, 0, 0, 0] = 2.0
    m[1, 1, 1, 0, 0] = 3.0
    for impl in (logdet_jets, logdet_python):
        out = impl(m)
        assert np.all(np.isnan(out[0].real))
        assert np.all(np.isfinite(out[1]))
    m[1, 0, 0, 0, 0] = np.nan
    for impl in (logdet_jets, logdet_python):
        assert np.all(np.isnan(impl(m)[1].real))


def test_input_shape_guard():
    with pytest.raises(ValueError):
        logdet_python(np.zeros((2, 3, 4, 3, 3), dtype=complex))


def test_no_ext_env_forces_python():
    code = (
        "from tzsoliton.core import backend_name; print(backend_name())"
    )
    env = dict(os.environ, TZSOLITON_NO_EXT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_name_valid():
    assert backend_name() in ("compiled", "python")
    assert hasattr(core, "jets")
