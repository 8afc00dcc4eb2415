"""Pure numpy implementation of the batched jet log-determinant kernel.

Semantics match the compiled extension exactly: partial pivoting on the
magnitude of the constant coefficient, NaN fill for structurally singular
or non-finite inputs, and an i*pi*parity correction on the (0,0)
coefficient so the constant part is a genuine log det and not just a log
of the pivot product.
"""
from __future__ import annotations

import numpy as np

from .jets import jet_inv, jet_log, jet_mul


def _logdet_one(a: np.ndarray, n: int) -> np.ndarray:
    acc = np.zeros((3, 3), dtype=complex)
    swaps = 0
    for k in range(n):
        col = np.abs(a[k:, k, 0, 0])
        if not np.all(np.isfinite(col)):
            return np.full((3, 3), np.nan + 1j * np.nan)
        piv = k + int(np.argmax(col))
        if a[piv, k, 0, 0] == 0:
            return np.full((3, 3), np.nan + 1j * np.nan)
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            swaps += 1
        acc += jet_log(a[k, k])
        if k + 1 < n:
            inv = jet_inv(a[k, k])
            factors = jet_mul(a[k + 1 :, k], inv[None])
            a[k + 1 :, k + 1 :] -= jet_mul(factors[:, None], a[k, k + 1 :][None])
    acc[0, 0] += 1j * np.pi * (swaps % 2)
    return acc


def logdet_jets(mats: np.ndarray) -> np.ndarray:
    """Jet of log det for a batch of jet matrices.

    mats: (B, n, n, 3, 3) complex; a working copy is factorized in place.
    Returns (B, 3, 3) jets of log det; rows go NaN where the constant part
    of the matrix is exactly singular or non-finite.
    """
    m = np.array(mats, dtype=complex, copy=True)
    if m.ndim != 5 or m.shape[1] != m.shape[2] or m.shape[3:] != (3, 3):
        raise ValueError("expected a (B, n, n, 3, 3) jet-matrix batch")
    B, n = m.shape[0], m.shape[1]
    out = np.empty((B, 3, 3), dtype=complex)
    for b in range(B):
        out[b] = _logdet_one(m[b], n)
    return out
