"""Truncated bivariate Taylor arithmetic (order-(2,2) jets).

A jet stores the nine coefficients c[i, j] = d_x^i d_t^j f / (i! j!) of a
function of (x, t) in the trailing (3, 3) axes of an ndarray; any leading
axes broadcast.  Products are truncated 2-D convolutions; log and inverse
are power series in the zero-constant part, exact through total degree 4,
which is all the (2, 2) box can hold.

These jets carry the exact derivative planes of log det through the LU
factorization in the backend kernels: only the (0,0) coefficient is touched
by constant rescalings, pivot-swap signs, or log branches, so the
derivative planes coming out are branch-free.
"""
from __future__ import annotations

import numpy as np

JET_SHAPE = (3, 3)


def jet_zeros(shape=()) -> np.ndarray:
    return np.zeros(tuple(shape) + JET_SHAPE, dtype=complex)


def jet_const(value, shape=()) -> np.ndarray:
    out = jet_zeros(shape)
    out[..., 0, 0] = value
    return out


def jet_from_exponential(coef, d1, d2) -> np.ndarray:
    """Jet of f = value * exp(d1*(x-x0) + d2*(t-t0)) given value = f(x0, t0).

    coef is the already-evaluated value at the expansion point; d1, d2 are
    the exponent slopes.  All inputs broadcast.
    """
    coef = np.asarray(coef, dtype=complex)
    d1 = np.broadcast_to(np.asarray(d1, dtype=complex), coef.shape)
    d2 = np.broadcast_to(np.asarray(d2, dtype=complex), coef.shape)
    out = np.empty(coef.shape + JET_SHAPE, dtype=complex)
    p1 = np.stack([np.ones_like(d1), d1, d1 * d1 * 0.5], axis=-1)
    p2 = np.stack([np.ones_like(d2), d2, d2 * d2 * 0.5], axis=-1)
    out[...] = coef[..., None, None] * p1[..., :, None] * p2[..., None, :]
    return out


def jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product: out[i,j] = sum_{p<=i, q<=j} a[p,q] b[i-p, j-q]."""
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for p in range(i + 1):
                for q in range(j + 1):
                    acc = acc + a[..., p, q] * b[..., i - p, j - q]
            out[..., i, j] = acc
    return out


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Constant part c and the normalized zero-constant part w = a/c - 1."""
    c = a[..., 0, 0]
    w = a / c[..., None, None]
    w[..., 0, 0] = 0.0
    return c, w


def jet_log(a: np.ndarray) -> np.ndarray:
    """Principal-branch log jet; requires a nonzero constant part.

    log(c(1+w)) = log c + w - w^2/2 + w^3/3 - w^4/4, exact at this
    truncation order because w starts at total degree 1.
    """
    c, w = _split(a)
    w2 = jet_mul(w, w)
    w3 = jet_mul(w2, w)
    w4 = jet_mul(w3, w)
    out = w - w2 / 2.0 + w3 / 3.0 - w4 / 4.0
    out[..., 0, 0] = np.log(c)
    return out


def jet_inv(a: np.ndarray) -> np.ndarray:
    """Reciprocal jet; requires a nonzero constant part."""
    c, w = _split(a)
    w2 = jet_mul(w, w)
    w3 = jet_mul(w2, w)
    w4 = jet_mul(w3, w)
    out = -w + w2 - w3 + w4
    out[..., 0, 0] = 1.0
    return out / c[..., None, None]


def jet_derivatives(a: np.ndarray) -> dict:
    """Named derivatives from jet coefficients (coefficient times i! j!)."""
    return {
        "f": a[..., 0, 0],
        "f_x": a[..., 1, 0],
        "f_t": a[..., 0, 1],
        "f_xt": a[..., 1, 1],
        "f_xxt": 2.0 * a[..., 2, 1],
        "f_xtt": 2.0 * a[..., 1, 2],
        "f_xxtt": 4.0 * a[..., 2, 2],
    }
