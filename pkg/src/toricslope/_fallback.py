"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import numpy as np

LEAF = 32


def pairwise_sum(a: np.ndarray) -> float:
    """Deterministic tree reduction: sequential leaves of 32, then pairwise."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    n = a.shape[0]
    if n == 0:
        return 0.0
    nleaf = -(-n // LEAF)
    m = 1
    while m < nleaf:
        m *= 2
    buf = np.zeros(m * LEAF)
    buf[:n] = a
    leaves = buf.reshape(m, LEAF)
    acc = leaves[:, 0].copy()
    for j in range(1, LEAF):
        acc = acc + leaves[:, j]
    while acc.shape[0] > 1:
        acc = acc[0::2] + acc[1::2]
    return float(acc[0])


def fd_d2_lastaxis(f: np.ndarray, h: float) -> np.ndarray:
    f = np.ascontiguousarray(f, dtype=np.float64)
    out = np.empty_like(f)
    ih2 = 1.0 / (h * h)
    c12 = 1.0 / (12.0 * h * h)
    out[:, 0] = (2.0 * f[:, 0] - 5.0 * f[:, 1] + 4.0 * f[:, 2] - f[:, 3]) * ih2
    out[:, 1] = (f[:, 0] - 2.0 * f[:, 1] + f[:, 2]) * ih2
    out[:, 2:-2] = (
        -f[:, :-4] + 16.0 * f[:, 1:-3] - 30.0 * f[:, 2:-2] + 16.0 * f[:, 3:-1] - f[:, 4:]
    ) * c12
    out[:, -2] = (f[:, -3] - 2.0 * f[:, -2] + f[:, -1]) * ih2
    out[:, -1] = (2.0 * f[:, -1] - 5.0 * f[:, -2] + 4.0 * f[:, -3] - f[:, -4]) * ih2
    return out


def fd_d1_lastaxis(f: np.ndarray, h: float) -> np.ndarray:
    f = np.ascontiguousarray(f, dtype=np.float64)
    out = np.empty_like(f)
    i2h = 1.0 / (2.0 * h)
    c12 = 1.0 / (12.0 * h)
    out[:, 0] = (-3.0 * f[:, 0] + 4.0 * f[:, 1] - f[:, 2]) * i2h
    out[:, 1] = (f[:, 2] - f[:, 0]) * i2h
    out[:, 2:-2] = (f[:, :-4] - 8.0 * f[:, 1:-3] + 8.0 * f[:, 3:-1] - f[:, 4:]) * c12
    out[:, -2] = (f[:, -1] - f[:, -3]) * i2h
    out[:, -1] = (3.0 * f[:, -1] - 4.0 * f[:, -2] + f[:, -3]) * i2h
    return out


def mixed_det2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 0.5 * (
        a[:, 0, 0] * b[:, 1, 1]
        + a[:, 1, 1] * b[:, 0, 0]
        - a[:, 0, 1] * b[:, 1, 0]
        - a[:, 1, 0] * b[:, 0, 1]
    )


def legendre_max(mu: np.ndarray, x: np.ndarray, p: np.ndarray, chunk: int = 256):
    m = mu.shape[0]
    val = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    for s in range(0, m, chunk):
        mb = mu[s : s + chunk]
        block = np.broadcast_to(-p[None, :], (mb.shape[0], p.shape[0])).copy()
        for k in range(mu.shape[1]):
            block = block + mb[:, k : k + 1] * x[None, :, k]
        arg[s : s + chunk] = np.argmax(block, axis=1)
        val[s : s + chunk] = block[np.arange(block.shape[0]), arg[s : s + chunk]]
    return val, arg
