"""Pure-numpy fallback for the exponential sweep kernel.

Vectorised over tangential frequencies, sequential over normal nodes.
Must stay numerically interchangeable with ``_kernels.pyx``.
"""
import math

import numpy as np

_SERIES_CUT = 0.5
_NTERMS = 18
# _C[m, k] = 1 / (k! (k + m + 1))
_C = np.array([[1.0 / (math.factorial(k) * (k + m + 1)) for k in range(_NTERMS)]
               for m in range(3)])


def phi_weights(z):
    """Moments ``E_k = int_0^1 s^(k-1) exp(-z s) ds`` for k = 1, 2, 3."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SERIES_CUT
    zs = np.where(small, 1.0, z)
    ez = np.exp(-zs)
    e1 = (1.0 - ez) / zs
    e2 = (1.0 - (1.0 + zs) * ez) / zs**2
    e3 = (2.0 - (2.0 + 2.0 * zs + zs * zs) * ez) / zs**3
    if np.any(small):
        mz = -z
        s1 = np.full_like(z, _C[0, -1])
        s2 = np.full_like(z, _C[1, -1])
        s3 = np.full_like(z, _C[2, -1])
        for k in range(_NTERMS - 2, -1, -1):
            s1 = s1 * mz + _C[0, k]
            s2 = s2 * mz + _C[1, k]
            s3 = s3 * mz + _C[2, k]
        e1 = np.where(small, s1, e1)
        e2 = np.where(small, s2, e2)
        e3 = np.where(small, s3, e3)
    return e1, e2, e3


def exp_sweeps(kplus, kminus, x, f, bub):
    """Forward/backward exponential convolutions of piecewise-quadratic data.

    Parameters
    ----------
    kplus, kminus : (K,) complex
        Decay rates; real parts must be positive.
    x : (M,) float
        Increasing nodes. Data is taken as zero outside ``[x[0], x[-1]]``.
    f : (K, M) complex
        Nodal values.
    bub : (K, M-1) complex
        Bubble coefficients: on element i the data is the linear interpolant
        plus ``bub[:, i] * t (1 - t)``, t the local coordinate.

    Returns
    -------
    F, B : (K, M) complex
        ``F[:, i] = int_{x_0}^{x_i} exp(-kplus (x_i - y)) f(y) dy`` and
        ``B[:, i] = int_{x_i}^{x_end} exp(-kminus (y - x_i)) f(y) dy``.
    """
    kplus = np.ascontiguousarray(kplus, dtype=complex)
    kminus = np.ascontiguousarray(kminus, dtype=complex)
    x = np.ascontiguousarray(x, dtype=float)
    f = np.ascontiguousarray(f, dtype=complex)
    bub = np.ascontiguousarray(bub, dtype=complex)
    K, M = f.shape
    F = np.zeros((K, M), dtype=complex)
    B = np.zeros((K, M), dtype=complex)
    if M < 2:
        return F, B
    h = np.diff(x)
    zp = kplus[:, None] * h[None, :]
    zm = kminus[:, None] * h[None, :]
    e1p, e2p, e3p = phi_weights(zp)
    e1m, e2m, e3m = phi_weights(zm)
    decp = np.exp(-zp)
    decm = np.exp(-zm)
    for i in range(M - 1):
        F[:, i + 1] = decp[:, i] * F[:, i] + h[i] * (
            f[:, i + 1] * (e1p[:, i] - e2p[:, i]) + f[:, i] * e2p[:, i]
            + bub[:, i] * (e2p[:, i] - e3p[:, i]))
    for i in range(M - 2, -1, -1):
        B[:, i] = decm[:, i] * B[:, i + 1] + h[i] * (
            f[:, i] * (e1m[:, i] - e2m[:, i]) + f[:, i + 1] * e2m[:, i]
            + bub[:, i] * (e2m[:, i] - e3m[:, i]))
    return F, B
