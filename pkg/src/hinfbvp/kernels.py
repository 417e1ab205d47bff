"""Backend selection for the hot per-frequency sweep.

The compiled extension is used when it imports; ``HINFBVP_PURE_PYTHON=1``
forces the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("HINFBVP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"


def bubble_coefficients(x, f):
    """Per-element bubble weights from nodal second differences.

    On element i the quadratic with curvature ``c_i`` (mean of the second
    differences at its end nodes) differs from the chord by
    ``-c_i h_i^2 / 2 * t (1 - t)``.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f)
    M = x.size
    if M < 3:
        return np.zeros(f.shape[:-1] + (max(M - 1, 0),), dtype=complex)
    h = np.diff(x)
    slope = np.diff(f, axis=-1) / h
    d2 = np.empty(f.shape, dtype=complex)
    d2[..., 1:-1] = 2.0 * np.diff(slope, axis=-1) / (h[1:] + h[:-1])
    d2[..., 0] = d2[..., 1]
    d2[..., -1] = d2[..., -2]
    c = 0.5 * (d2[..., 1:] + d2[..., :-1])
    return -0.5 * c * h**2


def exp_sweeps(kplus, kminus, x, f, quadratic=True):
    """Exponential sweeps; see :func:`hinfbvp._kernels_py.exp_sweeps`."""
    f = np.asarray(f, dtype=complex)
    if quadratic:
        bub = bubble_coefficients(x, f)
    else:
        bub = np.zeros((f.shape[0], max(f.shape[1] - 1, 0)), dtype=complex)
    return _impl.exp_sweeps(kplus, kminus, x, f, bub)


def available_backends():
    """Raw kernels by name (signature ``(kplus, kminus, x, f, bub)``)."""
    out = {"python": _kernels_py.exp_sweeps}
    try:
        from . import _kernels as _compiled
        out["compiled"] = _compiled.exp_sweeps
    except ImportError:
        pass
    return out
