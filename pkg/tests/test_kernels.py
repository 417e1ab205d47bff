import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hinfbvp import kernels
from hinfbvp._kernels_py import phi_weights

BACKENDS = kernels.available_backends()


def _inputs(seed, K, M, quadratic=True):
    rng = np.random.default_rng(seed)
    kp = 0.05 + 4 * rng.random(K) + 2j * rng.standard_normal(K)
    km = 0.05 + 4 * rng.random(K) + 2j * rng.standard_normal(K)
    x = np.sort(np.concatenate([[0.0], 5 * rng.random(M - 1)]))
    f = rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))
    bub = kernels.bubble_coefficients(x, f) if quadratic else np.zeros((K, M - 1), complex)
    return kp, km, x, f, bub


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
@given(seed=st.integers(0, 2**31), K=st.integers(1, 6), M=st.integers(2, 40))
def test_backends_agree(seed, K, M):
    args = _inputs(seed, K, M)
    Fp, Bp = BACKENDS["python"](*args)
    Fc, Bc = BACKENDS["compiled"](*args)
    scale = 1 + np.abs(Fp).max() + np.abs(Bp).max()
    assert np.abs(Fp - Fc).max() <= 1e-12 * scale
    assert np.abs(Bp - Bc).max() <= 1e-12 * scale


def test_quadratic_data_integrated_exactly():
    k = np.array([0.7 + 0.3j, 2.0])
    x = np.linspace(0.0, 3.0, 31)
    f = np.tile(x**2, (2, 1)).astype(complex)
    F, B = kernels.exp_sweeps(k, k, x, f)
    # int_0^X e^{-k(X-y)} y^2 dy and int_X^L e^{-k(y-X)} y^2 dy in closed form
    kk = k[:, None]
    X = x[None, :]
    L = x[-1]
    prim = lambda y: np.exp(kk * y) * (y**2 / kk - 2 * y / kk**2 + 2 / kk**3)
    Fex = np.exp(-kk * X) * (prim(X) - prim(0.0))
    primb = lambda y: -np.exp(-kk * y) * (y**2 / kk + 2 * y / kk**2 + 2 / kk**3)
    Bex = np.exp(kk * X) * (primb(L) - primb(X))
    assert np.abs(F - Fex).max() < 1e-12
    assert np.abs(B - Bex).max() < 1e-12


def test_zero_data_gives_zero():
    F, B = kernels.exp_sweeps(np.ones(3), np.ones(3), np.linspace(0, 1, 9), np.zeros((3, 9)))
    assert not F.any() and not B.any()


@given(z=st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False))
def test_moment_series_matches_quadrature(z):
    from scipy.integrate import quad
    e = phi_weights(np.array([z]))
    for m, ek in enumerate(e):
        re = quad(lambda s: (s**m * np.exp(-z * s)).real, 0, 1, epsabs=1e-15)[0]
        im = quad(lambda s: (s**m * np.exp(-z * s)).imag, 0, 1, epsabs=1e-15)[0]
        assert abs(ek[0] - (re + 1j * im)) < 2e-15


def test_pure_python_switch():
    env = dict(os.environ, HINFBVP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import hinfbvp.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_fourth_order_convergence():
    k = np.array([1.3 + 0.4j])
    errs = []
    for M in (41, 81, 161):
        x = np.linspace(0.0, 4.0, M)
        f = np.sin(3 * x)[None, :].astype(complex)
        F, _ = kernels.exp_sweeps(k, k, x, f)
        fine = np.linspace(0.0, 4.0, 8 * (M - 1) + 1)
        Ff, _ = kernels.exp_sweeps(k, k, fine, np.sin(3 * fine)[None, :].astype(complex))
        errs.append(np.abs(F[0, -1] - Ff[0, -1]))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates.min() > 3.5
