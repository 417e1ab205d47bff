import numpy as np
import pytest
from hypothesis import given, strategies as st

from hinfbvp.errors import PreconditionError, SymbolEvaluationError
from hinfbvp.symbols import (SymbolLattice, TangentialSymbol, estimate_seminorm,
                             fd_derivative, fit_shell_slope, freeze_spectral_covariable,
                             hypoelliptic_parametrix, japanese, leibniz_truncate, shell_sups, smooth_cutoff)


def poly_symbol():
    # p = (1 + cos^2 x) xi^2 + zeta^2 + 2
    def f(x, xi, z):
        return (1 + np.cos(x) ** 2) * xi**2 + z**2 + 2.0
    return TangentialSymbol(f, 2.0, period=2 * np.pi, name="p")


def test_japanese_and_cutoff():
    assert japanese(3.0, 4.0) == pytest.approx(np.sqrt(26.0))
    r = np.array([0.5, 1.0, 1.5, 2.0, 3.0])
    c = smooth_cutoff(r, 1.0)
    assert c[0] == 0 and c[1] == 0 and c[3] == 1 and c[4] == 1 and 0 < c[2] < 1


@given(x=st.floats(0, 6), xi=st.floats(-50, 50), z=st.floats(0, 50))
def test_fd_derivatives_match_exact(x, xi, z):
    p = poly_symbol()
    dxi = fd_derivative(p.func, x, xi, z, axi=1)
    assert abs(dxi - 2 * (1 + np.cos(x) ** 2) * xi) <= 1e-6 * japanese(xi, z) ** 2
    dx2 = fd_derivative(p.func, x, xi, z, bx=2)
    assert abs(dx2 - (-2 * np.cos(2 * x)) * xi**2) <= 1e-4 * (1 + xi**2)


def test_nonfinite_symbol_raises():
    s = TangentialSymbol(lambda x, xi, z: 1.0 / xi, -1.0)
    with pytest.raises(SymbolEvaluationError) as exc:
        s(0.0, 0.0, 1.0)
    assert exc.value.point == (0.0, 0.0, 1.0)


def test_lattice_shells():
    lat = SymbolLattice([0.0, 1.0], R0=2.0, J=4, n_dirs=5)
    assert np.allclose(lat.radii, [2, 4, 8, 16])
    x, xi, z, js = lat.points()
    assert np.allclose(np.hypot(xi, z), lat.radii[js])
    assert (z >= -1e-12).all()
    fine = lat.refine()
    assert fine.J == 5 and fine.x_points.size == 3


@given(m=st.floats(-3, 3))
def test_slope_fit_recovers_power(m):
    lat = SymbolLattice([0.0], J=6)
    x, xi, z, _ = lat.points()
    sups = shell_sups(japanese(xi, z) ** m, lat)
    # <r> differs from r by O(r^-2) on the inner shells
    assert fit_shell_slope(lat.radii, sups) == pytest.approx(m, abs=0.01 + 0.01 * abs(m))


def test_slope_of_zero_is_minus_inf():
    assert fit_shell_slope([1, 2, 4], [0, 0, 0]) == float("-inf")


def test_seminorm_of_order_two_symbol_is_bounded():
    p = poly_symbol()
    lat = SymbolLattice(np.linspace(0, 2 * np.pi, 8, endpoint=False), J=5)
    assert estimate_seminorm(p, (0, 0), 0, lat) < 3.0
    assert estimate_seminorm(p, (2, 0), 0, lat) < 5.0


def test_composition_with_x_independent_right_factor_is_product():
    p = poly_symbol()
    q = TangentialSymbol(lambda x, xi, z: xi + 1j * z + 3, 1.0, x_independent=True)
    pq = leibniz_truncate(p, q, 3)
    assert np.allclose(pq(0.3, 2.0, 1.0), p(0.3, 2.0, 1.0) * q(0.3, 2.0, 1.0))


def test_freezing_spectral_covariable():
    p = poly_symbol()
    r = freeze_spectral_covariable(p, 2.0)
    assert r(0.1, 1.0, 99.0) == p(0.1, 1.0, 2.0)
    assert r.derivative(0.1, 1.0, 5.0, azeta=1) == 0


def test_parametrix_of_x_independent_symbol_is_inverse():
    s = TangentialSymbol(lambda x, xi, z: xi**2 + z**2 + 1.0, 2.0, x_independent=True)
    q = hypoelliptic_parametrix(s, N=2, R=1.0, n_grid=16)
    pts = (np.array([0.2, 1.1]), np.array([10.0, 40.0]), np.array([3.0, 0.0]))
    assert np.allclose(q(*pts), 1.0 / s(*pts), rtol=1e-12)


def test_parametrix_residual_decays_for_x_dependent_symbol():
    p = poly_symbol()
    lat = SymbolLattice(np.linspace(0, 2 * np.pi, 16, endpoint=False), J=7)
    q = hypoelliptic_parametrix(p, N=2, R=4.0, lattice=lat, n_grid=64)
    assert q.residual_slope(lat) < -1.5


def test_parametrix_needs_lower_bound():
    s = TangentialSymbol(lambda x, xi, z: np.sin(x) * (xi**2 + 1), 2.0, period=2 * np.pi)
    with pytest.raises(PreconditionError):
        hypoelliptic_parametrix(s, N=2, c=0.5, lattice=SymbolLattice(np.linspace(0, 3, 7)))
