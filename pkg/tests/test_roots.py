import numpy as np
import pytest
from hypothesis import given, strategies as st

from hinfbvp.errors import EllipticityError, SpecError
from hinfbvp.roots import (EllipticOperatorSpec, boundary_quadratic, ellipticity_margin,
                           kappa_at, kappa_roots, kappa_symbol, laplacian, validate_theta)
from hinfbvp.symbols import SymbolLattice

thetas = st.floats(-np.pi + 0.02, np.pi - 0.02)


def test_laplacian_roots_exact():
    kp = kappa_at(laplacian(2), 0.0, np.array([3.0]), 4.0, 0.0)
    assert abs(kp.kplus[0] - 5) < 1e-12 and abs(kp.kminus[0] - 5) < 1e-12


def test_rotated_spectral_parameter():
    kp = kappa_at(laplacian(2), 0.0, np.array([1.0]), 1.0, np.pi / 2)
    assert abs(kp.kplus[0] - np.sqrt(1 + 1j)) < 1e-14


@given(xi=st.floats(-1e3, 1e3), zeta=st.floats(0, 1e3), theta=thetas,
       a12=st.floats(-0.4, 0.4), b=st.floats(-2, 2))
def test_roots_solve_quadratic(xi, zeta, theta, a12, b):
    spec = EllipticOperatorSpec(2, a=np.array([[1.0, a12], [a12, 1.5]]), b=np.array([0.0, b]),
                                shift=1.0)
    quad = boundary_quadratic(spec, 0.0, np.array([xi]), zeta, theta)
    kp = kappa_roots(quad, theta)
    assert np.all(kp.kplus.real > 0) and np.all(kp.kminus.real > 0)
    scale = np.abs(quad[0]) * abs(kp.kplus) ** 2 + np.abs(quad[2]) + 1
    assert np.all(kp.residuals(quad) <= 1e-12 * scale)


@given(xi=st.floats(-100, 100), zeta=st.floats(0, 100), theta=thetas)
def test_conjugate_ray_gives_conjugate_roots(xi, zeta, theta):
    spec = laplacian(2, 1.0)
    a = kappa_at(spec, 0.0, np.array([xi]), zeta, theta)
    b = kappa_at(spec, 0.0, np.array([xi]), zeta, -theta)
    assert np.allclose(a.kplus, np.conj(b.kplus), rtol=1e-12, atol=1e-12)


def test_theta_outside_sector_rejected():
    with pytest.raises(SpecError):
        validate_theta(np.pi)


def test_zero_symbol_is_not_elliptic():
    with pytest.raises(EllipticityError):
        kappa_at(laplacian(2, 0.0), 0.0, np.array([0.0]), 0.0, 0.0)


def test_nonsymmetric_matrix_rejected():
    spec = EllipticOperatorSpec(2, a=np.array([[1.0, 0.3], [0.0, 1.0]]))
    with pytest.raises(SpecError):
        spec.validate(np.zeros((1, 2)))


def test_margin_positive_and_symbol_order_one():
    lat = SymbolLattice([0.0], J=4)
    assert ellipticity_margin(laplacian(2), 0.5, lat) > 0
    k = kappa_symbol(laplacian(2), 0.0)
    assert k.order == 1
    assert abs(k(0.0, 3.0, 4.0) - 5) < 1e-12
