import numpy as np
import pytest
from hypothesis import given, strategies as st

from hinfbvp import oracle
from hinfbvp.calculus import (HInftyFunction, apply_function, apply_functions, bound_probe,
                              build_contour, exponential_function, family_member, hstar_family,
                              multiplicativity_defect, resolvent_function, sector_mesh,
                              tail_fraction)
from hinfbvp.degenerate import degenerate_sin2_bc, dirichlet_bc, neumann_bc, robin_bc
from hinfbvp.errors import SpecError
from hinfbvp.grid import Grid, random_smooth_field
from hinfbvp.resolvent import ResolventEngine, SpectralPoint, sector_scan
from hinfbvp.roots import laplacian

SPEC = laplacian(2, 1.0)
G = Grid(2 * np.pi, 16, 8.0, 256)
BCS = [dirichlet_bc(), neumann_bc(), robin_bc(1, 1), degenerate_sin2_bc()]


@pytest.fixture(scope="module")
def field():
    xt, xn = G.mesh()
    return G.field((1 + 0.3 * np.cos(xt)) * np.exp(-(xn - 2.5) ** 2))


@pytest.fixture(scope="module")
def q128():
    return build_contour(3 * np.pi / 4, N=128)


@given(theta=st.floats(0.3, 2.8), N=st.integers(32, 600))
def test_contour_validation_integral(theta, N):
    q = build_contour(theta, N=N)
    assert q.validation_error() <= 1e-8


def test_refinement_is_tighter():
    q = build_contour(3 * np.pi / 4, N=256)
    assert q.refine().N == 512
    assert q.refine().validation_error() <= 1e-10


@pytest.mark.parametrize("args", [(0.0,), (np.pi,), (1.0, 1.0, 0.5), (1.0, 1e-3, 1e3, 8)])
def test_contour_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        build_contour(*args)


def test_zero_function_gives_zero(field, q128):
    eng = ResolventEngine(SPEC, neumann_bc(), G)
    zero = HInftyFunction(lambda z: 0 * z, 0.5, 0.0)
    assert np.all(apply_function(zero, q128, field, eng).values == 0)


def test_family_member_values():
    f = family_member(0.5, 1.0)
    assert f(1.0) == pytest.approx(0.5)
    assert f.sup_norm == pytest.approx((2 + 2 * np.cos(3 * np.pi / 4)) ** -0.5)
    assert 1 < f.bound_constant < np.inf


@given(eps=st.floats(0.1, 0.9), s=st.floats(1e-2, 1e2))
def test_family_member_scale_invariance(eps, s):
    f, g = family_member(eps, s), family_member(eps, 1.0)
    mesh = sector_mesh(3 * np.pi / 4, 64, 1e-3, 1e3)
    assert np.allclose(f(mesh / s), g(mesh), rtol=1e-12, atol=0)


def test_family_sup_attained_on_boundary_rays():
    f = family_member(0.75, 1.0)
    r = np.geomspace(1e-4, 1e4, 20001)
    on_ray = np.abs(f(r * np.exp(3j * np.pi / 4))).max()
    assert on_ray == pytest.approx(f.sup_norm, rel=1e-6)


def test_family_arguments():
    with pytest.raises(ValueError):
        hstar_family(0.5, 0)
    with pytest.raises(ValueError):
        family_member(1.0, 1.0)
    assert len(hstar_family(0.25, 20)) == 20


def test_validate_rejects_small_constant():
    f = family_member(0.5, 1.0)
    with pytest.raises(SpecError):
        f.validate(sector_mesh(f.sector), C=1.0)


@pytest.mark.parametrize("b", BCS, ids=lambda b: b.name)
def test_resolvent_function_reproduces_resolvent(b, field, q128):
    eng = ResolventEngine(SPEC, b, G)
    got = apply_function(resolvent_function(-1.0), q128, field, eng)
    ref = eng.apply(SpectralPoint.from_lambda(-1.0), field)
    assert (got - ref).norm() <= 1e-6 * ref.norm()


@pytest.mark.parametrize("b", [neumann_bc(), degenerate_sin2_bc()], ids=lambda b: b.name)
def test_rational_function_matches_matrix_function(b, field, q128):
    eng = ResolventEngine(SPEC, b, G)
    f = HInftyFunction(lambda z: z / (1 + z) ** 2, 1.0, 1.0)
    got = apply_function(f, q128, field, eng)
    ref = oracle.MatrixFunction(oracle.assemble(SPEC, b, G))(lambda z: z / (1 + z) ** 2, field)
    assert (got - ref).norm() <= 0.01 * ref.norm()


def test_exponential_matches_time_stepping(field):
    b = robin_bc(1, 1)
    eng = ResolventEngine(SPEC, b, G)
    got = apply_function(exponential_function(0.1), build_contour(np.pi / 4, N=128), field, eng)
    ref = oracle.semigroup_step(oracle.assemble(SPEC, b, G), 0.1, field, 200)
    assert (got - ref).norm() <= 0.02 * ref.norm()
    with pytest.raises(ValueError):
        exponential_function(0.1, np.pi / 2)


def test_multiplicativity(field, q128):
    eng = ResolventEngine(SPEC, neumann_bc(), G)
    f, g = family_member(0.5, 1.0), family_member(0.5, 0.1)
    assert multiplicativity_defect(f, g, q128, field, eng) <= 0.02


def test_tail_fraction_small(field):
    eng = ResolventEngine(SPEC, neumann_bc(), G)
    q = build_contour(3 * np.pi / 4, N=256)
    assert tail_fraction(family_member(0.5, 1.0), q, field, eng) <= 1e-4


def test_conjugate_lower_ray(field, q128):
    eng = ResolventEngine(SPEC, degenerate_sin2_bc(), G)
    real_field = field.values.real
    f = family_member(0.5, 1.0)
    full = apply_functions([f], q128, real_field, eng)[0]
    half = apply_functions([f], q128, real_field, eng, conjugate_lower=True)[0]
    assert np.abs(full.imag).max() <= 1e-10 * np.abs(full).max()
    assert np.allclose(full, half, rtol=0, atol=1e-12 * np.abs(full).max())


def test_single_resolvent_probe_matches_sector_scan():
    g = Grid(2 * np.pi, 16, 8.0, 128)
    eng = ResolventEngine(SPEC, neumann_bc(), g)
    sp = SpectralPoint(3 * np.pi / 4, 2.0)
    lam0 = sp.lam
    # the scan draws its fields first, so the same seed gives the same fields
    fields = np.stack([random_smooth_field(g, np.random.default_rng(7)).values])
    rows = sector_scan(eng, [sp.theta], [sp.mu], 1, np.random.default_rng(7), power_iters=0)
    f = HInftyFunction(lambda z: lam0 / (z - lam0), 0.0, 1.0, "lam R(lam)")
    got = bound_probe([f], build_contour(np.pi / 8, N=256), eng, fields=fields, tol=0.05).C_est
    assert got == pytest.approx(rows[0]["norm_est"], rel=0.05)


def test_empty_family_rejected(q128):
    eng = ResolventEngine(SPEC, neumann_bc(), G)
    with pytest.raises(ValueError):
        bound_probe([], q128, eng, rng=np.random.default_rng(0))
