import numpy as np
import pytest
from hypothesis import given, strategies as st

from hinfbvp.grid import Grid, gaussian_field, random_smooth_field, read_field, write_field


@given(Mt=st.integers(1, 9), Mn=st.integers(2, 9), seed=st.integers(0, 2**32 - 1),
       Lt=st.floats(0.1, 10), Ln=st.floats(0.1, 10))
def test_field_roundtrip(tmp_path_factory, Mt, Mn, seed, Lt, Ln):
    g = Grid(Lt, Mt, Ln, Mn)
    rng = np.random.default_rng(seed)
    v = (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)).astype(np.complex64)
    path = tmp_path_factory.mktemp("io") / "f.bin"
    write_field(path, g.field(v))
    back = read_field(path)
    assert back.grid == g
    assert np.array_equal(back.values, v.astype(complex))


def test_bad_magic(tmp_path):
    g = Grid(1.0, 2, 1.0, 2)
    p = tmp_path / "f.bin"
    write_field(p, g.zeros())
    raw = bytearray(p.read_bytes())
    raw[:4] = b"XXXX"
    p.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="magic"):
        read_field(p)


def test_truncated_file(tmp_path):
    g = Grid(1.0, 4, 1.0, 4)
    p = tmp_path / "f.bin"
    write_field(p, g.zeros())
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError, match="expected 16"):
        read_field(p)
    p.write_bytes(b"short")
    with pytest.raises(ValueError, match="truncated"):
        read_field(p)


def test_trapezoid_norm_of_constant():
    g = Grid(2.0, 8, 3.0, 30)
    # the stored nodes cover [0, Ln) with half weight at 0; the wall value is 0
    f = g.field(np.ones(g.shape))
    assert f.norm() ** 2 == pytest.approx(2.0 * (3.0 - 0.5 * g.hn))
    assert f.norm(np.inf) == 1.0


def test_random_field_vanishes_near_wall(rng):
    g = Grid(2 * np.pi, 16, 8.0, 64)
    f = random_smooth_field(g, rng)
    assert np.abs(f.values[:, -1]).max() < 0.2 * np.abs(f.values).max()


def test_bad_grid():
    with pytest.raises(ValueError):
        Grid(1.0, 0, 1.0, 4)


def test_gaussian_centered():
    g = Grid(2 * np.pi, 32, 8.0, 64)
    f = gaussian_field(g)
    j, i = np.unravel_index(np.argmax(np.abs(f.values)), g.shape)
    assert g.xt[j] == pytest.approx(np.pi) and g.xn[i] == pytest.approx(2.0)
