import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hinfbvp import calculus, cli
from hinfbvp.config import RunConfig, load, loads, parse_list, parse_real
from hinfbvp.errors import ConfigError, InstabilityError
from hinfbvp.grid import Grid, gaussian_field, read_field, write_field

SMALL = """\
[operator]
shift = 1.0
[boundary]
preset = {preset}
[grid]
Mt = 8
Mn = 64
[contour]
nodes = 32
[probe]
seed = 11
trials = 1
power_iters = 1
mus = geom(1, 100, 3)
family_count = 2
eps = 0.5
lattice_J = 5
parametrix_N = 2
mu_max = 16, 32
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def small(tmp_path, preset="neumann", extra=""):
    return write_cfg(tmp_path, SMALL.format(preset=preset) + extra)


def test_parse_real_accepts_pi_multiples():
    assert parse_real("3pi/4") == pytest.approx(3 * math.pi / 4)
    assert parse_real("-pi") == -math.pi
    assert parse_real("2*pi") == 2 * math.pi
    assert parse_list("geom(1, 100, 3)") == pytest.approx([1.0, 10.0, 100.0])


reals = st.floats(-1e6, 1e6, allow_nan=False)


@given(shift=st.floats(0.01, 100), Mt=st.integers(1, 512), theta=st.floats(0.1, 3.0),
       mus=st.lists(st.floats(0.01, 1e3), min_size=1, max_size=5),
       names=st.lists(st.sampled_from(sorted(cli.COMMANDS)), min_size=1, max_size=3),
       seed=st.integers(0, 2**31), lam=st.complex_numbers(max_magnitude=1e3))
def test_dump_parse_roundtrip(shift, Mt, theta, mus, names, seed, lam):
    cfg = RunConfig()
    cfg.set("operator", "shift", shift)
    cfg.set("operator", "a", [[1.0, 0.0], [0.0, 2.5]])
    cfg.set("grid", "Mt", Mt)
    cfg.set("contour", "theta", theta)
    cfg.set("probe", "mus", mus)
    cfg.set("probe", "name", names)
    cfg.set("probe", "seed", seed)
    cfg.set("probe", "lambda", lam)
    assert loads(cfg.dumps()) == cfg


def test_diagnostics_name_lines():
    text = "[grid]\nMt = 8\nbogus = 1\n[nope]\nx = 1\n[contour]\nnodes = many\n"
    with pytest.raises(ConfigError) as exc:
        loads(text, "c.cfg")
    msg = str(exc.value)
    assert "c.cfg:3: unknown key 'bogus'" in msg
    assert "c.cfg:4: unknown section [nope]" in msg
    assert "c.cfg:7: bad value for 'nodes'" in msg


def test_comments_and_duplicates():
    cfg = loads("# c\n; c\n[grid]\nMt = 8  # trailing\n")
    assert cfg.get("grid", "Mt") == 8
    with pytest.raises(ConfigError, match="duplicate"):
        loads("[grid]\nMt = 8\nMt = 9\n")
    with pytest.raises(ConfigError, match="must be one of"):
        loads("[boundary]\npreset = mixed\n")


def test_missing_seed_exit_2(tmp_path, capsys):
    p = write_cfg(tmp_path, "[grid]\nMt = 8\nMn = 32\n")
    assert cli.main(["sector-scan", "--config", p, "--out", str(tmp_path)]) == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_key_exit_2(tmp_path):
    p = write_cfg(tmp_path, "[grid]\nwidth = 3\n")
    assert cli.main(["hilbert-probe", "--config", p]) == 2


def test_non_elliptic_operator_exit_3(tmp_path):
    p = small(tmp_path)
    text = open(p).read().replace("shift = 1.0", "shift = 1.0\na = 1 0, 0 -1")
    p = write_cfg(tmp_path, text, "bad.cfg")
    assert cli.main(["hilbert-probe", "--config", p, "--out", str(tmp_path / "o")]) == 3


def test_instability_exit_4(tmp_path, monkeypatch):
    def unstable(*a, **k):
        raise InstabilityError("moved", diagnostics={"C_est": 1.0})
    monkeypatch.setattr(calculus, "bound_probe", unstable)
    out = tmp_path / "o"
    assert cli.main(["hinfty", "--config", small(tmp_path), "--out", str(out)]) == 4
    assert "error" in (out / "hinfty_summary.json").read_text()


def test_sector_scan_header(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["sector-scan", "--config", small(tmp_path), "--out", str(out)]) == 0
    first = (out / "sector_scan.csv").read_bytes().split(b"\n")[0]
    assert first == b"theta,mu,lambda_re,lambda_im,norm_est"


def test_empty_family_writes_header_only(tmp_path):
    p = small(tmp_path)
    text = open(p).read().replace("family_count = 2", "family_count = 0")
    out = tmp_path / "o"
    assert cli.main(["hinfty", "--config", write_cfg(tmp_path, text, "e.cfg"),
                     "--out", str(out)]) == 0
    assert (out / "hinfty.csv").read_text() == "family_member,eps,sup_norm,ratio\n"


def test_zero_input_gives_zero_solution(tmp_path):
    g = Grid(2 * np.pi, 8, 8.0, 32)
    write_field(tmp_path / "zero.bin", g.zeros())
    p = small(tmp_path, extra=f"input = {tmp_path / 'zero.bin'}\n")
    out = tmp_path / "o"
    assert cli.main(["resolvent", "--config", p, "--out", str(out)]) == 0
    assert np.all(read_field(out / "solution.bin").values == 0)


def test_resolvent_report(tmp_path):
    g = Grid(2 * np.pi, 16, 8.0, 128)
    write_field(tmp_path / "f.bin", gaussian_field(g))
    p = small(tmp_path, "robin", extra=f"input = {tmp_path / 'f.bin'}\n")
    out = tmp_path / "o"
    assert cli.main(["resolvent", "--config", p, "--out", str(out)]) == 0
    import json
    rep = json.loads((out / "resolvent_report.json").read_text())
    assert rep["fd_defect"] < 0.05


def test_run_probe_and_threads(tmp_path):
    p = small(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--probe", "decay-probe", "--config", p, "--out", str(a)]) == 0
    assert cli.main(["decay-probe", "--config", p, "--out", str(b), "--threads", "3"]) == 0
    assert (a / "decay.csv").read_bytes() == (b / "decay.csv").read_bytes()
    assert cli.main(["run", "--probe", "nonsense", "--config", p]) == 2


@pytest.mark.parametrize("cmd", ["sector-scan", "hinfty", "parametrix-report", "hilbert-probe"])
def test_commands_deterministic(tmp_path, cmd):
    p = small(tmp_path, "degenerate-sin2")
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([cmd, "--config", p, "--out", str(a)]) == 0
    assert cli.main([cmd, "--config", p, "--out", str(b)]) == 0
    files = sorted(f.name for f in a.iterdir())
    assert files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.cfg")
