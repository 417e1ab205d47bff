"""Run configuration: ``[section]`` headers and ``key = value`` lines.

Lines starting with ``#`` or ``;`` are comments, as is anything after
`` #`` inside a line. Every key is typed; unknown sections or keys
and malformed values raise :class:`ConfigError` naming the line. Rendering
with :meth:`RunConfig.dumps` and parsing again gives an equal config.
"""
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

_ANGLE = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")
_GEOM = re.compile(r"^\s*geom\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)\s*$")


def parse_real(text):
    """Float, or a multiple of pi such as ``3pi/4``, ``pi/2``, ``2*pi``."""
    m = _ANGLE.match(text)
    if m:
        num = m.group(1)
        k = 1.0 if num in ("", "+") else -1.0 if num == "-" else float(num)
        den = float(m.group(2)) if m.group(2) else 1.0
        return k * math.pi / den
    return float(text)


def parse_list(text):
    """Comma list of reals, or ``geom(a, b, n)`` for a geometric sweep."""
    m = _GEOM.match(text)
    if m:
        a, b, n = parse_real(m.group(1)), parse_real(m.group(2)), int(m.group(3))
        if n < 1 or a <= 0 or b <= 0:
            raise ValueError("geom needs positive ends and n >= 1")
        return [float(v) for v in np.geomspace(a, b, n)]
    return [parse_real(t) for t in text.split(",") if t.strip()]


def parse_words(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_matrix(text):
    """Rows separated by commas, entries by spaces: ``1 0, 0 1``."""
    return [[float(v) for v in r.split()] for r in text.split(",")]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return repr(v).strip("()")
    if isinstance(v, (list, tuple)):
        if v and isinstance(v[0], list):
            return ", ".join(" ".join(repr(float(x)) for x in r) for r in v)
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _shift(text):
    return "auto" if text.strip() == "auto" else float(text)


SCHEMA = {
    "operator": {"preset": str, "shift": _shift, "a": parse_matrix, "b": parse_list,
                 "c0": float},
    "boundary": {"preset": str, "robin_a": float, "robin_b": float},
    "grid": {"Lt": parse_real, "Mt": int, "Ln": float, "Mn": int, "mode": str},
    "contour": {"theta": parse_real, "mu_min": float, "mu_max": float, "nodes": int},
    "probe": {"name": parse_words, "seed": int, "trials": int, "thetas": parse_list,
              "mus": parse_list, "power_iters": int, "eps": parse_list,
              "family_count": int, "components": parse_words, "boundary_norm": str,
              "mu_max": parse_list, "lambda": complex, "input": str,
              "lattice_J": int, "parametrix_N": int},
}

DEFAULTS = {
    "operator": {"preset": "laplacian", "shift": 1.0},
    "boundary": {"preset": "dirichlet", "robin_a": 1.0, "robin_b": 1.0},
    "grid": {"Lt": 2 * math.pi, "Mt": 32, "Ln": 8.0, "Mn": 256, "mode": "exact"},
    "contour": {"theta": 3 * math.pi / 4, "mu_min": 1e-3, "mu_max": 1e3, "nodes": 512},
    "probe": {"trials": 4, "thetas": [math.pi / 2, 3 * math.pi / 4],
              "mus": [float(v) for v in np.geomspace(1.0, 100.0, 9)], "power_iters": 30,
              "eps": [0.25, 0.5, 0.75], "family_count": 20,
              "components": ["pseudo", "green", "poisson", "trace"],
              "boundary_norm": "besov", "mu_max": [64.0, 128.0], "lambda": -1 + 0j,
              "lattice_J": 7, "parametrix_N": 4},
}

CHOICES = {
    ("operator", "preset"): ("laplacian",),
    ("boundary", "preset"): ("dirichlet", "neumann", "robin", "degenerate-sin2"),
    ("grid", "mode"): ("exact", "frozen"),
    ("probe", "boundary_norm"): ("besov", "l2"),
}

RANDOM_PROBES = {"sector-scan", "hinfty"}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)   # only keys given explicitly
    lines: dict = field(default_factory=dict)    # (section, key) -> line number
    source: str = "<string>"

    def get(self, section, key):
        if key in self.values.get(section, {}):
            return self.values[section][key]
        return DEFAULTS.get(section, {}).get(key)

    def has(self, section, key):
        return key in self.values.get(section, {})

    def set(self, section, key, value):
        self.values.setdefault(section, {})[key] = value

    def dumps(self):
        out = []
        for sec in SCHEMA:
            keys = self.values.get(sec)
            if not keys:
                continue
            out.append(f"[{sec}]")
            for k in SCHEMA[sec]:
                if k in keys:
                    out.append(f"{k} = {_fmt(keys[k])}")
            out.append("")
        return "\n".join(out)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.values == other.values

    # -- builders ----------------------------------------------------------
    def require_seed(self, probe):
        if probe in RANDOM_PROBES and self.get("probe", "seed") is None:
            raise ConfigError(f"{self.source}: probe '{probe}' uses random fields; "
                              "set seed in [probe] or pass --seed")

    def operator_spec(self):
        from .roots import EllipticOperatorSpec
        shift = self.get("operator", "shift")
        kw = {}
        if self.has("operator", "a"):
            kw["a"] = np.array(self.get("operator", "a"), dtype=float)
        if self.has("operator", "b"):
            kw["b"] = np.array(self.get("operator", "b"), dtype=float)
        if self.has("operator", "c0"):
            kw["c0"] = self.get("operator", "c0")
        spec = EllipticOperatorSpec(n=2, shift=0.0 if shift == "auto" else shift, **kw)
        if shift == "auto":
            from dataclasses import replace
            from .resolvent import select_shift
            thetas = self.get("probe", "thetas")
            spec = replace(spec, shift=select_shift(spec, self.boundary_spec(), thetas))
        return spec

    def boundary_spec(self):
        from .degenerate import PRESETS
        name = self.get("boundary", "preset")
        if name == "robin":
            return PRESETS[name](self.get("boundary", "robin_a"), self.get("boundary", "robin_b"))
        return PRESETS[name]()

    def grid(self):
        from .grid import Grid
        g = self.values.get("grid", {})
        try:
            return Grid(*(self.get("grid", k) for k in ("Lt", "Mt", "Ln", "Mn")))
        except ValueError as exc:
            line = min((self.lines[("grid", k)] for k in g if ("grid", k) in self.lines), default=0)
            raise ConfigError(f"{self.source}:{line}: {exc}") from exc

    def contour(self):
        from .calculus import build_contour
        try:
            return build_contour(self.get("contour", "theta"), self.get("contour", "mu_min"),
                                 self.get("contour", "mu_max"), self.get("contour", "nodes"))
        except ValueError as exc:
            raise ConfigError(f"{self.source}: [contour] {exc}") from exc


def loads(text, source="<string>"):
    cfg = RunConfig(source=source)
    section = None
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"\s#|^\s*[#;]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"{source}:{lineno}: malformed section header {raw.strip()!r}")
                continue
            section = line[1:-1].strip()
            if section not in SCHEMA:
                errors.append(f"{source}:{lineno}: unknown section [{section}]")
                section = "?"
            continue
        if "=" not in line:
            errors.append(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, val = (t.strip() for t in line.split("=", 1))
        if section is None:
            errors.append(f"{source}:{lineno}: key '{key}' outside any section")
            continue
        if section == "?":
            continue
        if key not in SCHEMA[section]:
            errors.append(f"{source}:{lineno}: unknown key '{key}' in [{section}]")
            continue
        if (section, key) in cfg.lines:
            errors.append(f"{source}:{lineno}: duplicate key '{key}' in [{section}] "
                          f"(first at line {cfg.lines[(section, key)]})")
            continue
        try:
            value = SCHEMA[section][key](val)
        except (ValueError, TypeError) as exc:
            errors.append(f"{source}:{lineno}: bad value for '{key}': {exc}")
            continue
        choices = CHOICES.get((section, key))
        if choices and value not in choices:
            errors.append(f"{source}:{lineno}: '{key}' must be one of {', '.join(choices)}")
            continue
        cfg.set(section, key, value)
        cfg.lines[(section, key)] = lineno
    if errors:
        raise ConfigError("\n".join(errors))
    return cfg


def load(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text, str(path))
