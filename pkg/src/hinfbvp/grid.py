"""Grid functions on the tangential torus times a truncated normal interval.

Nodes: ``x'_j = j L'/M'`` (periodic) and ``x_n,i = i L_n/M_n`` for
``i = 0 .. M_n - 1``; the far wall ``x_n = L_n`` carries the value 0 and is
not stored. Norms use the trapezoid rule in ``x_n``.
"""
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"HINFFLD1"
_HEADER = struct.Struct("<8sIIdd")  # 32 bytes


@dataclass(frozen=True)
class Grid:
    Lt: float
    Mt: int
    Ln: float
    Mn: int

    def __post_init__(self):
        if self.Lt <= 0 or self.Ln <= 0 or self.Mt < 1 or self.Mn < 2:
            raise ValueError("grid sizes and spacings must be positive")

    @property
    def ht(self):
        return self.Lt / self.Mt

    @property
    def hn(self):
        return self.Ln / self.Mn

    @property
    def xt(self):
        return np.arange(self.Mt) * self.ht

    @property
    def xn(self):
        return np.arange(self.Mn) * self.hn

    @property
    def xn_closed(self):
        """Normal nodes including the wall."""
        return np.arange(self.Mn + 1) * self.hn

    @property
    def xi(self):
        """Tangential frequencies in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.Mt, d=self.ht)

    @property
    def shape(self):
        return (self.Mt, self.Mn)

    def mesh(self):
        return np.meshgrid(self.xt, self.xn, indexing="ij")

    def weights(self):
        w = np.full(self.Mn, self.hn)
        w[0] = 0.5 * self.hn
        return self.ht * w

    def field(self, values, p=2.0):
        return DiscreteField(self, np.asarray(values, dtype=complex), p)

    def zeros(self):
        return self.field(np.zeros(self.shape))


@dataclass
class DiscreteField:
    grid: Grid
    values: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[-2:] != self.grid.shape:
            raise ValueError(f"values of shape {self.values.shape} "
                             f"do not fit grid {self.grid.shape}")

    def norm(self, p=None):
        p = self.p if p is None else p
        w = self.grid.weights()[None, :]
        a = np.abs(self.values)
        if np.isinf(p):
            return float(a.max(axis=(-2, -1)).max()) if a.ndim > 2 else float(a.max())
        s = np.sum(w * a**p, axis=(-2, -1))
        return s ** (1.0 / p) if np.ndim(s) else float(s ** (1.0 / p))

    def boundary(self):
        return self.values[..., 0]

    def boundary_norm(self, p=None):
        p = self.p if p is None else p
        return float((self.grid.ht * np.sum(np.abs(self.boundary()) ** p)) ** (1.0 / p))

    def inner(self, other):
        w = self.grid.weights()[None, :]
        return complex(np.sum(w * np.conj(self.values) * other.values))

    def with_values(self, values):
        return DiscreteField(self.grid, values, self.p)

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        return self.with_values(self.values - other.values)

    def __mul__(self, s):
        return self.with_values(self.values * s)

    __rmul__ = __mul__


def gaussian_field(grid, center=(None, 2.0), width=(0.7, 0.7)):
    """Separable Gaussian bump (tangential part periodised)."""
    xt, xn = grid.mesh()
    ct = grid.Lt / 2 if center[0] is None else center[0]
    dt = (xt - ct + grid.Lt / 2) % grid.Lt - grid.Lt / 2
    return grid.field(np.exp(-(dt / width[0]) ** 2 - ((xn - center[1]) / width[1]) ** 2))


def random_smooth_field(grid, rng, kt=None, kn=None):
    """Random field with Gaussian-damped spectrum; vanishes at the far wall."""
    kt = max(2, grid.Mt // 8) if kt is None else kt
    kn = max(2, grid.Mn // 8) if kn is None else kn
    xt, xn = grid.mesh()
    coef = rng.standard_normal((grid.Mt, kn)) + 1j * rng.standard_normal((grid.Mt, kn))
    damp_t = np.exp(-(np.fft.fftfreq(grid.Mt, d=1.0 / grid.Mt) / kt) ** 2)
    coef *= damp_t[:, None] * np.exp(-(np.arange(kn) / (kn / 2.0)) ** 2)[None, :]
    modes = np.sin(np.pi * np.outer(np.arange(1, kn + 1), grid.xn_closed[:-1]) / grid.Ln)
    spec = coef @ modes
    vals = np.fft.ifft(spec, axis=0) * grid.Mt
    return grid.field(vals)


def write_field(path, field):
    """Flat binary (32-byte header, little-endian complex64) plus a JSON sidecar."""
    path = Path(path)
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.Mt, g.Mn, g.Lt, g.Ln))
        fh.write(np.ascontiguousarray(field.values, dtype="<c8").tobytes())
    desc = {"magic": MAGIC.decode(), "Mt": g.Mt, "Mn": g.Mn, "Lt": g.Lt, "Ln": g.Ln,
            "dtype": "complex64-le", "layout": "row-major (tangential, normal)",
            "header_bytes": _HEADER.size, "p": field.p}
    Path(str(path) + ".json").write_text(json.dumps(desc, sort_keys=True, indent=2) + "\n")


def read_field(path):
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, Mt, Mn, Lt, Ln = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = np.frombuffer(raw, dtype="<c8", offset=_HEADER.size)
    if body.size != Mt * Mn:
        raise ValueError(f"{path}: expected {Mt * Mn} values, found {body.size}")
    grid = Grid(Lt, Mt, Ln, Mn)
    p = 2.0
    side = Path(str(path) + ".json")
    if side.exists():
        p = float(json.loads(side.read_text()).get("p", 2.0))
    return DiscreteField(grid, body.reshape(Mt, Mn).astype(complex), p)
