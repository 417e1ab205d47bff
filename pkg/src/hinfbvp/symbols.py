"""Tangential symbols of Hoermander type and the operations on them.

Symbols are functions of ``(x, xi, zeta)`` where ``x`` is the (single)
tangential space variable, ``xi`` its covariable and ``zeta`` the extra
covariable carrying the spectral parameter. All evaluation is vectorised
with numpy broadcasting.

Fourier convention used project-wide: forward transform with ``exp(-i x xi)``,
``D = -i d/dx`` so that ``D e^{i k x} = k e^{i k x}``.
"""
from dataclasses import dataclass, field
from itertools import product
from math import factorial
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionError, SymbolEvaluationError

# central stencils, second-order accurate: order -> (offsets, weights)
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}
# relative step per derivative order; order 1 uses 1e-4 * <xi, zeta>
_REL_STEP = {1: 1e-4, 2: 5e-4, 3: 2e-3, 4: 5e-3}
MAX_FD_ORDER = 4


def japanese(xi, zeta=0.0):
    """``<xi, zeta> = sqrt(1 + xi^2 + zeta^2)``."""
    return np.sqrt(1.0 + np.square(xi) + np.square(zeta))


def smooth_cutoff(r, R):
    """C^2 smoothstep: 0 for r <= R, 1 for r >= 2R."""
    t = np.clip((np.asarray(r, dtype=float) - R) / R, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _check_finite(values, x, xi, zeta, what="symbol"):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.unravel_index(np.argmax(bad), values.shape)
        pt = tuple(float(np.broadcast_to(a, values.shape)[idx]) for a in (x, xi, zeta))
        raise SymbolEvaluationError(
            f"non-finite {what} value at (x', xi', zeta) = {pt}", point=pt)


def fd_derivative(fn, x, xi, zeta, bx=0, axi=0, azeta=0, x_scale=1.0):
    """Tensor-product central differences of ``fn`` in (x, xi, zeta).

    Covariable steps scale with ``<xi, zeta>`` so that scaled estimates stay
    stable on large shells; the x step is absolute (times ``x_scale``).
    """
    for k in (bx, axi, azeta):
        if k > MAX_FD_ORDER:
            raise ValueError(f"finite differences support order <= {MAX_FD_ORDER}")
    x, xi, zeta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, xi, zeta)))
    if bx == axi == azeta == 0:
        return np.asarray(fn(x, xi, zeta), dtype=complex)
    w = japanese(xi, zeta)
    hx = _REL_STEP.get(bx, 0.0) * x_scale
    hxi = _REL_STEP.get(axi, 0.0) * w
    hz = _REL_STEP.get(azeta, 0.0) * w
    out = np.zeros(x.shape, dtype=complex)
    sx, sxi, sz = _STENCILS[bx], _STENCILS[axi], _STENCILS[azeta]
    for (ox, wx), (oxi, wxi), (oz, wz) in product(zip(*sx), zip(*sxi), zip(*sz)):
        out += (wx * wxi * wz) * np.asarray(
            fn(x + ox * hx, xi + oxi * hxi, zeta + oz * hz), dtype=complex)
    scale = np.ones_like(w)
    if bx:
        scale = scale * hx**bx
    if axi:
        scale = scale * hxi**axi
    if azeta:
        scale = scale * hz**azeta
    return out / scale


@dataclass
class TangentialSymbol:
    """Complex symbol p(x', xi', zeta) with order and (rho, delta) metadata.

    ``deriv(x, xi, zeta, bx, axi, azeta)`` may supply exact derivatives; it
    can raise ``NotImplementedError`` for orders it does not cover, in which
    case central differences are used.
    """

    func: Callable
    order: float
    htype: tuple = (1.0, 0.0)
    deriv: Optional[Callable] = None
    period: Optional[float] = None
    x_independent: bool = False
    name: str = ""

    def __post_init__(self):
        rho, delta = self.htype
        if not (0.0 <= delta <= rho <= 1.0 and delta < 1.0):
            raise ValueError(f"invalid Hoermander type (rho, delta) = {self.htype}")

    @property
    def derivative_mode(self):
        return "exact-callable" if self.deriv is not None else "finite-difference"

    def __call__(self, x, xi, zeta):
        x, xi, zeta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, xi, zeta)))
        vals = np.asarray(self.func(x, xi, zeta), dtype=complex)
        vals = np.broadcast_to(vals, x.shape)
        _check_finite(vals, x, xi, zeta)
        return vals

    def derivative(self, x, xi, zeta, bx=0, axi=0, azeta=0):
        """``d_x^bx d_xi^axi d_zeta^azeta p`` (plain partials, not D = -i d)."""
        x, xi, zeta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, xi, zeta)))
        if bx == axi == azeta == 0:
            return self(x, xi, zeta)
        if bx and self.x_independent:
            return np.zeros(x.shape, dtype=complex)
        vals = None
        if self.deriv is not None:
            try:
                vals = np.asarray(self.deriv(x, xi, zeta, bx, axi, azeta), dtype=complex)
            except NotImplementedError:
                vals = None
        if vals is None:
            vals = fd_derivative(self.func, x, xi, zeta, bx, axi, azeta)
        vals = np.broadcast_to(vals, x.shape)
        _check_finite(vals, x, xi, zeta, what=f"derivative ({bx},{axi},{azeta})")
        return vals

    def check_derivatives(self, lattice, max_order=2, rtol=1e-5):
        """Compare exact derivatives with central differences on ``lattice``.

        Returns the worst relative mismatch (scaled by the symbol size).
        """
        if self.deriv is None:
            return 0.0
        x, xi, zeta, _ = lattice.points()
        worst = 0.0
        for bx, axi, az in product(range(max_order + 1), repeat=3):
            if not 0 < bx + axi + az <= max_order or (bx and self.x_independent):
                continue
            exact = self.derivative(x, xi, zeta, bx, axi, az)
            approx = fd_derivative(self.func, x, xi, zeta, bx, axi, az)
            scale = np.abs(self(x, xi, zeta)) * japanese(xi, zeta) ** (-(axi + az)) + 1e-300
            scale = np.maximum(scale, np.abs(exact))
            worst = max(worst, float(np.max(np.abs(exact - approx) / np.maximum(scale, 1e-300))))
        return worst


@dataclass
class SymbolLattice:
    """Sample points: x' list times (xi', zeta) on dyadic shells ``R0 * 2^j``."""

    x_points: np.ndarray
    R0: float = 4.0
    J: int = 6
    n_dirs: int = 9

    def __post_init__(self):
        self.x_points = np.atleast_1d(np.asarray(self.x_points, dtype=float))
        if self.R0 <= 0:
            raise ValueError("base radius must be positive")
        if self.J < 1:
            raise ValueError("need at least one shell")

    @property
    def radii(self):
        return self.R0 * 2.0 ** np.arange(self.J)

    @property
    def angles(self):
        # zeta >= 0: the spectral covariable is frozen at mu >= 0
        return np.linspace(0.0, np.pi, self.n_dirs)

    def shell(self, j):
        r = self.radii[j]
        return r * np.cos(self.angles), r * np.sin(self.angles)

    def points(self):
        """Flattened tensor lattice ``(x, xi, zeta, shell_index)``."""
        xs, js, ang = np.meshgrid(self.x_points, np.arange(self.J), self.angles, indexing="ij")
        r = self.radii[js]
        return xs.ravel(), (r * np.cos(ang)).ravel(), (r * np.sin(ang)).ravel(), js.ravel()

    def refine(self):
        """Superset lattice: one more shell, doubled directions, x' midpoints."""
        xp = np.sort(self.x_points)
        if xp.size > 1:
            mids = 0.5 * (xp[1:] + xp[:-1])
            xp = np.sort(np.concatenate([xp, mids]))
        return SymbolLattice(xp, self.R0, self.J + 1, 2 * self.n_dirs - 1)


def shell_sups(values, lattice):
    """Per-shell sup of ``|values|`` for values laid out like ``lattice.points()``."""
    _, _, _, js = lattice.points()
    v = np.abs(np.asarray(values)).ravel()
    return np.array([v[js == j].max() for j in range(lattice.J)])


def fit_shell_slope(radii, sups):
    """Least-squares slope of log(sup) against log(radius).

    Returns ``-inf`` when the data is identically zero.
    """
    radii = np.asarray(radii, dtype=float)
    sups = np.asarray(sups, dtype=float)
    mask = sups > 0
    if mask.sum() < 2:
        return float("-inf")
    if mask.sum() < 3:
        raise ValueError("slope fits need at least 3 shells")
    slope, _ = np.polyfit(np.log(radii[mask]), np.log(sups[mask]), 1)
    return float(slope)


def estimate_seminorm(s, alpha, beta, lattice):
    """sup |d_x^beta d_(xi,zeta)^alpha s| <xi,zeta>^(-m + rho|alpha| - delta|beta|).

    ``alpha = (a_xi, a_zeta)``, ``beta = (b_x,)`` (ints are accepted too).
    """
    alpha = (alpha, 0) if np.isscalar(alpha) else tuple(alpha)
    beta = beta[0] if not np.isscalar(beta) else beta
    axi, az = alpha
    if axi + az + beta > MAX_FD_ORDER and s.deriv is None:
        raise ValueError("derivative order exceeds the supported order")
    x, xi, zeta, _ = lattice.points()
    d = s.derivative(x, xi, zeta, bx=beta, axi=axi, azeta=az)
    rho, delta = s.htype
    weight = japanese(xi, zeta) ** (-s.order + rho * (axi + az) - delta * beta)
    return float(np.max(np.abs(d) * weight))


def leibniz_truncate(p, q, N):
    """Truncated composition ``sum_{a<N} (1/a!) d_xi^a p * D_x^a q``.

    The zeta covariable has no dual space variable, so only xi-derivatives of
    ``p`` pair with x-derivatives of ``q``.
    """
    if N < 1:
        raise ValueError("truncation order N must be >= 1")

    def func(x, xi, zeta):
        total = p(x, xi, zeta) * q(x, xi, zeta)
        if q.x_independent:
            return total
        for a in range(1, N):
            total = total + (1.0 / factorial(a)) * p.derivative(x, xi, zeta, axi=a) * (
                (-1j) ** a * q.derivative(x, xi, zeta, bx=a))
        return total

    htype = (max(p.htype[0], q.htype[0]), max(p.htype[1], q.htype[1]))
    return TangentialSymbol(
        func, p.order + q.order, htype,
        period=p.period or q.period,
        x_independent=p.x_independent and q.x_independent,
        name=f"({p.name}#{q.name})_{N}")


def freeze_spectral_covariable(p, mu):
    """Freeze the zeta slot at ``mu``: ``(x, xi, .) -> p(x, xi, mu)``."""
    mu = float(mu)
    if not np.isfinite(mu):
        raise ValueError("mu must be finite")

    def func(x, xi, zeta):
        return p(x, xi, np.full(np.shape(zeta), mu))

    def deriv(x, xi, zeta, bx, axi, azeta):
        if azeta:
            return np.zeros(np.broadcast(x, xi, zeta).shape, dtype=complex)
        return p.derivative(x, xi, np.full(np.shape(zeta), mu), bx=bx, axi=axi)

    return TangentialSymbol(func, p.order, p.htype, deriv=deriv, period=p.period,
                            x_independent=p.x_independent, name=f"{p.name}|mu={mu:g}")


# --------------------------------------------------------------------------
# parametrix


def _spectral_dx(values, kx, order):
    """``D_x^order`` along axis 0 for samples on a uniform periodic grid."""
    if order == 0:
        return values
    return np.fft.ifft(kx[:, None] ** order * np.fft.fft(values, axis=0), axis=0)


def _leibniz_grid(pd, q, N, kx):
    total = pd[0] * q
    if kx is None:
        return total
    for a in range(1, N):
        total = total + (1.0 / factorial(a)) * pd[a] * _spectral_dx(q, kx, a)
    return total


@dataclass
class ParametrixSymbol(TangentialSymbol):
    """Right parametrix ``q_N`` of ``p`` evaluated on a periodic x' grid.

    ``q_0 = chi / p``, ``q_{k+1} = q_k + q_k (1 - (p # q_k)_{k+1})``. For each
    (xi, zeta) the whole x' period is computed at once so that x'-derivatives
    are spectral; off-grid x' is reached by trigonometric interpolation.
    """

    base: Optional[TangentialSymbol] = None
    N: int = 4
    R: float = 1.0
    n_grid: int = 1024
    residual_terms: Optional[int] = None
    _grid: np.ndarray = field(default=None, repr=False)
    _kx: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        super().__post_init__()
        if self.x_independent:
            self._grid = np.zeros(1)
            self._kx = None
        else:
            L = self.period
            self._grid = np.arange(self.n_grid) * (L / self.n_grid)
            self._kx = 2 * np.pi * np.fft.fftfreq(self.n_grid, d=L / self.n_grid)

    @property
    def grid(self):
        return self._grid

    def _default_residual_terms(self):
        # one Leibniz term beyond the construction order, within FD reach
        if self.base.deriv is not None:
            return self.N + 1
        return min(self.N + 1, MAX_FD_ORDER + 1)

    def _base_derivs(self, xi, zeta, count):
        X = self._grid[:, None]
        return [self.base.derivative(X, xi[None, :], zeta[None, :], axi=a) for a in range(count)]

    def grid_values(self, xi, zeta, residual=False, bx=0):
        """Values of ``q_N`` (or the residual ``1 - p#q_N``) on the x' grid.

        ``xi``, ``zeta`` are 1-d arrays of equal length K; returns (n_grid, K).
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        nres = self.residual_terms or self._default_residual_terms()
        pd = self._base_derivs(xi, zeta, max(self.N, nres if residual else 1))
        r = np.hypot(xi, zeta)
        chi = smooth_cutoff(r, self.R)[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(chi > 0, chi / pd[0], 0.0)
        for k in range(self.N):
            q = q + q * (1.0 - _leibniz_grid(pd, q, k + 1, self._kx))
        if residual:
            return 1.0 - _leibniz_grid(pd, q, nres, self._kx)
        if bx:
            if self._kx is None:
                return np.zeros_like(q)
            q = np.fft.ifft((1j * self._kx[:, None]) ** bx * np.fft.fft(q, axis=0), axis=0)
        return q

    def _pointwise(self, x, xi, zeta, residual=False, bx=0, chunk=256):
        x, xi, zeta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, xi, zeta)))
        shape = x.shape
        xf, xif, zf = x.ravel(), xi.ravel(), zeta.ravel()
        pairs, inv = np.unique(np.stack([xif, zf], axis=1), axis=0, return_inverse=True)
        inv = inv.ravel()
        out = np.empty(xf.size, dtype=complex)
        M = self._grid.size
        if self.x_independent:
            idx = None
        else:
            L = self.period
            pos = np.mod(xf, L) / (L / M)
            near = np.rint(pos)
            on_grid = np.abs(pos - near) < 1e-9
            idx = np.mod(near.astype(int), M)
        for start in range(0, pairs.shape[0], chunk):
            sel = slice(start, start + chunk)
            V = self.grid_values(pairs[sel, 0], pairs[sel, 1], residual=residual, bx=bx)
            members = np.nonzero((inv >= start) & (inv < start + V.shape[1]))[0]
            cols = inv[members] - start
            if idx is None:
                out[members] = V[0, cols]
                continue
            og = on_grid[members]
            out[members[og]] = V[idx[members[og]], cols[og]]
            off = members[~og]
            if off.size:
                coef = np.fft.fft(V, axis=0) / M
                phase = np.exp(1j * np.outer(xf[off], self._kx))
                out[off] = np.einsum("nm,mn->n", phase, coef[:, inv[off] - start])
        return out.reshape(shape)

    def __call__(self, x, xi, zeta):
        vals = self._pointwise(x, xi, zeta)
        _check_finite(vals, *np.broadcast_arrays(x, xi, zeta))
        return vals

    def derivative(self, x, xi, zeta, bx=0, axi=0, azeta=0):
        if bx == axi == azeta == 0:
            return self(x, xi, zeta)

        def g(xx, xxi, zz):
            return self._pointwise(xx, xxi, zz, bx=bx)

        vals = fd_derivative(g, x, xi, zeta, 0, axi, azeta)
        _check_finite(vals, *np.broadcast_arrays(x, xi, zeta), what="parametrix derivative")
        return vals

    def residual(self, x, xi, zeta):
        return self._pointwise(x, xi, zeta, residual=True)

    def residual_shell_sups(self, lattice, min_radius=None):
        """Per-shell sup of ``|1 - p#q_N|`` on shells with radius >= min_radius."""
        min_radius = 2 * self.R if min_radius is None else min_radius
        radii, sups = [], []
        for j, r in enumerate(lattice.radii):
            if r < min_radius:
                continue
            xi, zeta = lattice.shell(j)
            V = self.grid_values(xi, zeta, residual=True)
            radii.append(r)
            sups.append(np.abs(V).max())
        return np.array(radii), np.array(sups)

    def residual_slope(self, lattice, min_radius=None):
        return fit_shell_slope(*self.residual_shell_sups(lattice, min_radius))


def hypoelliptic_parametrix(p, N=4, c=None, R=None, lattice=None, order=None, htype=None,
                            n_grid=1024, residual_terms=None):
    """Parametrix of a (hypo)elliptic tangential symbol.

    ``|p| >= c`` is checked on every lattice point with radius >= R; a
    violation raises :class:`PreconditionError` carrying the point.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not p.x_independent and p.period is None:
        raise ValueError("x'-dependent symbols need a period (tangential torus)")
    if lattice is None:
        xs = np.linspace(0.0, p.period, 128, endpoint=False) if p.period else np.zeros(1)
        lattice = SymbolLattice(xs)
    if R is None:
        R = float(lattice.R0)
    if c is not None:
        x, xi, zeta, js = lattice.points()
        mask = lattice.radii[js] >= R
        vals = np.abs(p(x[mask], xi[mask], zeta[mask]))
        if np.any(vals < c):
            k = int(np.argmin(vals))
            witness = (float(x[mask][k]), float(xi[mask][k]), float(zeta[mask][k]))
            raise PreconditionError(
                f"|p| = {vals[k]:.3g} < c = {c:g} at (x', xi', zeta) = {witness}",
                witness=witness)
    return ParametrixSymbol(
        func=None, order=-p.order if order is None else order,
        htype=p.htype if htype is None else htype,
        period=p.period, x_independent=p.x_independent, name=f"{p.name}^-#",
        base=p, N=N, R=R, n_grid=n_grid, residual_terms=residual_terms)
