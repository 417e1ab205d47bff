"""Degenerate boundary operator ``T = phi0 gamma_0 + phi1 gamma_1``.

Covers the boundary symbol ``sigma = phi1 * pi + phi0``, its hypoellipticity
certificate, its type (1, 1/2) parametrix, the order gain of ``s # phi1``
and the principal kernel of the boundary correction ``G^T``.
"""
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import PreconditionError, SpecError
from .layers import SeparableNormalKernel, dirichlet_green
from .symbols import (TangentialSymbol, fit_shell_slope, hypoelliptic_parametrix,
                      japanese, leibniz_truncate)

Profile = Union[float, Callable]


def _profile(f, x):
    x = np.asarray(x, dtype=float)
    if callable(f):
        return np.asarray(f(x), dtype=float) * np.ones_like(x)
    return np.full(x.shape, float(f))


@dataclass
class BoundaryOperatorSpec:
    """Boundary functions of ``T``; callables must accept numpy arrays.

    ``period`` is the tangential period when either profile varies.
    ``dphi1``/``ddphi1`` are optional exact derivatives used by the Kato check.
    """

    phi0: Profile = 1.0
    phi1: Profile = 0.0
    degeneracy_floor: float = 0.5
    period: Optional[float] = None
    name: str = "custom"
    dphi1: Optional[Callable] = None
    ddphi1: Optional[Callable] = None

    def __post_init__(self):
        if self.degeneracy_floor <= 0:
            raise SpecError("degeneracy floor must be positive")
        if not self.constant and self.period is None:
            raise SpecError("variable boundary profiles need a tangential period")

    @property
    def constant(self):
        return not (callable(self.phi0) or callable(self.phi1))

    @property
    def dirichlet(self):
        return not callable(self.phi1) and self.phi1 == 0

    def phi0_at(self, x):
        return _profile(self.phi0, x)

    def phi1_at(self, x):
        return _profile(self.phi1, x)

    def phi1_derivs(self, x, h=1e-4):
        x = np.asarray(x, dtype=float)
        if not callable(self.phi1):
            z = np.zeros_like(x)
            return z, z
        d1 = self.dphi1(x) if self.dphi1 else (self.phi1_at(x + h) - self.phi1_at(x - h)) / (2 * h)
        if self.ddphi1:
            d2 = self.ddphi1(x)
        else:
            d2 = (self.phi1_at(x + h) - 2 * self.phi1_at(x) + self.phi1_at(x - h)) / h**2
        return np.asarray(d1, dtype=float), np.asarray(d2, dtype=float)

    def sample_points(self, count=256):
        if self.constant:
            return np.zeros(1)
        return np.arange(count) * (self.period / count)

    def validate(self, x=None, slack=1e-8):
        """Check ``phi1 >= 0``, ``phi0 + phi1 >= floor`` and the Glaeser bound.

        The bound checked is ``|phi1'|^2 <= 2 sup|phi1''| phi1``, the sharp form
        for non-negative C^2 functions.
        """
        x = self.sample_points() if x is None else np.asarray(x, dtype=float)
        p0, p1 = self.phi0_at(x), self.phi1_at(x)
        if not (np.all(np.isfinite(p0)) and np.all(np.isfinite(p1))):
            raise SpecError("boundary profiles are not finite")
        if np.any(p1 < 0):
            k = int(np.argmin(p1))
            raise SpecError(f"phi1 < 0 at x' = {x[k]:g}")
        tot = p0 + p1
        if np.any(tot < self.degeneracy_floor):
            k = int(np.argmin(tot))
            raise SpecError(f"phi0 + phi1 = {tot[k]:g} below floor {self.degeneracy_floor:g} "
                            f"at x' = {x[k]:g}")
        d1, d2 = self.phi1_derivs(x)
        bound = 2.0 * np.max(np.abs(d2), initial=0.0) * p1
        if np.any(d1**2 > bound + slack):
            k = int(np.argmax(d1**2 - bound))
            raise SpecError(f"|phi1'|^2 exceeds 2 sup|phi1''| phi1 at x' = {x[k]:g}")
        return True


def dirichlet_bc():
    return BoundaryOperatorSpec(1.0, 0.0, 0.5, name="dirichlet")


def neumann_bc():
    return BoundaryOperatorSpec(0.0, 1.0, 0.5, name="neumann")


def robin_bc(a=1.0, b=1.0):
    """``a gamma_0 + b gamma_1`` with ``a, b >= 0``."""
    return BoundaryOperatorSpec(float(a), float(b), 0.5 * (a + b), name=f"robin({a:g},{b:g})")


def degenerate_sin2_bc():
    """``phi1 = sin^2 x'``, ``phi0 = cos^2 x'``; degenerates where sin vanishes."""
    return BoundaryOperatorSpec(
        lambda x: np.cos(x) ** 2, lambda x: np.sin(x) ** 2, 0.5, period=np.pi,
        name="degenerate-sin2", dphi1=lambda x: np.sin(2 * x),
        ddphi1=lambda x: 2 * np.cos(2 * x))


PRESETS = {
    "dirichlet": dirichlet_bc,
    "neumann": neumann_bc,
    "robin": robin_bc,
    "degenerate-sin2": degenerate_sin2_bc,
}


def phi1_symbol(bspec):
    """``phi1`` as an order-0 tangential symbol."""
    def func(x, xi, zeta):
        return bspec.phi1_at(np.asarray(x) + 0 * np.asarray(xi))

    def deriv(x, xi, zeta, bx, axi, azeta):
        shape = np.broadcast(x, xi, zeta).shape
        if axi or azeta:
            return np.zeros(shape)
        if bspec.dphi1 is None or bx > 2:
            raise NotImplementedError
        f = bspec.dphi1 if bx == 1 else bspec.ddphi1
        return np.broadcast_to(f(np.asarray(x, dtype=float)), shape)

    has_exact = bspec.dphi1 is not None and bspec.ddphi1 is not None
    return TangentialSymbol(func, 0.0, (1.0, 0.0), deriv=deriv if has_exact else None,
                            period=bspec.period, x_independent=not callable(bspec.phi1),
                            name="phi1")


def sigma_symbol(bspec, pi):
    """``sigma = phi1 * pi + phi0``."""
    if pi.order != 1:
        raise SpecError("pi must have order 1")

    def func(x, xi, zeta):
        x = np.asarray(x, dtype=float)
        return bspec.phi1_at(x) * pi(x, xi, zeta) + bspec.phi0_at(x)

    return TangentialSymbol(func, 1.0, (1.0, 0.0), period=bspec.period or pi.period,
                            x_independent=bspec.constant and pi.x_independent, name="sigma")


@dataclass
class HypoellipticityReport:
    lower_bound_c: float
    radius_R: float
    radii: list
    table: dict = field(default_factory=dict)
    passes: dict = field(default_factory=dict)
    lower_bound_ok: bool = True
    lower_bound_witness: Optional[tuple] = None
    growth_tol: float = 0.10

    @staticmethod
    def entry_passes(sups, growth_tol=0.10):
        """Finite everywhere and the top shell does not exceed the previous one by more than 10%."""
        sups = np.asarray(sups, dtype=float)
        if not np.all(np.isfinite(sups)):
            return False
        if sups.size < 2:
            return True
        return bool(sups[-1] <= (1.0 + growth_tol) * sups[-2] + 1e-12)

    @staticmethod
    def top_variation(sups):
        """Relative change between the top two shells (0 for identically zero rows)."""
        a, b = float(sups[-2]), float(sups[-1])
        m = max(a, b)
        return 0.0 if m == 0 else abs(b - a) / m

    def recompute_passes(self):
        return {k: self.entry_passes(v, self.growth_tol) for k, v in self.table.items()}

    @property
    def passed(self):
        return self.lower_bound_ok and all(self.passes.values())

    def constants(self):
        return {k: float(np.max(v)) for k, v in self.table.items()}

    def to_json(self):
        d = asdict(self)
        d["lower_bound_witness"] = (None if self.lower_bound_witness is None
                                    else list(self.lower_bound_witness))
        d["table"] = {k: [float(x) for x in v] for k, v in self.table.items()}
        d["constants"] = self.constants()
        d["passed"] = self.passed
        return json.dumps(d, sort_keys=True, indent=2)


def ellipticity_radius(pi, lattice):
    """Smallest shell radius from which ``Re pi >= 1`` on every outer shell."""
    x, xi, zeta, js = lattice.points()
    ok = np.real(pi(x, xi, zeta)) >= 1.0
    good = np.array([ok[js == j].all() for j in range(lattice.J)])
    for j in range(lattice.J):
        if good[j:].all():
            return float(lattice.radii[j])
    raise PreconditionError("Re pi >= 1 fails on the outermost shell")


def verify_hypoellipticity(sigma, bspec, lattice, max_order=3, pi=None, R=None):
    """Scaled derivative table of ``sigma`` and its lower bound.

    Entry ``(a_xi, a_zeta, b)`` holds, per shell with radius >= R, the sup of
    ``|d_x^b d_xi^a_xi d_zeta^a_zeta sigma / sigma| <xi,zeta>^{a_xi+a_zeta-b/2}``.
    """
    if R is None:
        R = ellipticity_radius(pi, lattice) if pi is not None else float(lattice.R0)
    x, xi, zeta, js = lattice.points()
    radii = lattice.radii
    keep = radii >= R
    if keep.sum() < 2:
        raise PreconditionError("fewer than two shells beyond the ellipticity radius")
    sel = keep[js]
    x, xi, zeta, js = x[sel], xi[sel], zeta[sel], js[sel]
    sig = sigma(x, xi, zeta)
    floor = bspec.phi0_at(x) + bspec.phi1_at(x)
    # exact inequality up to a few ulps of rounding in sigma itself
    viol = np.abs(sig) < floor * (1.0 - 4 * np.finfo(float).eps)
    witness = None
    if np.any(viol):
        k = int(np.argmax(viol))
        witness = (float(x[k]), float(xi[k]), float(zeta[k]))
    w = japanese(xi, zeta)
    shells = [j for j in range(lattice.J) if keep[j]]
    table = {}
    for total in range(1, max_order + 1):
        for b in range(total + 1):
            for a_xi in range(total - b + 1):
                a_z = total - b - a_xi
                if b and sigma.x_independent:
                    vals = np.zeros_like(w)
                else:
                    d = sigma.derivative(x, xi, zeta, bx=b, axi=a_xi, azeta=a_z)
                    vals = np.abs(d / sig) * w ** (a_xi + a_z - 0.5 * b)
                table[f"a{a_xi}{a_z}_b{b}"] = [float(vals[js == j].max()) for j in shells]
    rep = HypoellipticityReport(
        lower_bound_c=float(np.min(np.abs(sig))), radius_R=float(R),
        radii=[float(radii[j]) for j in shells], table=table,
        lower_bound_ok=witness is None, lower_bound_witness=witness)
    rep.passes = rep.recompute_passes()
    return rep


def parametrix_sigma(sigma, N=4, R=4.0, lattice=None, report=None, n_grid=1024):
    """Type (1, 1/2) parametrix of ``sigma`` with order-0 metadata."""
    if report is not None and not report.passed:
        raise PreconditionError("hypoellipticity certificate failed",
                                witness=report.lower_bound_witness)
    c = None
    if report is not None:
        c = report.lower_bound_c
    return hypoelliptic_parametrix(sigma, N=N, c=c, R=R, lattice=lattice, order=0.0,
                                   htype=(1.0, 0.5), n_grid=n_grid)


def symbol_shell_sups(sym, lattice, min_radius=0.0):
    """Radii and per-shell sup of ``|sym|`` for shells at or beyond ``min_radius``."""
    radii, sups = [], []
    for j, r in enumerate(lattice.radii):
        if r < min_radius:
            continue
        xi, zeta = lattice.shell(j)
        X, XI = np.meshgrid(lattice.x_points, xi, indexing="ij")
        Z = np.broadcast_to(zeta, XI.shape)
        radii.append(r)
        sups.append(float(np.abs(sym(X, XI, Z)).max()))
    return np.array(radii), np.array(sups)


def composed_with_phi1(s, bspec, N=3):
    """``(s # phi1)`` truncated at N Leibniz terms."""
    return leibniz_truncate(s, phi1_symbol(bspec), N)


def order_gain(s, bspec, lattice, N=3, min_radius=None):
    """Fitted shell slope of ``|s # phi1|``; ``-inf`` if identically zero."""
    if bspec.dirichlet:
        return float("-inf")
    g = composed_with_phi1(s, bspec, N)
    min_radius = 2 * getattr(s, "R", lattice.R0) if min_radius is None else min_radius
    return fit_shell_slope(*symbol_shell_sups(g, lattice, min_radius))


def gT_principal(kp, s_phi1_value):
    """Kernel of the boundary correction: ``(s#phi1) / a_n`` times both exponentials."""
    amp = np.asarray(s_phi1_value, dtype=complex) / kp.a_n
    return SeparableNormalKernel(amp, kp.kplus, kp.kminus)


def frozen_s_phi1(kp, phi0, phi1):
    """Frozen-coefficient value of ``s # phi1``: ``phi1 / (phi1 kappa_plus + phi0)``."""
    sigma = phi1 * kp.kplus + phi0
    if np.any(sigma == 0):
        raise PreconditionError("boundary symbol vanishes")
    return phi1 / sigma


def boundary_residual(kp, phi0, phi1, y):
    """``T`` applied (in x_n at 0) to free + G^D + G^T, for sources at ``y``.

    Uses the frozen kernels; returns the absolute residual values.
    """
    gd = dirichlet_green(kp)
    gt = gT_principal(kp, frozen_s_phi1(kp, phi0, phi1))
    y = np.asarray(y, dtype=float)
    val0 = gd(0.0, y) + gt(0.0, y)
    # exterior normal derivative -d/dx at x = 0 for x < y (the free kernel's lower branch)
    amp_free = gd.free.amplitude
    dval = (-kp.kminus * amp_free * np.exp(-kp.kminus * y)
            + kp.kplus * (gd.correction.amplitude + gt.amplitude) * np.exp(-kp.kminus * y))
    return np.abs(phi0 * val0 + phi1 * dval)
