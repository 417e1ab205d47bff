"""Resolvent of the boundary value problem, applied frequency by frequency.

For each tangential frequency the interior part ``Q + G^D`` is evaluated by
exact exponential integration of piecewise-linear data along the normal
grid (the hot kernel in :mod:`hinfbvp.kernels`). The boundary correction
``G^T = -K^D S T (Q + G^D)`` is then added, with ``S`` the inverse of
``phi1 * Pi + phi0`` on the torus (dense solve) or its frozen symbol.

Also hosts the probes that are built on top of the resolvent: sector scans,
spectral decay slopes and the truncated ``I_theta`` integral.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import kernels
from .degenerate import frozen_s_phi1, gT_principal
from .errors import AssemblyError, EllipticityError, InstabilityError, PreconditionError, SpecError
from .grid import DiscreteField, random_smooth_field
from .layers import dirichlet_correction, free_normal_kernel
from .roots import THETA_MAX, boundary_quadratic, kappa_at
from .symbols import SymbolLattice


@dataclass(frozen=True)
class SpectralPoint:
    """``lambda = -exp(i theta) mu^2``."""

    theta: float
    mu: float

    def __post_init__(self):
        if abs(self.theta) > THETA_MAX:
            raise SpecError(f"ray angle {self.theta} outside |theta| <= pi - 0.01")
        if self.mu < 0:
            raise SpecError("mu must be >= 0")

    @property
    def lam(self):
        return -np.exp(1j * self.theta) * self.mu**2

    @classmethod
    def from_lambda(cls, lam):
        lam = complex(lam)
        return cls(float(np.angle(-lam)), float(np.sqrt(abs(lam))))


def _as_point(sp):
    return sp if isinstance(sp, SpectralPoint) else SpectralPoint.from_lambda(sp)


def assemble_resolvent_symbol(spec, bspec, sp, xp, xi, s_phi1=None):
    """Frozen normal kernels ``(free, G^D, G^T)`` at ``(x', xi', zeta = mu)``."""
    sp = _as_point(sp)
    kp = kappa_at(spec, xp, xi, sp.mu, sp.theta)
    free = free_normal_kernel(kp)
    gd = dirichlet_correction(kp)
    if s_phi1 is None:
        s_phi1 = frozen_s_phi1(kp, bspec.phi0_at(xp), bspec.phi1_at(xp))
    gt = gT_principal(kp, s_phi1)
    return free, gd, gt


def assemble_family(spec, bspec, theta):
    """The theta-family of kernels as a function of ``(x', xi', zeta)``."""
    def at(xp, xi, zeta):
        kp = kappa_at(spec, xp, xi, zeta, theta)
        s = frozen_s_phi1(kp, bspec.phi0_at(xp), bspec.phi1_at(xp))
        return free_normal_kernel(kp), dirichlet_correction(kp), gT_principal(kp, s)
    return at


def select_shift(spec, bspec, thetas, lattice=None, candidates=(1.0, 2.0, 4.0, 8.0, 16.0, 32.0)):
    """Smallest shift from ``candidates`` with valid roots and ``Re kappa >= 1`` on the lattice.

    Also requires the boundary symbol ``phi1 kappa + phi0`` to have real part at
    least ``phi0 + phi1`` there, and root validity down to zero frequency.
    """
    from dataclasses import replace
    lattice = lattice or SymbolLattice(bspec.sample_points(32))
    x, xi, zeta, _ = lattice.points()
    low = np.array([0.0, 0.25, 0.5, 1.0, 2.0])
    XL, ZL = np.meshgrid(low, low)
    for c in candidates:
        trial = replace(spec, shift=c)
        try:
            for th in thetas:
                kp = kappa_at(trial, x, xi, zeta, th)
                if np.min(kp.kplus.real) < 1 or np.min(kp.kminus.real) < 1:
                    raise EllipticityError("Re kappa < 1 on the lattice")
                kappa_at(trial, 0.0, XL.ravel(), ZL.ravel(), th)
                sig = bspec.phi1_at(x) * kp.kplus.real + bspec.phi0_at(x)
                if np.any(sig < bspec.phi0_at(x) + bspec.phi1_at(x) - 1e-12):
                    raise EllipticityError("boundary symbol lower bound fails")
        except EllipticityError:
            continue
        return c
    raise PreconditionError("no admissible shift among the candidates")


class ResolventEngine:
    """Applies ``(A_T - lambda)^{-1}`` on a :class:`Grid`.

    ``mode='exact'`` needs tangentially constant operator coefficients; the
    boundary operator may vary, and its torus equation is solved densely.
    ``mode='frozen'`` quantises ``1/sigma`` at each x' instead, and also
    freezes x'-dependent operator coefficients (results flagged approximate).
    """

    def __init__(self, spec, bspec, grid, mode="exact"):
        if spec.n != 2:
            raise NotImplementedError("the engine is implemented for n = 2")
        if mode not in ("exact", "frozen"):
            raise ValueError("mode must be 'exact' or 'frozen'")
        if mode == "exact" and not spec.constant:
            raise SpecError("exact mode needs constant operator coefficients; use mode='frozen'")
        xs, xn = np.meshgrid(grid.xt, grid.xn[:: max(1, grid.Mn // 16)], indexing="ij")
        spec.validate(np.stack([xs, xn], axis=-1))
        bspec.validate(grid.xt if not bspec.constant else None)
        self.spec, self.bspec, self.grid, self.mode = spec, bspec, grid, mode
        self.approximate = mode == "frozen" and not bspec.constant or not spec.constant
        self.xt, self.xn = grid.xt, grid.xn_closed
        self.xi = grid.xi
        self.phi0 = bspec.phi0_at(self.xt)
        self.phi1 = bspec.phi1_at(self.xt)
        self._cache = {}

    # -- per-frequency data --------------------------------------------
    def kappa(self, sp):
        sp = _as_point(sp)
        try:
            if self.spec.constant:
                return kappa_at(self.spec, 0.0, self.xi, sp.mu, sp.theta)
            X, XI = np.meshgrid(self.xt, self.xi, indexing="ij")
            return kappa_at(self.spec, X, XI, sp.mu, sp.theta)
        except EllipticityError as exc:
            raise AssemblyError(f"assembly failed at lambda = {sp.lam}: {exc}",
                                frequencies=self.xi) from exc

    def _boundary_operator(self, sp, kp):
        key = (sp.theta, sp.mu)
        if key in self._cache:
            return self._cache[key]
        Mt = self.grid.Mt
        kplus = kp.kplus if kp.kplus.ndim == 1 else kp.kplus
        if self.mode == "exact":
            F = np.fft.fft(np.eye(Mt), axis=0)
            Pi = np.fft.ifft(kplus[:, None] * F, axis=0)
            S = self.phi1[:, None] * Pi + np.diag(self.phi0)
            op = ("lu", sla.lu_factor(S))
        else:
            k2 = kplus if kplus.ndim == 2 else np.broadcast_to(kplus, (Mt, Mt))
            sigma = self.phi1[:, None] * k2 + self.phi0[:, None]
            Q = np.exp(1j * np.outer(self.xt, self.xi)) / sigma / Mt
            op = ("quant", Q)
        self._cache = {key: op}
        return op

    def _boundary_solve(self, sp, kp, rhs_x):
        """Solve ``(phi1 Pi + phi0) g = rhs`` (rhs in x'-space); returns g-hat."""
        if self.bspec.constant:
            sigma = self.phi1[0] * kp.kplus + self.phi0[0]
            return np.fft.fft(rhs_x, axis=-1) / sigma
        kind, op = self._boundary_operator(sp, kp)
        if kind == "lu":
            g = sla.lu_solve(op, rhs_x.T).T
        else:
            g = (op @ np.fft.fft(rhs_x, axis=-1).T).T
        return np.fft.fft(g, axis=-1)

    # -- application ------------------------------------------------------
    def apply(self, sp, f):
        """Apply the resolvent to a field (or a batch array ``(..., Mt, Mn)``)."""
        sp = _as_point(sp)
        values = f.values if isinstance(f, DiscreteField) else np.asarray(f, dtype=complex)
        shape = values.shape
        batch = values.reshape((-1,) + self.grid.shape)
        if not self.spec.constant:
            out = self._apply_frozen_operator(sp, batch)
        else:
            out = self._apply_constant(sp, batch)
        out = out.reshape(shape)
        return self.grid.field(out) if isinstance(f, DiscreteField) else out

    def _apply_constant(self, sp, batch):
        nb, Mt, Mn = batch.shape
        kp = self.kappa(sp)
        kplus, kminus, an = kp.kplus, kp.kminus, kp.a_n
        fh = np.fft.fft(batch, axis=1)
        data = np.zeros((nb * Mt, Mn + 1), dtype=complex)
        data[:, :Mn] = fh.reshape(nb * Mt, Mn)
        kpl = np.tile(kplus, nb)
        kmi = np.tile(kminus, nb)
        F, B = kernels.exp_sweeps(kpl, kmi, self.xn, data)
        amp = np.tile(1.0 / (an * (kplus + kminus)), nb)
        B0 = B[:, 0]
        decay = np.exp(-np.outer(kpl, self.xn[:Mn]))
        vh = amp[:, None] * (F[:, :Mn] + B[:, :Mn] - decay * B0[:, None])
        if not self.bspec.dirichlet:
            g1 = (-B0 / np.tile(an, nb)).reshape(nb, Mt)  # gamma_1 v, hat
            rhs = -self.phi1[None, :] * np.fft.ifft(g1, axis=1)
            gh = self._boundary_solve(sp, kp, rhs).reshape(nb * Mt)
            vh = vh + gh[:, None] * decay
        return np.fft.ifft(vh.reshape(nb, Mt, Mn), axis=1)

    def _apply_frozen_operator(self, sp, batch):
        """Frozen coefficients at each x'_j (approximate)."""
        nb, Mt, Mn = batch.shape
        kp = self.kappa(sp)  # arrays (Mt_x, Mt_xi)
        fh = np.fft.fft(batch, axis=1)
        phase = np.exp(1j * np.outer(self.xt, self.xi)) / Mt
        out = np.zeros_like(batch)
        for j in range(Mt):
            kplus, kminus, an = kp.kplus[j], kp.kminus[j], kp.a_n[j]
            data = np.zeros((nb * Mt, Mn + 1), dtype=complex)
            data[:, :Mn] = fh.reshape(nb * Mt, Mn)
            kpl, kmi = np.tile(kplus, nb), np.tile(kminus, nb)
            F, B = kernels.exp_sweeps(kpl, kmi, self.xn, data)
            amp = np.tile(1.0 / (an * (kplus + kminus)), nb)
            B0 = B[:, 0]
            decay = np.exp(-np.outer(kpl, self.xn[:Mn]))
            vh = amp[:, None] * (F[:, :Mn] + B[:, :Mn] - decay * B0[:, None])
            if not self.bspec.dirichlet:
                sigma = self.phi1[j] * kpl + self.phi0[j]
                g1 = -B0 / np.tile(an, nb)
                vh = vh + (-self.phi1[j] * g1 / sigma)[:, None] * decay
            out[:, j, :] = np.einsum("k,bkn->bn", phase[j], vh.reshape(nb, Mt, Mn))
        return out

    def boundary_residual(self, u):
        """``phi0 u + phi1 gamma_1 u`` at x_n = 0 (one-sided second-order difference)."""
        v = u.values if isinstance(u, DiscreteField) else u
        h = self.grid.hn
        dn = -(-3 * v[..., 0] + 4 * v[..., 1] - v[..., 2]) / (2 * h)
        return self.phi0 * v[..., 0] + self.phi1 * dn


def apply_resolvent(spec, bspec, sp, f, mode="exact"):
    return ResolventEngine(spec, bspec, f.grid, mode).apply(sp, f)


# ---------------------------------------------------------------------------
# probes


def sector_scan(engine, thetas, mus, trials, rng, power_iters=30, p=2.0, kt=None, kn=None):
    """Estimate ``||lambda R(lambda)||`` on rays; returns a list of row dicts.

    Sup over random smooth fields; at p = 2 each best field is refined by
    power iteration with ``R(conj(lambda))`` as adjoint.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    grid = engine.grid
    fields = np.stack([random_smooth_field(grid, rng, kt, kn).values for _ in range(trials)])
    rows = []
    for th in thetas:
        for mu in mus:
            sp = SpectralPoint(float(th), float(mu))
            lam = sp.lam
            try:
                U = engine.apply(sp, fields)
            except (AssemblyError, EllipticityError):
                continue
            norms_f = np.array([grid.field(v).norm(p) for v in fields])
            norms_u = np.array([grid.field(v).norm(p) for v in U])
            ratios = abs(lam) * norms_u / norms_f
            best = float(ratios.max())
            if p == 2.0 and power_iters:
                v = U[int(np.argmax(ratios))]
                adj = SpectralPoint(-sp.theta, sp.mu)
                for _ in range(power_iters):
                    w = engine.apply(adj, v)
                    nw = grid.field(w).norm()
                    if nw == 0:
                        break
                    v = w / nw
                    Rv = engine.apply(sp, v)
                    best = max(best, abs(lam) * grid.field(Rv).norm())
            rows.append({"theta": float(th), "mu": float(mu), "lambda_re": float(lam.real),
                         "lambda_im": float(lam.imag), "norm_est": best})
    return rows


def variation(values):
    v = np.asarray(values, dtype=float)
    return float((v.max() - v.min()) / v.max())


def trend_slope(mus, values):
    return float(np.polyfit(np.log(mus), np.log(values), 1)[0])


def _xi_probe_set(max_exp=24):
    return np.concatenate([[0.0], 2.0 ** np.arange(-4, max_exp + 1)])


def _min_abs_quadratic(c2, c1, c0):
    """``min over real t of |c2 t^2 + c1 t + c0|`` (vectorised over coefficient arrays)."""
    c2, c1, c0 = np.broadcast_arrays(c2, c1, c0)
    out = np.empty(c2.shape)
    for idx in np.ndindex(c2.shape):
        p = np.array([c2[idx], c1[idx], c0[idx]])
        dp = np.polyder(p)
        crit = np.polymul(np.conj(p), dp)
        r = np.roots(np.real(crit)) if np.any(np.real(crit)) else np.array([0.0])
        r = np.real(r[np.abs(np.imag(r)) < 1e-9 * (1 + np.abs(r))])
        cand = np.concatenate([r, [0.0]])
        out[idx] = np.min(np.abs(np.polyval(p, cand)))
    return out


def component_norm(component, spec, theta, mu, boundary_norm="besov", xi=None):
    """Exact operator norm of one frozen component at ``mu`` (sup over xi').

    ``boundary_norm='besov'`` measures boundary data in ``H^{-1/2}`` (the
    ``B^{-1/2}_2`` space), ``'l2'`` in plain L2.
    """
    xi = _xi_probe_set() if xi is None else xi
    if component == "pseudo":
        quad = boundary_quadratic(spec, 0.0, xi, mu, theta)
        return float(np.max(1.0 / _min_abs_quadratic(*quad)))
    kp = kappa_at(spec, 0.0, xi, mu, theta)
    w = (1.0 + xi**2) ** 0.5 if boundary_norm == "besov" else np.ones_like(xi)
    if component == "green":
        amp = np.abs(dirichlet_correction(kp).amplitude)
        vals = amp / (2.0 * np.sqrt(kp.kplus.real * kp.kminus.real))
    elif component == "poisson":
        vals = np.sqrt(w) / np.sqrt(2.0 * kp.kplus.real)
    elif component == "trace":
        vals = 1.0 / (np.abs(kp.a_n) * np.sqrt(2.0 * kp.kminus.real) * np.sqrt(w))
    else:
        raise ValueError(f"unknown component {component!r}")
    return float(np.max(vals))


EXPECTED_DECAY = {"pseudo": -2.0, "green": -2.0, "poisson": 0.0, "trace": 0.0}


def decay_probe(component, spec, bspec, theta, mus, boundary_norm="besov"):
    """Norms at each mu and the fitted log-log slope against ``<mu>``."""
    mus = np.asarray(mus, dtype=float)
    if mus.max() / mus.min() < 100 * (1 - 1e-12):
        raise ValueError("mu list must span at least two decades")
    norms = np.array([component_norm(component, spec, theta, m, boundary_norm) for m in mus])
    slope = float(np.polyfit(np.log(np.sqrt(1 + mus**2)), np.log(norms), 1)[0])
    return {"component": component, "mu": mus, "norm": norms, "slope": slope,
            "expected": EXPECTED_DECAY[component]}


# ---------------------------------------------------------------------------
# truncated I_theta integral


@dataclass
class HilbertProbeResult:
    mu_max: list
    norms: list
    ratios: list
    coarse_ratios: list = field(default_factory=list)

    @property
    def last_change(self):
        a, b = self.ratios[-2], self.ratios[-1]
        return abs(b - a) / max(abs(b), 1e-300)


def _gt_leading_apply(engine, theta, mu, uh_moment, s_source, s_phi1_sym):
    """``G^T_(-2),mu u`` given the moments ``int exp(-kappa_minus y) u_hat dy``."""
    grid = engine.grid
    Mt = grid.Mt
    kp = kappa_at(engine.spec, 0.0, grid.xi, mu, theta, principal_only=True)
    if s_source == "frozen":
        sigma = engine.phi1[:, None] * kp.kplus[None, :] + engine.phi0[:, None]
        s = engine.phi1[:, None] / sigma
    else:
        X, XI = np.meshgrid(grid.xt, grid.xi, indexing="ij")
        s = s_phi1_sym(X, XI, np.full(X.shape, mu))
    amp = s / kp.a_n[None, :]
    phase = np.exp(1j * np.outer(grid.xt, grid.xi)) / Mt
    coef = phase * amp * uh_moment(kp)[None, :]            # (x_j, xi_k)
    decay = np.exp(-np.outer(kp.kplus, grid.xn))           # (xi_k, x_n)
    return coef @ decay


def hilbert_bound_probe(engine, u, mu_maxes, theta=np.pi / 2, mu_min=1e-3,
                        ratio=2 ** 0.125, s_source="frozen", s_phi1_sym=None, tol=0.02):
    """Norms of ``int_0^mu_max mu G^T_(-2),mu u dmu`` for each ``mu_max``.

    Geometric mu-grid with the given ratio (trapezoid in log mu); a second
    pass with ratio squared checks quadrature convergence.
    """
    grid = engine.grid
    unorm = u.norm()
    if unorm == 0:
        raise ValueError("u must be nonzero")
    mu_maxes = sorted(float(m) for m in mu_maxes)
    if engine.bspec.dirichlet:
        z = [0.0] * len(mu_maxes)
        return HilbertProbeResult(mu_maxes, z, z, z)
    uh = np.fft.fft(u.values, axis=0)
    data = np.zeros((grid.Mt, grid.Mn + 1), dtype=complex)
    data[:, :grid.Mn] = uh

    def moment(kp):
        _, B = kernels.exp_sweeps(kp.kplus, kp.kminus, grid.xn_closed, data)
        return B[:, 0]

    def run(r):
        n = int(np.ceil(np.log(mu_maxes[-1] / mu_min) / np.log(r))) + 1
        mus = mu_min * r ** np.arange(n)
        mus[-1] = min(mus[-1], mu_maxes[-1])
        mus = np.unique(np.concatenate([mus[mus <= mu_maxes[-1]], mu_maxes]))
        vals = [mu * mu * _gt_leading_apply(engine, theta, mu, moment, s_source, s_phi1_sym)
                for mu in mus]
        logm = np.log(mus)
        acc = np.zeros(grid.shape, dtype=complex)
        # the piece over [0, mu_min] is approximated by mu_min/2 * integrand/mu at mu_min
        acc += 0.5 * vals[0]
        out = {}
        for i in range(1, len(mus)):
            acc = acc + 0.5 * (logm[i] - logm[i - 1]) * (vals[i] + vals[i - 1])
            if mus[i] in mu_maxes:
                out[mus[i]] = grid.field(acc).norm() / unorm
        return [out[m] for m in mu_maxes]

    fine = run(ratio)
    coarse = run(ratio**2)
    res = HilbertProbeResult(mu_maxes, [r * unorm for r in fine], fine, coarse)
    qerr = abs(fine[-1] - coarse[-1]) / max(fine[-1], 1e-300)
    if qerr > tol:
        raise InstabilityError(f"mu-quadrature not converged (relative change {qerr:.3g})",
                               diagnostics={"fine": fine, "coarse": coarse})
    return res
