"""Bounded functional calculus ``f(A_T)`` by contour quadrature.

The contour is the boundary of the sector ``|arg lambda| < theta'``: the ray
``mu^2 exp(i theta')`` traversed inwards, then ``mu^2 exp(-i theta')``
outwards, so the spectrum on the positive axis lies to its left. With
``R(lambda) = (A - lambda)^{-1}``,

    f(A) u = i/(2 pi) * integral f(lambda) R(lambda) u dlambda.

Quadrature: composite Gauss-Legendre panels in ``log mu`` on each ray.
On nodes with ``|lambda| >= 1`` the integrand is replaced by
``f (R u + u/lambda)``, which decays one power faster; the subtracted piece
``int f/lambda`` is a scalar integral done adaptively out to infinity. The
head ``|lambda| < mu_min^2`` is added using the innermost resolvent.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import AssemblyError, EllipticityError, InstabilityError, SolverError, SpecError
from .grid import DiscreteField, random_smooth_field
from .resolvent import SpectralPoint

PANEL = 16
CHUNK = 32  # nodes per accumulation product
SPLIT = 1.0  # |lambda| at which the subtracted integrand takes over


@dataclass
class HInftyFunction:
    """Holomorphic function on a sector with its decay data.

    ``sup_norm`` is the supremum over the closed sector of half-angle
    ``sector`` (the contour angle it was built for). ``bound_constant`` is the
    smallest C found with ``|f| <= C / (|lam|^eps + |lam|^-eps)`` on the
    validation mesh; it is None for functions that do not decay at 0.
    """

    eval: object
    epsilon: float
    sup_norm: float
    name: str = "f"
    sector: float = 3 * np.pi / 4
    bound_constant: float = None
    real_symmetric: bool = True  # f(conj z) = conj f(z)
    _scalars: dict = field(default_factory=dict, repr=False, compare=False)

    def __call__(self, lam):
        return self.eval(np.asarray(lam, dtype=complex))

    def __mul__(self, other):
        f, g = self.eval, other.eval
        eps = min(self.epsilon, other.epsilon)
        return HInftyFunction(lambda z: f(z) * g(z), eps, self.sup_norm * other.sup_norm,
                              f"{self.name}*{other.name}", self.sector, None,
                              self.real_symmetric and other.real_symmetric)

    def hstar_constant(self, mesh):
        lam = np.asarray(mesh, dtype=complex)
        r = np.abs(lam)
        w = r**self.epsilon + r ** (-self.epsilon)
        return float(np.max(np.abs(self(lam)) * w))

    def validate(self, mesh, C=None):
        """Check the decay bound on ``mesh``; returns the constant used."""
        need = self.hstar_constant(mesh)
        if not np.isfinite(need):
            raise SpecError(f"{self.name}: non-finite values on the validation mesh")
        if C is not None and need > C * (1 + 1e-12):
            raise SpecError(f"{self.name}: decay bound needs C = {need:.6g} > {C:g}")
        return need


def sector_mesh(theta_p, count=1000, rmin=1e-6, rmax=1e6):
    """Points on both rays ``r exp(+-i theta')``, log-spaced in r (includes r = 1)."""
    half = count // 2
    r = np.geomspace(rmin, rmax, half if half % 2 else half + 1)
    return np.concatenate([r * np.exp(1j * theta_p), r * np.exp(-1j * theta_p)])


def family_member(eps, s, theta_p=3 * np.pi / 4):
    """``lam -> (s lam)^eps / (1 + s lam)^(2 eps)`` (principal branches)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if s <= 0:
        raise ValueError("scale s must be positive")

    def ev(lam):
        z = s * lam
        return z**eps / (1 + z) ** (2 * eps)

    sup = (2.0 + 2.0 * np.cos(theta_p)) ** (-eps)
    f = HInftyFunction(ev, eps, sup, f"s={s:.6g}", theta_p)
    f.bound_constant = f.validate(sector_mesh(theta_p))
    return f


def hstar_family(eps, count, theta_p=3 * np.pi / 4, s_range=(1e-2, 1e2)):
    """``count`` members with scales geometric over ``s_range``.

    Each member carries its own validated decay constant; it exceeds 1 for
    every member (``max(s, 1/s)^eps`` at the ends, and the peak near
    ``|s lam| = 1`` is larger than 1/2 on wide sectors).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    scales = np.geomspace(*s_range, count) if count > 1 else np.array([1.0])
    return [family_member(eps, float(s), theta_p) for s in scales]


def resolvent_function(z0=-1.0, theta_p=3 * np.pi / 4):
    """``lam -> 1/(lam - z0)``; no decay at zero."""
    z0 = complex(z0)

    def ev(lam):
        return 1.0 / (lam - z0)

    if z0.imag != 0 or z0.real >= 0:
        raise ValueError("pole must lie on the negative axis")
    # distance from the pole to the closed sector
    dist = abs(z0) * (np.sin(np.pi - theta_p) if theta_p > np.pi / 2 else 1.0)
    sup = 1.0 / dist
    return HInftyFunction(ev, 0.0, sup, f"1/(lam-{z0.real:g})", theta_p)


def exponential_function(t, theta_p=np.pi / 4):
    if theta_p >= np.pi / 2:
        raise ValueError("exp(-t lam) needs a contour angle below pi/2")
    return HInftyFunction(lambda lam: np.exp(-t * lam), 0.0, 1.0, f"exp(-{t:g} lam)", theta_p)


@dataclass
class ContourQuadrature:
    theta_p: float
    mu_min: float
    mu_max: float
    N: int
    mu: np.ndarray = field(repr=False, default=None)
    wlog: np.ndarray = field(repr=False, default=None)
    lam: np.ndarray = field(repr=False, default=None)      # (2, N): upper, lower
    weights: np.ndarray = field(repr=False, default=None)  # dlambda weights, (2, N)

    def refine(self):
        return build_contour(self.theta_p, self.mu_min, self.mu_max, 2 * self.N)

    def validation_error(self):
        """Relative error of the rule on ``lam^(-3/2)`` against the closed form."""
        got = np.sum(self.weights * self.lam ** (-1.5))
        anti = lambda z: -2.0 * z ** (-0.5)
        e = np.exp(1j * self.theta_p)
        lo, hi = self.mu_min**2, self.mu_max**2
        exact = (anti(lo * e) - anti(hi * e)) + (anti(hi / e) - anti(lo / e))
        return float(abs(got - exact) / abs(exact))

    def points(self):
        """Flattened ``(lam, weight)`` in summation order."""
        return self.lam.ravel(), self.weights.ravel()


def build_contour(theta_p, mu_min=1e-3, mu_max=1e3, N=512):
    """Gauss-Legendre panels (16 nodes) in ``log mu``; ``N`` nodes per ray."""
    if not 0 < theta_p < np.pi:
        raise ValueError("contour angle must lie in (0, pi)")
    if not 0 < mu_min < mu_max:
        raise ValueError("need 0 < mu_min < mu_max")
    if N < 16:
        raise ValueError("need at least 16 nodes per ray")
    panels = max(1, N // PANEL)
    counts = np.full(panels, N // panels)
    counts[: N % panels] += 1
    edges = np.linspace(np.log(mu_min), np.log(mu_max), panels + 1)
    t, w = [], []
    for k, n in enumerate(counts):
        x, wx = np.polynomial.legendre.leggauss(int(n))
        a, b = edges[k], edges[k + 1]
        t.append(0.5 * (b - a) * x + 0.5 * (a + b))
        w.append(0.5 * (b - a) * wx)
    t, w = np.concatenate(t), np.concatenate(w)
    mu = np.exp(t)
    e = np.exp(1j * theta_p)
    lam = np.stack([mu**2 * e, mu**2 / e])
    weights = np.stack([-2 * mu**2 * e * w, 2 * mu**2 / e * w])
    q = ContourQuadrature(theta_p, mu_min, mu_max, N, mu, w, lam, weights)
    err = q.validation_error()
    if err > 1e-8:
        raise ValueError(f"contour rule fails its validation integral (relative error {err:.2e})")
    return q


def _ray_integral(fn, theta_p, sign, r0, r1):
    """``int fn(lam) dlam`` along ``r exp(sign i theta')`` from r0 to r1.

    ``r0 = 0`` and ``r1 = inf`` are cut off where the integrand is far below
    double precision for the decay rates used here.
    """
    e = np.exp(sign * 1j * theta_p)

    def g(t):
        r = np.exp(t)
        with np.errstate(all="ignore"):
            v = complex(fn(r * e) * r * e)
        return v if np.isfinite(v) else 0.0

    a = np.log(r0) if r0 > 0 else np.log(r1) - 60.0
    b = np.log(r1) if np.isfinite(r1) else np.log(r0) + 300.0
    pts = [p for p in np.arange(np.ceil(a / 10) * 10, b, 10.0) if a < p < b]
    val, _ = quad(g, a, b, complex_func=True, limit=800, points=pts or None,
                  epsabs=1e-15, epsrel=1e-12)
    return val


def _scalar_corrections(f, q):
    """Subtracted-tail scalar and the head integrals for one function."""
    key = (q.theta_p, q.mu_min)
    if key in f._scalars:
        return f._scalars[key]
    th = q.theta_p
    split = max(SPLIT, q.mu_min**2)
    inv = lambda lam: f(lam) / lam
    # upper ray runs inwards, lower outwards
    outer = -_ray_integral(inv, th, 1, split, np.inf) + _ray_integral(inv, th, -1, split, np.inf)
    head_up = -_ray_integral(f, th, 1, 0, q.mu_min**2)
    head_lo = _ray_integral(f, th, -1, 0, q.mu_min**2)
    f._scalars[key] = (outer, head_up, head_lo)
    return f._scalars[key]


def apply_functions(funcs, q, u, engine, conjugate_lower=False):
    """``f(A) u`` for several functions sharing resolvent evaluations.

    ``u`` is a field or a batch array ``(..., Mt, Mn)``. Returns an array
    ``(len(funcs),) + u.shape``. Nodes are visited in a fixed order so the
    result does not depend on anything but the inputs.

    ``conjugate_lower`` takes the lower ray from the upper one, which is
    valid for real operators and real data only.
    """
    values = u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=complex)
    lam, W = q.points()
    outer = np.abs(lam) >= max(SPLIT, q.mu_min**2)
    nf = len(funcs)
    if nf == 0:
        return np.zeros((0,) + values.shape, dtype=complex)
    F = np.array([f(lam) for f in funcs])  # (nf, nodes)
    if not np.all(np.isfinite(F)):
        raise SpecError("function values are not finite on the contour")
    N = q.N
    # innermost node on each ray (nodes are sorted by mu)
    first = (int(np.argmin(np.abs(lam[:N]))), N + int(np.argmin(np.abs(lam[N:]))))
    upper, R_inner = {}, {}
    coef = W[None, :] * F
    flat = values.reshape(-1)
    acc = np.zeros((nf, flat.size), dtype=complex)
    block = []
    for k in range(lam.size):
        if conjugate_lower and k >= N:
            Ru = np.conj(upper.pop(k - N))
        else:
            Ru = _resolvent(engine, lam[k], values).reshape(-1)
            if conjugate_lower:
                upper[k] = Ru
        if k in first:
            R_inner[k] = Ru
        block.append(Ru + flat / lam[k] if outer[k] else Ru)
        if len(block) == CHUNK or k == lam.size - 1:
            acc += coef[:, k + 1 - len(block):k + 1] @ np.stack(block)
            block = []
    for i, f in enumerate(funcs):
        c_out, h_up, h_lo = _scalar_corrections(f, q)
        acc[i] += -c_out * flat + h_up * R_inner[first[0]] + h_lo * R_inner[first[1]]
    return (acc * (1j / (2 * np.pi))).reshape((nf,) + values.shape)


def _resolvent(engine, lam, values):
    try:
        return engine.apply(SpectralPoint.from_lambda(lam), values)
    except (AssemblyError, EllipticityError, SolverError, SpecError) as exc:
        raise AssemblyError(f"resolvent failed at contour node lambda = {lam:.6g}: {exc}",
                            frequencies=[lam]) from exc


def apply_function(f, q, u, engine):
    out = apply_functions([f], q, u, engine)[0]
    return engine.grid.field(out) if isinstance(u, DiscreteField) else out


def tail_fraction(f, q, u, engine):
    """Share of the result carried by nodes with ``mu > mu_max / 2``."""
    values = u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=complex)
    lam, W = q.points()
    mu = np.sqrt(np.abs(lam))
    total = apply_function(f, q, values, engine)
    tail = np.zeros_like(values)
    for k in np.nonzero(mu > q.mu_max / 2)[0]:
        Ru = _resolvent(engine, lam[k], values)
        term = Ru + values / lam[k] if abs(lam[k]) >= SPLIT else Ru
        tail += W[k] * f(lam[k]) * term
    tail *= 1j / (2 * np.pi)
    g = engine.grid
    return g.field(tail).norm() / max(g.field(total).norm(), 1e-300)


@dataclass
class BoundProbeResult:
    C_est: float
    C_refined: float
    refinement_delta: float
    rows: list  # dicts: family_member, eps, sup_norm, ratio

    def summary(self):
        return {"C_est": self.C_est, "C_refined": self.C_refined,
                "refinement_delta": self.refinement_delta, "members": len(self.rows)}


def _ratios(funcs, q, fields, engine):
    out = apply_functions(funcs, q, fields, engine)
    g = engine.grid
    un = np.array([g.field(v).norm() for v in fields])
    R = np.empty((len(funcs), len(fields)))
    for i, f in enumerate(funcs):
        for j in range(len(fields)):
            R[i, j] = g.field(out[i, j]).norm() / (f.sup_norm * un[j])
    return R


def bound_probe(family, q, engine, trials=3, rng=None, fields=None, tol=0.01, kt=None, kn=None):
    """Largest ``||f(A) u|| / (||f||_inf ||u||)`` over the family and test fields.

    Recomputed on the refined contour; a relative change above ``tol``
    raises :class:`InstabilityError`.
    """
    if not family:
        raise ValueError("family must be nonempty")
    if fields is None:
        if rng is None:
            raise ValueError("need rng or explicit fields")
        fields = np.stack([random_smooth_field(engine.grid, rng, kt, kn).values
                           for _ in range(trials)])
    fields = np.asarray(fields, dtype=complex)
    R1 = _ratios(family, q, fields, engine)
    R2 = _ratios(family, q.refine(), fields, engine)
    c1, c2 = float(R1.max()), float(R2.max())
    delta = abs(c2 - c1) / max(c2, 1e-300)
    rows = [{"family_member": f.name, "eps": f.epsilon, "sup_norm": f.sup_norm,
             "ratio": float(R1[i].max())} for i, f in enumerate(family)]
    res = BoundProbeResult(c1, c2, delta, rows)
    if not np.isfinite(c1) or delta > tol:
        raise InstabilityError(f"bound estimate moved by {delta:.3g} under contour refinement",
                               diagnostics=res.summary())
    return res


def multiplicativity_defect(f, g, q, u, engine):
    """Relative gap between ``(fg)(A) u`` and ``f(A) g(A) u``."""
    values = u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=complex)
    fg = apply_function(f * g, q, values, engine)
    gu = apply_function(g, q, values, engine)
    f_gu = apply_function(f, q, gu, engine)
    G = engine.grid
    return G.field(fg - f_gu).norm() / max(G.field(fg).norm(), 1e-300)
