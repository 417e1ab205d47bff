"""Finite-difference reference solver on the torus times a truncated interval.

Second-order centred differences; ghost-point elimination for
``phi0 u + phi1 gamma_1 u = 0`` at ``x_n = 0`` and homogeneous Dirichlet at
``x_n = L_n``. Boundary rows are scaled so that a vanishing ``phi1`` turns
them continuously into ``u_0 = 0``. The system for a resolvent is
``(M - lam B) u = B f`` with ``B`` diagonal (the row scale on boundary rows,
1 elsewhere).
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError, SpecError
from .grid import DiscreteField

MAX_DENSE = 4096


@dataclass
class FDOperator:
    grid: object
    M: sp.csr_matrix
    Bdiag: np.ndarray
    symmetric_weights: np.ndarray = None  # W with W A_h symmetric, when available

    @property
    def size(self):
        return self.M.shape[0]

    @property
    def dirichlet_rows(self):
        return np.nonzero(self.Bdiag == 0)[0]


def _coeff_grid(spec, grid):
    xt, xn = grid.mesh()
    x = np.stack([xt, xn], axis=-1)
    a, b, c = spec.coefficients(x)
    return a, b, c


def assemble(spec, bspec, grid):
    """Sparse FD matrix for ``A`` with the boundary operator of ``bspec``."""
    if spec.n != 2:
        raise NotImplementedError("the oracle is two-dimensional")
    a, b, c = _coeff_grid(spec, grid)
    if np.any(np.abs(a[..., 0, 1]) > 0):
        raise NotImplementedError("mixed second derivatives are not discretised")
    Mt, Mn = grid.shape
    ht, h = grid.ht, grid.hn
    xt = grid.xt
    phi0 = bspec.phi0_at(xt)
    phi1 = bspec.phi1_at(xt)
    # rounding residue of a true zero (e.g. sin^2 at pi) must give a Dirichlet row
    phi1 = np.where(phi1 <= 1e-14 * (phi0 + phi1), 0.0, phi1)
    tot = phi0 + phi1
    if np.any(tot < bspec.degeneracy_floor * (1 - 1e-12)):
        raise SpecError("phi0 + phi1 below the degeneracy floor at a boundary node")
    if np.any(phi1 < 0):
        raise SpecError("phi1 < 0 at a boundary node")

    a11, a22 = a[..., 0, 0], a[..., 1, 1]
    b1, b2 = b[..., 0], b[..., 1]
    idx = np.arange(Mt * Mn).reshape(Mt, Mn)
    jp = np.roll(idx, -1, axis=0)
    jm = np.roll(idx, 1, axis=0)

    rows, cols, vals = [], [], []

    def add(r, cc, v):
        rows.append(r.ravel())
        cols.append(cc.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel().astype(complex))

    # tangential part (every row); D = -i d
    add(idx, idx, 2 * a11 / ht**2 + c)
    add(idx, jp, -a11 / ht**2 - 1j * b1 / (2 * ht))
    add(idx, jm, -a11 / ht**2 + 1j * b1 / (2 * ht))

    # normal part, interior rows i >= 1
    I = idx[:, 1:]
    add(I, I, 2 * a22[:, 1:] / h**2)
    add(I, idx[:, :-1], -a22[:, 1:] / h**2 + 1j * b2[:, 1:] / (2 * h))
    Iu = idx[:, 1:-1]
    add(Iu, idx[:, 2:], -a22[:, 1:-1] / h**2 - 1j * b2[:, 1:-1] / (2 * h))

    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(Mt * Mn, Mt * Mn))

    # boundary rows: ghost elimination, then scale by w
    an = a22[:, 0]
    w = phi1 * h / (2 * an * tot)
    scale = np.ones(Mt * Mn)
    scale[idx[:, 0]] = w
    M = sp.diags(scale) @ M
    M = M.tolil()
    b0 = idx[:, 0]
    b1i = idx[:, 1]
    for j in range(Mt):
        r = b0[j]
        M[r, r] = M[r, r] + phi0[j] / tot[j] + phi1[j] / (h * tot[j]) \
            - 1j * b2[j, 0] * phi0[j] * h / (2 * an[j] * tot[j])
        M[r, b1i[j]] = M[r, b1i[j]] - phi1[j] / (h * tot[j])
    M = M.tocsr()
    M.eliminate_zeros()

    sym = None
    if spec.constant and np.all(np.asarray(spec.b) == 0):
        weights = np.ones(Mt * Mn)
        weights[b0] = 0.5
        sym = weights
    return FDOperator(grid, M, scale, sym)


def _rhs(op, f):
    return op.Bdiag * np.asarray(f, dtype=complex).ravel()


def solve_resolvent(op, lam, f, tol=1e-10):
    """Solve ``(A_h - lam) u = f``; returns a :class:`DiscreteField`."""
    values = f.values if isinstance(f, DiscreteField) else np.asarray(f)
    A = (op.M - lam * sp.diags(op.Bdiag)).tocsc()
    rhs = _rhs(op, values)
    try:
        u = spla.splu(A).solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"factorisation failed at lambda = {lam}: {exc}") from exc
    res = np.linalg.norm(A @ u - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"relative residual {res:.3g} exceeds {tol:g}", residual=res)
    return op.grid.field(u.reshape(op.grid.shape))


def apply_operator(op, u):
    """``A_h u`` on rows with ``B != 0`` (zero on eliminated Dirichlet rows)."""
    values = u.values if isinstance(u, DiscreteField) else np.asarray(u)
    Mu = op.M @ values.ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(op.Bdiag != 0, Mu / op.Bdiag, 0.0)
    return out.reshape(op.grid.shape)


def solve_with_boundary_data(op, bspec, lam, f, g):
    """Solve ``(A_h - lam) u = f`` with ``T u = g`` (homogeneous A coefficients on the wall row)."""
    grid = op.grid
    xt = grid.xt
    phi0, phi1 = bspec.phi0_at(xt), bspec.phi1_at(xt)
    values = f.values if isinstance(f, DiscreteField) else np.asarray(f)
    rhs = _rhs(op, values).reshape(grid.shape).copy()
    # b2 contributions at the wall are ignored here (operators with b = 0 only)
    rhs[:, 0] += np.asarray(g) / (phi0 + phi1)
    A = (op.M - lam * sp.diags(op.Bdiag)).tocsc()
    u = spla.splu(A).solve(rhs.ravel())
    return grid.field(u.reshape(grid.shape))


def dtn_eigenvalue(op, bspec, k, lam=0.0):
    """Numerical Dirichlet-to-Neumann multiplier at tangential mode ``k``.

    ``op`` must carry a Dirichlet boundary; uses a one-sided second-order
    difference for ``-d/dx_n``.
    """
    grid = op.grid
    g = np.exp(1j * grid.xi[k] * grid.xt)
    u = solve_with_boundary_data(op, bspec, lam, np.zeros(grid.shape), g).values
    h = grid.hn
    dn = -(-3 * u[:, 0] + 4 * u[:, 1] - u[:, 2]) / (2 * h)
    return complex(np.vdot(g, dn) / np.vdot(g, g))


class MatrixFunction:
    """Dense spectral decomposition of ``A_h`` restricted to non-Dirichlet rows."""

    def __init__(self, op, cond_max=1e8):
        n = op.size
        keep = np.nonzero(op.Bdiag != 0)[0]
        if keep.size > MAX_DENSE:
            raise ValueError(f"{keep.size} unknowns exceed the dense limit {MAX_DENSE}")
        self.op, self.keep = op, keep
        Mr = op.M[keep][:, keep].toarray()
        Ah = Mr / op.Bdiag[keep][:, None]
        if op.symmetric_weights is not None and np.allclose(Ah.imag, 0):
            s = np.sqrt(op.symmetric_weights[keep])
            S = (s[:, None] * Ah.real) / s[None, :]
            S = 0.5 * (S + S.T)
            ev, Q = np.linalg.eigh(S)
            self.ev = ev.astype(complex)
            self.V = Q / s[:, None]
            self.Vinv = Q.T * s[None, :]
            self.cond = 1.0
        else:
            ev, V = sla.eig(Ah)
            cond = np.linalg.cond(V)
            if not np.isfinite(cond) or cond > cond_max:
                raise SolverError(f"eigenbasis condition number {cond:.3g} exceeds {cond_max:g}")
            self.ev, self.V, self.Vinv, self.cond = ev, V, np.linalg.inv(V), cond
        self.n = n

    def __call__(self, f, u):
        values = u.values if isinstance(u, DiscreteField) else np.asarray(u)
        ur = values.ravel()[self.keep]
        out = np.zeros(self.n, dtype=complex)
        out[self.keep] = self.V @ (f(self.ev) * (self.Vinv @ ur))
        return self.op.grid.field(out.reshape(self.op.grid.shape))


def matrix_function(op, f, u):
    return MatrixFunction(op)(f, u)


def _euler(op, lu, dt, u, steps):
    B = op.Bdiag
    for _ in range(steps):
        u = lu.solve(B * u)
    return u


def semigroup_step(op, t, u0, steps):
    """``exp(-t A_h) u0`` by implicit Euler with one Richardson extrapolation."""
    if t <= 0:
        raise ValueError("t must be positive")
    values = u0.values if isinstance(u0, DiscreteField) else np.asarray(u0)
    u = values.ravel().astype(complex)
    Bm = sp.diags(op.Bdiag)
    dt = t / steps
    coarse = _euler(op, spla.splu((Bm + dt * op.M).tocsc()), dt, u, steps)
    fine = _euler(op, spla.splu((Bm + 0.5 * dt * op.M).tocsc()), 0.5 * dt, u, 2 * steps)
    return op.grid.field((2 * fine - coarse).reshape(op.grid.shape))
