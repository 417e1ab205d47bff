"""Boundary quadratic in the normal covariable and its two roots.

At a boundary point the full symbol ``a_theta(x', 0, xi', xi_n, zeta)`` is a
quadratic ``c2 xi_n^2 + c1 xi_n + c0``. Its root in the upper half plane is
``i kappa_plus`` and the one in the lower half plane is ``-i kappa_minus``.
"""
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import EllipticityError, SpecError
from .symbols import TangentialSymbol

THETA_MAX = np.pi - 0.01

Coefficient = Union[float, np.ndarray, Callable]


def _eval_coeff(c, x, shape):
    """Evaluate a constant or callable coefficient at points ``x`` (..., n)."""
    if callable(c):
        return np.asarray(c(x), dtype=float)
    c = np.asarray(c, dtype=float)
    return np.broadcast_to(c, x.shape[:-1] + shape)


@dataclass
class EllipticOperatorSpec:
    """``A = sum a^{kl} D_k D_l + sum b^k D_k + c0 + shift`` on the half space.

    Coefficients are constants or callables of ``x`` with shape ``(..., n)``.
    The last coordinate is the normal one.
    """

    n: int = 2
    a: Coefficient = None
    b: Coefficient = None
    c0: Coefficient = 0.0
    shift: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise SpecError("dimension must be positive")
        if self.a is None:
            self.a = np.eye(self.n)
        if self.b is None:
            self.b = np.zeros(self.n)
        if self.shift < 0:
            raise SpecError("shift must be >= 0")
        if not callable(self.a) and np.shape(self.a) != (self.n, self.n):
            raise SpecError(f"a must be {self.n}x{self.n}")
        if not callable(self.b) and np.shape(self.b) != (self.n,):
            raise SpecError(f"b must have length {self.n}")

    @property
    def constant(self):
        return not any(callable(c) for c in (self.a, self.b, self.c0))

    def coefficients(self, x):
        """``(a, b, c)`` at points ``x`` (..., n); ``c`` includes the shift."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.n,):
            x = x[..., None] if self.n == 1 else x
        a = _eval_coeff(self.a, x, (self.n, self.n))
        b = _eval_coeff(self.b, x, (self.n,))
        c = _eval_coeff(self.c0, x, ()) + self.shift
        return a, b, c

    def boundary_point(self, xp):
        """Lift tangential points (..., n-1) to the boundary (..., n); n = 2 takes plain arrays."""
        xp = np.asarray(xp, dtype=float)
        if self.n == 2:
            xp = xp[..., None]
        return np.concatenate([xp, np.zeros(xp.shape[:-1] + (1,))], axis=-1)

    def validate(self, x, a_min=None):
        """Check symmetry, positivity and finiteness at the sample points ``x``.

        Returns the smallest eigenvalue of ``a`` found.
        """
        a, b, c = self.coefficients(x)
        for name, v in (("a", a), ("b", b), ("c0", c)):
            if not np.all(np.isfinite(v)):
                raise SpecError(f"coefficient {name} is not finite on the sample")
        if np.max(np.abs(a - np.swapaxes(a, -1, -2)), initial=0.0) > 1e-12:
            raise SpecError("a is not symmetric")
        lo = float(np.min(np.linalg.eigvalsh(a)))
        if lo <= 0 or (a_min is not None and lo < a_min):
            raise SpecError(f"a is not uniformly positive definite (min eigenvalue {lo:g})")
        return lo


def laplacian(n=2, shift=0.0):
    """``-Laplace + shift``."""
    return EllipticOperatorSpec(n=n, shift=shift)


def validate_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) > THETA_MAX):
        raise SpecError(f"|theta| must be <= pi - 0.01, got {theta}")
    return theta


def boundary_quadratic(spec, xp, xi, zeta, theta, principal_only=False):
    """Coefficients ``(c2, c1, c0)`` of ``a_theta`` as a polynomial in xi_n.

    ``xp`` and ``xi`` carry the tangential coordinates in their last axis;
    for n = 2 every entry is one tangential point (no component axis).
    """
    validate_theta(theta)
    n = spec.n
    x = spec.boundary_point(xp)
    xi = np.asarray(xi, dtype=float)
    if n == 2:
        xi = xi[..., None]
    a, b, c = spec.coefficients(x)
    at = a[..., : n - 1, : n - 1]
    c2 = a[..., n - 1, n - 1].astype(complex)
    c1 = 2.0 * np.einsum("...j,...j->...", a[..., : n - 1, n - 1], xi).astype(complex)
    c0 = np.einsum("...j,...jk,...k->...", xi, at, xi).astype(complex)
    if not principal_only:
        c1 = c1 + b[..., n - 1]
        c0 = c0 + np.einsum("...j,...j->...", b[..., : n - 1], xi) + c
    c0 = c0 + np.exp(1j * theta) * np.square(zeta)
    c2, c1, c0 = np.broadcast_arrays(c2, c1, c0)
    return c2, c1, c0


@dataclass
class KappaPair:
    """Decay rates of the two boundary roots (arrays allowed)."""

    kplus: np.ndarray
    kminus: np.ndarray
    a_n: np.ndarray
    theta: float = 0.0
    margin: float = 0.0

    def __post_init__(self):
        self.kplus, self.kminus, self.a_n = np.broadcast_arrays(
            np.asarray(self.kplus, dtype=complex), np.asarray(self.kminus, dtype=complex),
            np.asarray(self.a_n, dtype=complex))

    def conj(self):
        return KappaPair(np.conj(self.kplus), np.conj(self.kminus), np.conj(self.a_n),
                         -self.theta, self.margin)

    def residuals(self, quad):
        """Relative residuals of ``i kappa_plus`` and ``-i kappa_minus`` in ``quad``."""
        c2, c1, c0 = quad
        out = []
        for r in (1j * self.kplus, -1j * self.kminus):
            terms = np.abs(c2 * r * r) + np.abs(c1 * r) + np.abs(c0)
            out.append(np.abs(c2 * r * r + c1 * r + c0) / terms)
        return out[0], out[1]


def kappa_roots(quad, theta=0.0):
    """Solve the boundary quadratic and label the roots.

    Raises :class:`EllipticityError` if a root is real or both lie on the
    same side of the real axis.
    """
    c2, c1, c0 = (np.asarray(c, dtype=complex) for c in quad)
    if np.any(c2 == 0):
        raise EllipticityError("leading coefficient vanishes")
    disc = np.sqrt(c1 * c1 - 4.0 * c2 * c0)
    # pick the sign that avoids cancellation
    sgn = np.where(np.real(np.conj(c1) * disc) >= 0, 1.0, -1.0)
    q = -0.5 * (c1 + sgn * disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = q / c2
        r2 = np.where(q != 0, c0 / q, 0.0)
    upper = np.where(np.imag(r1) >= np.imag(r2), r1, r2)
    lower = np.where(np.imag(r1) >= np.imag(r2), r2, r1)
    bad = (np.imag(upper) <= 0) | (np.imag(lower) >= 0) | ~np.isfinite(upper) | ~np.isfinite(lower)
    if np.any(bad):
        idx = np.unravel_index(np.argmax(bad), np.shape(bad)) if np.ndim(bad) else ()
        raise EllipticityError(
            f"boundary quadratic has a real root or no root pair straddling the real axis "
            f"(roots {complex(np.asarray(r1)[idx]):.6g}, {complex(np.asarray(r2)[idx]):.6g})",
            witness=idx)
    return KappaPair(-1j * upper, 1j * lower, c2, float(np.asarray(theta).ravel()[0])
                     if np.ndim(theta) else float(theta))


def kappa_at(spec, xp, xi, zeta, theta, principal_only=False):
    """Shortcut: quadratic plus roots."""
    return kappa_roots(boundary_quadratic(spec, xp, xi, zeta, theta, principal_only), theta)


def ellipticity_margin(spec, theta, lattice, principal_only=True):
    """``omega = min Re kappa_pm / |(xi', zeta)| / 5`` over the lattice."""
    x, xi, zeta, _ = lattice.points()
    r = np.hypot(xi, zeta)
    if np.any(r == 0):
        raise ValueError("lattice must exclude the origin")
    kp = kappa_at(spec, x, xi, zeta, theta, principal_only)
    ratio = np.minimum(kp.kplus.real, kp.kminus.real) / r
    k = int(np.argmin(ratio))
    omega = float(ratio[k]) / 5.0
    if omega <= 0:
        raise EllipticityError(
            f"non-positive ellipticity margin at (x', xi', zeta) = ({x[k]}, {xi[k]}, {zeta[k]})",
            witness=(float(x[k]), float(xi[k]), float(zeta[k])))
    return omega


def kappa_symbol(spec, theta, which="plus", principal_only=False, period=None):
    """``kappa_plus`` (or ``kappa_minus``) as an order-1 tangential symbol (n = 2)."""
    if spec.n != 2:
        raise NotImplementedError("tangential symbols are implemented for n = 2")
    validate_theta(theta)

    def func(x, xi, zeta):
        kp = kappa_at(spec, x, xi, zeta, theta, principal_only)
        return kp.kplus if which == "plus" else kp.kminus

    return TangentialSymbol(func, 1.0, (1.0, 0.0), period=period,
                            x_independent=spec.constant, name=f"kappa_{which}")
