"""Frozen-coefficient kernels in the normal variable for the Dirichlet problem.

Every kernel is a closed-form exponential built from a :class:`KappaPair`.
Conventions: the boundary is ``x_n = 0``, the domain ``x_n > 0``, and the
normal trace ``gamma_1`` is the exterior derivative ``-d/dx_n`` at 0.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePairError, SpecError


def _pair_sum(kp):
    s = kp.kplus + kp.kminus
    if np.any(s == 0):
        raise DegeneratePairError("kappa_plus + kappa_minus vanishes")
    return s


@dataclass
class SeparableNormalKernel:
    """Rank-one kernel ``amplitude * exp(-rate_x x_n) * exp(-rate_y y_n)``."""

    amplitude: complex
    rate_x: complex
    rate_y: complex

    def __post_init__(self):
        self.amplitude, self.rate_x, self.rate_y = np.broadcast_arrays(
            *(np.asarray(v, dtype=complex) for v in (self.amplitude, self.rate_x, self.rate_y)))
        if np.any(self.rate_x.real <= 0) or np.any(self.rate_y.real <= 0):
            raise SpecError("separable kernel rates need positive real parts")

    def __call__(self, x, y):
        return self.amplitude * np.exp(-self.rate_x * x) * np.exp(-self.rate_y * y)

    def __add__(self, other):
        if not (np.allclose(self.rate_x, other.rate_x) and np.allclose(self.rate_y, other.rate_y)):
            raise ValueError("kernels with different rates do not add to a rank-one kernel")
        return SeparableNormalKernel(self.amplitude + other.amplitude, self.rate_x, self.rate_y)

    def l2_norm(self):
        """Hilbert-Schmidt norm on the quarter plane (equals the operator norm)."""
        return np.abs(self.amplitude) / (2.0 * np.sqrt(self.rate_x.real * self.rate_y.real))

    @classmethod
    def zero(cls, kp):
        return cls(np.zeros_like(kp.kplus), kp.kplus, kp.kminus)


@dataclass
class FreeNormalKernel:
    """Two-sided kernel of the frozen normal ODE on the whole line."""

    amplitude: complex
    kplus: complex
    kminus: complex

    def __call__(self, x, y):
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        # evaluate each branch only where it applies, avoiding overflow
        up = np.exp(-self.kplus * np.where(d >= 0, d, 0.0))
        down = np.exp(-self.kminus * np.where(d < 0, -d, 0.0))
        return self.amplitude * np.where(d >= 0, up, down)


@dataclass
class NormalGreenKernel:
    free: FreeNormalKernel
    correction: SeparableNormalKernel

    def __call__(self, x, y):
        return self.free(x, y) + self.correction(x, y)


def free_normal_kernel(kp):
    amp = 1.0 / (kp.a_n * _pair_sum(kp))
    return FreeNormalKernel(amp, kp.kplus, kp.kminus)


def dirichlet_correction(kp):
    """Singular Green part: cancels the free kernel on ``x_n = 0``."""
    amp = -1.0 / (kp.a_n * _pair_sum(kp))
    return SeparableNormalKernel(amp, kp.kplus, kp.kminus)


def dirichlet_green(kp):
    return NormalGreenKernel(free_normal_kernel(kp), dirichlet_correction(kp))


def poisson_normal_kernel(kp):
    """``x_n -> exp(-kappa_plus x_n)``."""
    kplus = kp.kplus

    def K(x):
        return np.exp(-kplus * np.asarray(x, dtype=float))

    return K


def trace_gamma1_kernel(kp):
    """``y_n -> -exp(-kappa_minus y_n) / a_n``: gamma_1 of the Dirichlet solution."""
    kminus, a_n = kp.kminus, kp.a_n

    def T(y):
        return -np.exp(-kminus * np.asarray(y, dtype=float)) / a_n

    return T


def dtn_principal(kp):
    return kp.kplus
