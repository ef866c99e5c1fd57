"""Probing signals propagated through the beam and the demodulation signals."""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DitherParams:
    a: float
    omega: float
    amp1: float = field(init=False)
    amp2: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.omega)):
            raise ValueError("dither parameters must be finite")
        if self.a == 0:
            raise ValueError("dither amplitude a must be nonzero")
        if self.omega <= 0:
            raise ValueError(f"dither frequency must be positive, got {self.omega}")
        r = math.sqrt(self.omega)
        object.__setattr__(self, "amp1", 0.5 * self.a * (math.cosh(r) + math.cos(r)))
        object.__setattr__(self, "amp2", 0.5 * self.a * self.omega * (math.cosh(r) - math.cos(r)))

    @property
    def period(self):
        return 2.0 * math.pi / self.omega


def profile(p, x):
    """Spatial shape ``(cosh(sqrt(w) x) + cos(sqrt(w) x)) / 2`` of the reference."""
    r = math.sqrt(p.omega) * np.asarray(x, dtype=float)
    return 0.5 * (np.cosh(r) + np.cos(r))


def eval_R(p, t, x):
    """Reference trajectory and its first two time derivatives at (t, x).

    Returns ``(R, R_t, R_tt)``; ``x`` may be an array.
    """
    shape = profile(p, x)
    wt = p.omega * t
    s, c = math.sin(wt), math.cos(wt)
    amp = p.a * shape
    return amp * s, amp * p.omega * c, -amp * p.omega**2 * s


def eval_R_x(p, t, x):
    """Spatial slope of the reference and its time derivative ``(R_x, R_xt)``."""
    r = math.sqrt(p.omega)
    xr = r * np.asarray(x, dtype=float)
    slope = 0.5 * r * (np.sinh(xr) - np.sin(xr)) * p.a
    wt = p.omega * t
    return slope * math.sin(wt), slope * p.omega * math.cos(wt)


def eval_S(p, t):
    """Boundary dither ``(S1, S2)`` for displacement and moment."""
    s = math.sin(p.omega * t)
    return p.amp1 * s, p.amp2 * s


def eval_S1_derivs(p, t):
    """``(S1_t, S1_tt)``, analytic."""
    wt = p.omega * t
    return p.amp1 * p.omega * math.cos(wt), -p.amp1 * p.omega**2 * math.sin(wt)


def eval_demod(p, t):
    """Demodulation signals ``(M, N)`` for gradient and Hessian estimates."""
    return (2.0 / p.a) * math.sin(p.omega * t), -(8.0 / p.a**2) * math.cos(2.0 * p.omega * t)
