"""Kelvin functions of order one.

Uses the convention ``ber_1(z) + i bei_1(z) = J_1(z exp(3 pi i / 4))`` and the
ascending power series, which is all the kernel needs (arguments stay well
below 1 for realistic decay rates).
"""

import math
from typing import NamedTuple

import numpy as np

ZMAX = 20.0
_MAX_TERMS = 200

_R = 1.0 / math.sqrt(2.0)
# exp(3 pi i (2k+1) / 4) cycles with period 4 in k
_PHASE_RE = (-_R, _R, _R, -_R)
_PHASE_IM = (_R, _R, -_R, -_R)


class KelvinPair(NamedTuple):
    ber1: float
    bei1: float


def _check_domain(z):
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("Kelvin function argument must be finite")
    if np.any(z < 0):
        raise ValueError("Kelvin function argument must be non-negative")
    return z


def kelvin1(z, max_terms=_MAX_TERMS):
    """Return ``(ber1(z), bei1(z))``.

    Accepts scalars or arrays. Terms are summed until the next one falls below
    1e-16 of the running magnitude for every entry, or ``max_terms`` is hit.
    """
    z = _check_domain(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)

    half = 0.5 * z
    q = half * half
    term = half.copy()  # (z/2)^(2k+1) / (k! (k+1)!) with the (-1)^k folded in
    ber = np.zeros_like(z)
    bei = np.zeros_like(z)
    for k in range(max_terms):
        ber += term * _PHASE_RE[k % 4]
        bei += term * _PHASE_IM[k % 4]
        term = -term * q / ((k + 1) * (k + 2))
        scale = np.maximum(np.abs(ber), np.abs(bei))
        if np.all(np.abs(term) <= 1e-16 * scale):
            break

    if scalar:
        return KelvinPair(float(ber[0]), float(bei[0]))
    return KelvinPair(ber, bei)


def ber1(z):
    return kelvin1(z)[0]


def bei1(z):
    return kelvin1(z)[1]
