"""Backstepping kernels and the integral kernels of the boundary control laws.

Everything the controller needs is evaluated at x = 1 on a Gauss-Legendre
grid. Kernels that depend on the ODE gain ``kbar`` do so affinely, so the
table stores a ``kbar``-free part and a part to be multiplied by ``kbar``;
the controller combines them at run time.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .kelvin import kelvin1

# below this kernel argument the closed form is 0/0 and loses digits
DIAGONAL_Z = 1e-6
PHI_R_MIN = 1e-8


class SingularConfigurationError(ValueError):
    """Raised when the beta_xx elimination would divide by ~zero."""


def eval_gamma(kbar):
    """First-transform ODE kernel; constant in x."""
    return -kbar


def eval_q(kbar, x, y):
    """First-transform PDE kernel ``q(x, y) = -i kbar (x - y)``."""
    if y > x:
        raise ValueError(f"q kernel needs y <= x, got x={x}, y={y}")
    return -1j * kbar * (x - y)


def kappa_parts(c, x, y):
    """Real and imaginary parts of the second backstepping kernel.

    Vectorised over ``x`` and ``y`` (broadcast). Requires ``0 <= y <= x``.
    """
    if c < 0:
        raise ValueError(f"decay rate c must be non-negative, got {c}")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(y > x + 1e-15) or np.any(y < 0):
        raise ValueError("kappa kernel needs 0 <= y <= x")
    s = np.clip(x * x - y * y, 0.0, None)
    z = np.sqrt(c * s)

    kr = np.zeros(x.shape)
    ki = np.zeros(x.shape)
    if c == 0:
        return kr, ki

    far = z >= DIAGONAL_Z
    if np.any(far):
        zf = z[far]
        ber, bei = kelvin1(zf)
        pref = x[far] * c / (math.sqrt(2.0) * zf)
        kr[far] = pref * (-ber - bei)
        ki[far] = pref * (ber - bei)
    near = ~far
    if np.any(near):
        zn2 = z[near] ** 2
        xn = x[near]
        kr[near] = xn * c * zn2 / 16.0
        ki[near] = -0.5 * c * xn + xn * c * zn2 * zn2 / 384.0
    return kr, ki


def eval_kappa(c, x, y):
    """``kappa(x, y)`` as a complex scalar."""
    if y > x:
        raise ValueError(f"kappa kernel needs y <= x, got x={x}, y={y}")
    kr, ki = kappa_parts(c, x, y)
    return complex(float(kr), float(ki))


def gauss_legendre_01(n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def composite_gauss_01(order, panels=1):
    """Gauss-Legendre on ``panels`` equal panels of [0, 1], about ``order`` nodes in total.

    Each panel gets ``ceil(order / panels)`` nodes (at least 2). Aligning the
    panels with the finite elements keeps the rule exact-to-roundoff for
    piecewise-polynomial fields times smooth kernels.
    """
    if panels < 1:
        raise ValueError(f"panels must be >= 1, got {panels}")
    per = max(2, -(-order // panels))
    t, w = gauss_legendre_01(per)
    left = np.arange(panels)[:, None] / panels
    return (left + t[None, :] / panels).ravel(), np.tile(w / panels, panels)


@dataclass(frozen=True)
class KernelTable:
    """Kernels at x = 1 sampled on the quadrature grid ``y``.

    Pairs named ``*_0`` / ``*_1`` hold the ``kbar``-free part and the
    coefficient of ``kbar``: ``F1 = F1_0 + kbar * F1_1`` and so on.
    """

    c: float
    order: int
    panels: int
    y: np.ndarray
    w: np.ndarray
    kappa_r: np.ndarray
    kappa_i: np.ndarray
    # kbar = 1 values of the kernels linear in kbar
    f1_unit: np.ndarray
    f2_unit: np.ndarray
    g1_unit: np.ndarray
    g2_unit: np.ndarray
    p1_unit: float
    p2_unit: float
    F1_0: np.ndarray
    F1_1: np.ndarray
    F2_0: np.ndarray
    F2_1: np.ndarray
    R1_0: np.ndarray
    R1_1: np.ndarray
    R2_0: np.ndarray
    R2_1: np.ndarray
    Q_0: np.ndarray
    Q_1: np.ndarray
    S_0: np.ndarray
    S_1: np.ndarray
    R2_int_0: float
    R2_int_1: float

    @property
    def quad_order(self):
        """Nominal order the table was built with (``len(y)`` may be larger)."""
        return self.order

    def r2_integral(self, kbar):
        return self.R2_int_0 + kbar * self.R2_int_1

    def phi_1(self, kbar):
        """``phi(1) = -int_0^1 R2(1, y) dy``."""
        return -self.r2_integral(kbar)

    def phi_r(self, kbar):
        return 1.0 - self.r2_integral(kbar)

    def at(self, kbar):
        """All kernels at a given ``kbar`` as plain arrays (dict)."""
        out = {name: getattr(self, f"{name}_0") + kbar * getattr(self, f"{name}_1")
               for name in ("F1", "F2", "R1", "R2", "Q", "S")}
        out["p1"] = kbar * self.p1_unit
        out["p2"] = kbar * self.p2_unit
        out["phi_1"] = self.phi_1(kbar)
        out["phi_r"] = self.phi_r(kbar)
        return out

    def check_phi_r(self, kbar):
        phi_r = self.phi_r(kbar)
        if abs(phi_r) < PHI_R_MIN:
            raise SingularConfigurationError(
                f"phi_r = {phi_r:.3e} at kbar = {kbar}: beta_xx elimination is singular")
        return phi_r

    def to_csv(self, path, kbar=1.0):
        k = self.at(kbar)
        cols = {
            "y": self.y, "kappa_r": self.kappa_r, "kappa_i": self.kappa_i,
            "f1_unit": self.f1_unit, "f2_unit": self.f2_unit,
            "g1_unit": self.g1_unit, "g2_unit": self.g2_unit,
            "F1": k["F1"], "F2_unit": k["F2"], "R1_unit": k["R1"],
            "R2": k["R2"], "Q": k["Q"], "S": k["S"],
        }
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in zip(*cols.values()):
                writer.writerow([repr(float(v)) for v in row])


def _moment_integral(c, y, order, power):
    """``int_y^1 kappa(1, xi) (xi - y)^power dxi`` for every entry of ``y``.

    Gauss-Legendre on [y, 1] per node; returns (real part, imag part).
    """
    t, wt = gauss_legendre_01(order)
    span = 1.0 - y
    xi = y[:, None] + span[:, None] * t[None, :]
    kr, ki = kappa_parts(c, np.ones_like(xi), xi)
    lever = (xi - y[:, None]) ** power
    ww = span[:, None] * wt[None, :] * lever
    return np.sum(ww * kr, axis=1), np.sum(ww * ki, axis=1)


def build_kernel_table(c, quad_order=64, panels=1):
    """Precompute the x = 1 kernels on a composite Gauss grid.

    The grid has ``panels`` equal panels (use the number of finite elements)
    and about ``quad_order`` nodes; see :func:`composite_gauss_01`. The inner
    integrals of the smooth kernel use a ``quad_order``-point rule mapped
    onto [y_j, 1]. The double integral in Q's kbar part is reduced to one
    integral by swapping the order of integration:
    ``int_y^1 (xi-y) int_xi^1 k(eta)(eta-xi) deta dxi = int_y^1 k(eta)(eta-y)^3/6 deta``.
    """
    if c < 0:
        raise ValueError(f"decay rate c must be non-negative, got {c}")
    if quad_order < 8:
        raise ValueError(f"quad_order must be >= 8, got {quad_order}")

    y, w = composite_gauss_01(quad_order, panels)
    kr, ki = kappa_parts(c, np.ones_like(y), y)

    mr1, mi1 = _moment_integral(c, y, quad_order, 1)
    mr3, mi3 = _moment_integral(c, y, quad_order, 3)

    f1_unit = mi1
    f2_unit = mr1
    g1_unit = mr1
    g2_unit = mi1
    p1_unit = 1.0 - float(np.dot(w, kr - ki))
    p2_unit = float(np.dot(w, ki + kr))

    lever = 1.0 - y
    F1_0, F1_1 = kr, -f1_unit
    F2_0, F2_1 = ki, -lever + f2_unit
    R1_0, R1_1 = -ki, lever - g1_unit
    R2_0, R2_1 = kr, -g2_unit
    # Q(1, y) = int_y^1 R2(1, xi)(xi - y) dxi
    Q_0 = mr1
    Q_1 = -mi3 / 6.0

    table = KernelTable(
        c=float(c), order=int(quad_order), panels=int(panels), y=y, w=w, kappa_r=kr, kappa_i=ki,
        f1_unit=f1_unit, f2_unit=f2_unit, g1_unit=g1_unit, g2_unit=g2_unit,
        p1_unit=p1_unit, p2_unit=p2_unit,
        F1_0=F1_0, F1_1=F1_1, F2_0=F2_0, F2_1=F2_1,
        R1_0=R1_0, R1_1=R1_1, R2_0=R2_0, R2_1=R2_1,
        Q_0=Q_0, Q_1=Q_1, S_0=Q_0.copy(), S_1=Q_1.copy(),
        R2_int_0=float(np.dot(w, R2_0)), R2_int_1=float(np.dot(w, R2_1)),
    )
    table.check_phi_r(0.0)
    return table


def kappa_pde_residual(c, n_grid):
    """Max of ``|k_xx - k_yy - i c k|`` over interior grid points of the triangle.

    Central differences with step ``h = 1/n_grid``; test helper.
    """
    if n_grid < 16:
        raise ValueError("n_grid must be >= 16")
    h = 1.0 / n_grid
    idx = np.arange(n_grid + 1)
    i, j = np.meshgrid(idx, idx, indexing="ij")
    # (x +- h, y) and (x, y +- h) must stay inside 0 <= y <= x <= 1
    mask = (j >= 1) & (j <= i - 1) & (i <= n_grid - 1)
    x = i[mask] * h
    y = j[mask] * h

    def k(xx, yy):
        kr, ki = kappa_parts(c, xx, yy)
        return kr + 1j * ki

    k0 = k(x, y)
    kxx = (k(x + h, y) - 2 * k0 + k(x - h, y)) / h**2
    kyy = (k(x, y + h) - 2 * k0 + k(x, y - h)) / h**2
    res = kxx - kyy - 1j * c * k0
    return float(np.max(np.abs(res)))


def kappa_y_at_zero(c, n_grid):
    """Max over x of the one-sided difference ``|k(x, h) - k(x, 0)| / h``."""
    h = 1.0 / n_grid
    x = np.arange(1, n_grid + 1) * h
    kr0, ki0 = kappa_parts(c, x, 0.0)
    kr1, ki1 = kappa_parts(c, x, h)
    return float(np.max(np.abs((kr1 - kr0) + 1j * (ki1 - ki0)) / h))
