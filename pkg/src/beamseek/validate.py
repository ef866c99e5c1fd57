"""Self-check suites behind ``beamseek validate``.

Each suite returns a list of :class:`Check`; the CLI prints them and exits
nonzero if any failed.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .beam import (BeamMesh, MapConfig, NewmarkBeam, assemble_fem,
                   constrained_eigenfrequencies, energy, nodal_dofs)
from .controller import estimate
from .dither import DitherParams
from .kernels import build_kernel_table, kappa_parts, kappa_pde_residual
from .spectrum import target_spectrum


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def observed_orders(errors, ratio=2.0):
    errors = np.asarray(errors, dtype=float)
    return np.log(errors[:-1] / errors[1:]) / math.log(ratio)


# --- kernels -----------------------------------------------------------------

def _quad(f, lo, hi):
    val, _ = integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def kernel_oracle_entry(c, y, kbar=1.0):
    """Adaptive-quadrature values of the x = 1 kernels at one grid point ``y``."""
    def kr(s):
        return float(kappa_parts(c, 1.0, s)[0])

    def ki(s):
        return float(kappa_parts(c, 1.0, s)[1])

    mr1 = _quad(lambda s: kr(s) * (s - y), y, 1.0)
    mi1 = _quad(lambda s: ki(s) * (s - y), y, 1.0)
    # Q(1, y) = int_y^1 R2(1, xi)(xi - y) dxi with R2 = kr - kbar g2, g2(xi) = int_xi^1 ki (s - xi) ds
    g2 = lambda xi: _quad(lambda s: ki(s) * (s - xi), xi, 1.0)
    q = _quad(lambda xi: (kr(xi) - kbar * g2(xi)) * (xi - y), y, 1.0)
    lever = 1.0 - y
    return {
        "F1": kr(y) - kbar * mi1,
        "F2": ki(y) + kbar * (-lever + mr1),
        "R1": -ki(y) + kbar * (lever - mr1),
        "R2": kr(y) - kbar * mi1,
        "Q": q,
        "S": q,
    }


def check_kernels(c=0.1, n_oracle=8, quad_order=64, panels=20):
    out = []
    res = [kappa_pde_residual(c, n) for n in (32, 64, 128)]
    orders = observed_orders(res)
    ok = bool(np.all((orders >= 1.8) & (orders <= 2.2)))
    out.append(Check("kappa PDE residual order",
                     ok, f"residuals {res[0]:.2e} {res[1]:.2e} {res[2]:.2e}, orders "
                         + " ".join(f"{o:.3f}" for o in orders)))

    x = np.linspace(0.1, 1.0, 10)
    kr, ki = kappa_parts(c, x, x)
    diag = float(np.max(np.abs(kr + 1j * ki + 0.5j * c * x)))
    out.append(Check("kappa diagonal k(x,x) = -i c x / 2", diag <= 1e-9, f"max err {diag:.2e}"))

    table = build_kernel_table(c, quad_order, panels)
    kb = 1.0
    at = table.at(kb)
    idx = np.unique(np.linspace(0, len(table.y) - 1, n_oracle).astype(int))
    worst = 0.0
    for j in idx:
        ref = kernel_oracle_entry(c, float(table.y[j]), kb)
        for name, val in ref.items():
            worst = max(worst, abs(at[name][j] - val))
    out.append(Check("kernel table vs adaptive quadrature", worst <= 1e-10,
                     f"max abs err {worst:.2e} over {len(idx)} nodes"))
    return out


# --- spectrum ----------------------------------------------------------------

def check_spectrum(c=0.1, kbar=0.1, n_elems=200, n_modes=4):
    rep = target_spectrum(c, kbar, n_elems, n_modes)
    out = [Check("eigenvalues matched", rep.n_matched >= 2 * n_modes - 1,
                 f"{rep.n_matched} of {len(rep.predicted)}")]
    sigma0 = rep.computed[0]
    err0 = abs(sigma0 - complex(-kbar, 0)) if sigma0 is not None else math.inf
    out.append(Check("scalar mode at -kbar", err0 <= 1e-6, f"abs err {err0:.2e}"))
    im_err = re_err = 0.0
    for p, q in zip(rep.predicted[1:], rep.computed[1:]):
        if q is None:
            im_err = re_err = math.inf
            break
        im_err = max(im_err, abs(q.imag - p.imag) / abs(p.imag))
        re_err = max(re_err, abs(q.real - p.real))
    out.append(Check("beam pairs: imaginary part", im_err <= 0.01, f"max rel err {im_err:.2e}"))
    out.append(Check("beam pairs: real part", re_err <= 0.02, f"max abs err {re_err:.2e}"))
    return out


# --- fem ---------------------------------------------------------------------

def free_vibration_drift(n_elems=20, periods=10, steps_per_period=200):
    """Max relative energy change of a free first-mode vibration."""
    mesh = BeamMesh(n_elems)
    w1 = float(constrained_eigenfrequencies(mesh, 1)[0])
    dt = 2 * math.pi / w1 / steps_per_period
    beam = NewmarkBeam(mesh, dt)
    x = mesh.nodes
    k = math.pi / 2
    d0 = nodal_dofs(mesh, np.cos(k * x), -k * np.sin(k * x))
    d0[mesh.rot0] = 0.0
    d0[mesh.disp1] = 0.0
    state = beam.initial_state(d0, np.zeros(mesh.ndof))
    M, K = assemble_fem(mesh)
    e0 = energy(M, K, state)
    drift = 0.0
    for _ in range(periods * steps_per_period):
        state = beam.step(state, 0.0, 0.0, 0.0, 0.0)
        drift = max(drift, abs(energy(M, K, state) - e0) / e0)
    return drift


def check_fem():
    target = math.pi**2 / 4
    errs = [abs(constrained_eigenfrequencies(BeamMesh(n), 1)[0] - target) / target
            for n in (25, 50, 100)]
    out = [Check("first eigenfrequency at n = 100", errs[-1] <= 1e-3,
                 f"rel err {errs[-1]:.2e} (pi^2/4 = {target:.7f})"),
           Check("eigenfrequency converges under refinement",
                 bool(np.all(np.diff(errs) < 0)), " > ".join(f"{e:.2e}" for e in errs))]
    drift = free_vibration_drift()
    out.append(Check("Newmark energy drift, 10 periods", drift <= 1e-9, f"rel drift {drift:.2e}"))
    return out


# --- averaging ---------------------------------------------------------------

def averaged_estimates(p, map_cfg, theta_hat, n_samples=10000):
    """One-period means of ``G`` and ``Hhat`` with Theta frozen at ``theta_hat`` plus dither.

    Periodic trapezoid rule (endpoint dropped), exact for the trigonometric
    polynomials involved.
    """
    t = np.arange(n_samples) * (p.period / n_samples)
    G = np.empty(n_samples)
    Hh = np.empty(n_samples)
    for k, tk in enumerate(t):
        y = map_cfg.output(theta_hat + p.a * math.sin(p.omega * tk))
        G[k], Hh[k] = estimate(y, tk, p)
    return float(G.mean()), float(Hh.mean())


def check_averaging(H=-1.0, Theta_star=1.5, y_star=2.4, a=0.2, omega=5.0):
    p = DitherParams(a, omega)
    cfg = MapConfig(H, Theta_star, y_star)
    out = []
    for th in (1.0, 1.5, 2.0):
        g, h = averaged_estimates(p, cfg, th)
        g_ref = H * (th - Theta_star)
        g_err = abs(g - g_ref) / max(abs(g_ref), 1.0)
        h_err = abs(h - H) / abs(H)
        out.append(Check(f"averaged estimates at Theta_hat = {th}",
                         g_err <= 1e-8 and h_err <= 1e-8,
                         f"G {g:.12f} (ref {g_ref}), Hhat {h:.12f} (ref {H})"))
    return out


SUITES = {
    "kernels": check_kernels,
    "spectrum": check_spectrum,
    "fem": check_fem,
    "averaging": check_averaging,
}
