"""Discrete spectrum of the damped target beam coupled to the scalar ODE.

The real fourth-order form ``z_tt + 2c z_t + c^2 z + z_xxxx = 0`` (sliding
end at x = 0, pinned and moment-free at x = 1) is discretised with the same
Hermite elements as the plant and written in first-order form. The scalar
state ``X' = -kbar X + z_t(0) + c z(0) - i z_xx(0)`` is appended as an extra
row; it is driven by the beam but does not feed back, so the closed forms are
``-kbar`` and ``-c +- i ((2n+1) pi / 2)^2``.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .beam import BeamMesh, assemble_fem, interpolation_matrix


@dataclass
class SpectrumReport:
    computed: list
    predicted: list
    max_rel_err: float
    n_matched: int
    c: float = math.nan
    kbar: float = math.nan
    n_elems: int = 0

    @property
    def pairs(self):
        return [(p, q) for p, q in zip(self.predicted, self.computed) if q is not None]

    def lines(self):
        out = [f"c = {self.c}, kbar = {self.kbar}, n_elems = {self.n_elems}",
               f"{'n':>3} {'re_pred':>12} {'im_pred':>12} {'re_comp':>14} {'im_comp':>14} {'rel_err':>10}"]
        for n, (p, q) in enumerate(zip(self.predicted, self.computed)):
            if q is None:
                out.append(f"{n:>3} {p.real:>12.6f} {p.imag:>12.6f} {'-':>14} {'-':>14} {'unmatched':>10}")
            else:
                out.append(f"{n:>3} {p.real:>12.6f} {p.imag:>12.6f} {q.real:>14.8f} "
                           f"{q.imag:>14.8f} {_rel(p, q):>10.2e}")
        out.append(f"matched {self.n_matched} of {len(self.predicted)}, "
                   f"max rel err {self.max_rel_err:.3e}")
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "re_pred", "im_pred", "re_comp", "im_comp", "rel_err"])
            for n, (p, q) in enumerate(zip(self.predicted, self.computed)):
                if q is None:
                    w.writerow([n, repr(p.real), repr(p.imag), "", "", ""])
                else:
                    w.writerow([n, repr(p.real), repr(p.imag), repr(q.real), repr(q.imag),
                                repr(_rel(p, q))])


def _rel(p, q):
    return abs(q - p) / abs(p) if p != 0 else abs(q - p)


def predicted_eigenvalues(c, kbar, n_modes, with_ode=True):
    """Closed-form list: ``-kbar`` (if ``with_ode``) then ``-c -+ i lambda_n`` pairs."""
    out = [complex(-kbar, 0.0)] if with_ode else []
    for n in range(n_modes):
        lam = (math.pi * (2 * n + 1)) ** 2 / 4.0
        out += [complex(-c, lam), complex(-c, -lam)]
    return out


def schrodinger_eigenvalues(c, n_modes):
    """``-c + i (m + 1/2)^2 pi^2`` for m = 0..n_modes-1."""
    return [complex(-c, (m + 0.5) ** 2 * math.pi**2) for m in range(n_modes)]


def target_operator(c, kbar, n_elems, with_ode=True):
    """Matrix ``A`` of the first-order system ``v' = A v``.

    The beam block uses balanced modal coordinates: with mass-normalised
    modes ``z = Phi u`` (``K Phi = M Phi diag(lam)``), each mode carries the
    state ``(sqrt(lam) u, u_t)``. This keeps ``|A|`` of the order of the
    highest frequency rather than its square. The modes come from the
    inverted pencil ``M v = mu K v`` so that the low ``lam = 1/mu`` keep full
    relative precision at fine meshes. The change of variables is exact, so
    the spectrum is that of the FEM first-order system.
    """
    mesh = BeamMesh(n_elems)
    M, K = assemble_fem(mesh)
    free = np.setdiff1d(np.arange(mesh.ndof), [mesh.rot0, mesh.disp1])
    Mf = M[np.ix_(free, free)]
    Kf = K[np.ix_(free, free)]
    try:
        mu, V = scipy.linalg.eigh(Mf, Kf)
    except scipy.linalg.LinAlgError as exc:
        raise RuntimeError(f"constrained stiffness is not positive definite: {exc}") from exc
    lam = 1.0 / mu
    # V is K-normalised; scaling by sqrt(lam) makes it M-normalised
    root = np.sqrt(lam)
    Phi = V * root
    m = len(free)
    off = 1 if with_ode else 0
    n = off + 2 * m
    A = np.zeros((n, n), dtype=complex if with_ode else float)
    p, q = np.arange(off, off + m), np.arange(off + m, n)
    A[p, q] = root
    A[q, p] = -(c * c / root + root)
    A[q, q] = -2.0 * c
    if with_ode:
        # nodal functional r: r z = (r Phi) u = (r Phi / sqrt(lam)) p
        val0 = interpolation_matrix(mesh, [0.0])[0, free] @ Phi
        curv0 = interpolation_matrix(mesh, [0.0], deriv=2)[0, free] @ Phi
        A[0, 0] = -kbar
        A[0, p] = (c * val0 - 1j * curv0) / root
        A[0, q] = val0
    return A


def _pair(predicted, candidates):
    """Nearest-neighbour pairing with a 10%-of-spacing rejection radius."""
    ims = sorted({abs(p.imag) for p in predicted})
    gaps = np.diff(ims) if len(ims) > 1 else np.array([1.0])
    used = set()
    matched = []
    for p in predicted:
        k = int(np.searchsorted(ims, abs(p.imag)))
        spacing = gaps[min(k, len(gaps) - 1)] if len(gaps) else 1.0
        radius = 0.1 * spacing
        dist = np.abs(candidates - p)
        for j in np.argsort(dist):
            if j in used:
                continue
            if dist[j] <= radius:
                used.add(j)
                matched.append(complex(candidates[j]))
            else:
                matched.append(None)
            break
        else:
            matched.append(None)
    return matched


def target_spectrum(c, Kbar, n_elems, n_modes, with_ode=True):
    """Compute and pair the lowest eigenvalues with the closed forms."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if n_elems < 8 * n_modes:
        raise ValueError(f"n_elems = {n_elems} too coarse for {n_modes} modes (need >= {8 * n_modes})")
    A = target_operator(c, Kbar, n_elems, with_ode)
    try:
        ev = scipy.linalg.eigvals(A)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    ev = ev[np.isfinite(ev)]
    n_keep = 2 * n_modes + (1 if with_ode else 0)
    ev = ev[np.argsort(np.abs(ev.imag), kind="stable")][:n_keep]
    predicted = predicted_eigenvalues(c, Kbar, n_modes, with_ode)
    computed = _pair(predicted, ev)
    errs = [_rel(p, q) for p, q in zip(predicted, computed) if q is not None]
    return SpectrumReport(
        computed=computed, predicted=predicted,
        max_rel_err=float(max(errs)) if errs else math.inf,
        n_matched=len(errs), c=float(c), kbar=float(Kbar), n_elems=int(n_elems))
