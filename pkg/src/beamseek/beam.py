"""Euler-Bernoulli beam with cubic Hermite finite elements.

Unit length, density and flexural rigidity. DOF layout is
``[w_0, w'_0, w_1, w'_1, ..., w_n, w'_n]`` with node 0 at the sliding end
(x = 0) and node n at the actuated end (x = 1).

Boundary handling:
  * x = 0: slope fixed to zero (essential), zero shear (natural);
  * x = 1: displacement prescribed to theta1 (essential), bending moment
    theta2 enters the load on the rotation DOF (natural).
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dither import profile


@dataclass(frozen=True)
class BeamMesh:
    n_elems: int

    def __post_init__(self):
        if self.n_elems < 4:
            raise ValueError(f"need at least 4 elements, got {self.n_elems}")

    @property
    def h(self):
        return 1.0 / self.n_elems

    @property
    def nodes(self):
        return np.linspace(0.0, 1.0, self.n_elems + 1)

    @property
    def ndof(self):
        return 2 * (self.n_elems + 1)

    @property
    def rot0(self):
        return 1

    @property
    def disp1(self):
        return 2 * self.n_elems

    @property
    def rot1(self):
        return 2 * self.n_elems + 1


@dataclass(frozen=True)
class MapConfig:
    H: float
    Theta_star: float
    y_star: float

    def __post_init__(self):
        if not self.H < 0:
            raise ValueError(f"Hessian must be negative (maximum seeking), got {self.H}")

    def output(self, Theta):
        return self.y_star + 0.5 * self.H * (Theta - self.Theta_star) ** 2


@dataclass(frozen=True)
class BeamState:
    d: np.ndarray
    v: np.ndarray
    acc: np.ndarray
    t: float = 0.0


def element_matrices(h):
    """Consistent mass and stiffness of one Hermite element."""
    k = np.array([
        [12.0, 6 * h, -12.0, 6 * h],
        [6 * h, 4 * h * h, -6 * h, 2 * h * h],
        [-12.0, -6 * h, 12.0, -6 * h],
        [6 * h, 2 * h * h, -6 * h, 4 * h * h],
    ]) / h**3
    m = np.array([
        [156.0, 22 * h, 54.0, -13 * h],
        [22 * h, 4 * h * h, 13 * h, -3 * h * h],
        [54.0, 13 * h, 156.0, -22 * h],
        [-13 * h, -3 * h * h, -22 * h, 4 * h * h],
    ]) * h / 420.0
    return m, k


def assemble_fem(mesh):
    """Global ``(M, K)`` before any constraint is applied."""
    m_e, k_e = element_matrices(mesh.h)
    M = np.zeros((mesh.ndof, mesh.ndof))
    K = np.zeros((mesh.ndof, mesh.ndof))
    for e in range(mesh.n_elems):
        sl = slice(2 * e, 2 * e + 4)
        M[sl, sl] += m_e
        K[sl, sl] += k_e
    return M, K


def hermite_basis(xi, h, deriv=0):
    """Hermite shape functions (or derivatives in x) at local coordinate ``xi`` in [0, 1]."""
    xi = np.asarray(xi, dtype=float)
    if deriv == 0:
        return np.stack([
            1 - 3 * xi**2 + 2 * xi**3,
            h * (xi - 2 * xi**2 + xi**3),
            3 * xi**2 - 2 * xi**3,
            h * (-xi**2 + xi**3),
        ], axis=-1)
    if deriv == 1:
        return np.stack([
            (-6 * xi + 6 * xi**2) / h,
            1 - 4 * xi + 3 * xi**2,
            (6 * xi - 6 * xi**2) / h,
            -2 * xi + 3 * xi**2,
        ], axis=-1)
    if deriv == 2:
        return np.stack([
            (-6 + 12 * xi) / h**2,
            (-4 + 6 * xi) / h,
            (6 - 12 * xi) / h**2,
            (-2 + 6 * xi) / h,
        ], axis=-1)
    raise ValueError(f"unsupported derivative order {deriv}")


def interpolation_matrix(mesh, x, deriv=0):
    """Matrix mapping the DOF vector to field values (or x-derivatives) at points ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("interpolation points must lie in [0, 1]")
    e = np.minimum((x / mesh.h).astype(int), mesh.n_elems - 1)
    xi = x / mesh.h - e
    basis = hermite_basis(xi, mesh.h, deriv)
    P = np.zeros((len(x), mesh.ndof))
    for k in range(4):
        P[np.arange(len(x)), 2 * e + k] = basis[:, k]
    return P


def nodal_dofs(mesh, value, slope):
    """Interleave nodal values and slopes into a DOF vector."""
    d = np.empty(mesh.ndof)
    d[0::2] = value
    d[1::2] = slope
    return d


def constrained_eigenfrequencies(mesh, n=5):
    """Lowest natural frequencies with u_x(0) = 0, u(1) = 0 (moment-free at x = 1).

    Solved as ``M v = mu K v`` with ``omega^2 = 1/mu``: the low modes are then
    the large eigenvalues and keep full relative precision, whereas
    ``K v = lam M v`` loses digits to the ``1/h^4`` stiffness scale.
    """
    M, K = assemble_fem(mesh)
    free = np.setdiff1d(np.arange(mesh.ndof), [mesh.rot0, mesh.disp1])
    mu = scipy.linalg.eigh(M[np.ix_(free, free)], K[np.ix_(free, free)], eigvals_only=True)
    return np.sqrt(1.0 / mu[::-1][:n])


def energy(M, K, state):
    return 0.5 * state.v @ M @ state.v + 0.5 * state.d @ K @ state.d


class NewmarkBeam:
    """Average-acceleration Newmark integrator with a fixed step.

    The effective matrix on the free DOFs is Cholesky-factored once, so each
    step is a pair of triangular solves plus a few small mat-vecs.
    """

    beta = 0.25
    gamma = 0.5

    def __init__(self, mesh, dt):
        if not dt > 0:
            raise ValueError(f"time step must be positive, got {dt}")
        self.mesh = mesh
        self.dt = float(dt)
        self.M, self.K = assemble_fem(mesh)
        self.fixed = np.array([mesh.rot0, mesh.disp1])
        self.free = np.setdiff1d(np.arange(mesh.ndof), self.fixed)
        f, p = self.free, self.fixed
        Mff = self.M[np.ix_(f, f)]
        Kff = self.K[np.ix_(f, f)]
        self.Kff = Kff
        self.Kfp = self.K[np.ix_(f, p)]
        self.Mfp = self.M[np.ix_(f, p)]
        a0 = self.beta * dt * dt
        eff = Mff + a0 * Kff
        try:
            self._eff_cho = scipy.linalg.cho_factor(eff)
        except scipy.linalg.LinAlgError as exc:
            raise RuntimeError("singular Newmark effective matrix") from exc
        # rotation DOF at x = 1 sits at this position within the free set
        self._rot1_free = int(np.searchsorted(f, mesh.rot1))
        self._Mff = Mff

    def initial_state(self, d, v, theta2=0.0, fixed_acc=(0.0, 0.0), t=0.0):
        """Build a consistent state, solving for the free accelerations."""
        d = np.array(d, dtype=float)
        v = np.array(v, dtype=float)
        acc = np.zeros(self.mesh.ndof)
        acc[self.fixed] = fixed_acc
        f = self.free
        rhs = -self.Kff @ d[f] - self.Kfp @ d[self.fixed] - self.Mfp @ acc[self.fixed]
        rhs[self._rot1_free] += theta2
        acc[f] = np.linalg.solve(self._Mff, rhs)
        return BeamState(d=d, v=v, acc=acc, t=float(t))

    def step(self, state, theta1, theta1_t, theta1_tt, theta2, t_new=None):
        """Advance one step to ``t + dt`` with boundary data given at ``t + dt``.

        The slope at x = 0 stays at zero; the displacement at x = 1 is set to
        ``theta1`` exactly, with its rate and acceleration supplied.
        """
        vals = (theta1, theta1_t, theta1_tt, theta2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite boundary input at t={state.t}: {vals}")
        dt = self.dt
        f, p = self.free, self.fixed
        d, v, a = state.d, state.v, state.acc

        d_pred = d[f] + dt * v[f] + (0.5 - self.beta) * dt * dt * a[f]
        v_pred = v[f] + (1 - self.gamma) * dt * a[f]

        dp = np.array([0.0, theta1])
        ap = np.array([0.0, theta1_tt])
        rhs = -self.Kff @ d_pred - self.Kfp @ dp - self.Mfp @ ap
        rhs[self._rot1_free] += theta2
        af = scipy.linalg.cho_solve(self._eff_cho, rhs, check_finite=False)

        d_new = np.empty_like(d)
        v_new = np.empty_like(v)
        a_new = np.empty_like(a)
        d_new[f] = d_pred + self.beta * dt * dt * af
        v_new[f] = v_pred + self.gamma * dt * af
        a_new[f] = af
        d_new[p] = dp
        v_new[p] = (0.0, theta1_t)
        a_new[p] = ap
        if not np.all(np.isfinite(d_new)):
            raise FloatingPointError(f"beam state diverged at t={state.t + dt}")
        t_new = state.t + dt if t_new is None else float(t_new)
        return BeamState(d=d_new, v=v_new, acc=a_new, t=t_new)


class BeamProbe:
    """Reads Theta, y and the beta fields off a beam state."""

    def __init__(self, mesh, y_nodes):
        self.mesh = mesh
        self.y_nodes = np.asarray(y_nodes, dtype=float)
        self.P = interpolation_matrix(mesh, self.y_nodes)
        self.shape_nodes = None

    def measure(self, state, map_cfg, p, dither_on=True):
        """Return ``(Theta, y, beta, beta_t, beta_at_1)``.

        beta = u_t - R_t at the quadrature nodes (the Theta* shift in alpha is
        constant in time, so it drops out); beta_t likewise from accelerations.
        """
        Theta = float(state.d[0])
        y = map_cfg.output(Theta)
        ut = self.P @ state.v
        utt = self.P @ state.acc
        ut1 = state.v[self.mesh.disp1]
        if dither_on:
            if self.shape_nodes is None or self._omega != p.omega:
                self.shape_nodes = profile(p, self.y_nodes)
                self._shape1 = float(profile(p, 1.0))
                self._omega = p.omega
            wt = p.omega * state.t
            s, c = math.sin(wt), math.cos(wt)
            rt = p.a * p.omega * c
            rtt = -p.a * p.omega**2 * s
            beta = ut - rt * self.shape_nodes
            beta_t = utt - rtt * self.shape_nodes
            beta1 = ut1 - rt * self._shape1
        else:
            beta, beta_t, beta1 = ut, utt, ut1
        return Theta, y, beta, beta_t, float(beta1)


def measure(state, mesh, map_cfg, p, y_nodes):
    """One-off measurement helper; see :class:`BeamProbe` for the loop version."""
    return BeamProbe(mesh, y_nodes).measure(state, map_cfg, p)


def at_rest(mesh, value=0.0):
    return BeamState(d=nodal_dofs(mesh, value, 0.0), v=np.zeros(mesh.ndof),
                     acc=np.zeros(mesh.ndof), t=0.0)
