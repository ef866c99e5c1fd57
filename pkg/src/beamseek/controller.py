"""Extremum seeking boundary controller.

Gradient/Hessian estimates come from demodulating the map output. The
boundary rates U1, U2 combine quadrature-weighted beta fields with the
kernel table and a gradient feedback term, pass through a first-order
low-pass filter, and are integrated into the actuator set points.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dither import eval_demod, eval_S, eval_S1_derivs

THETA_FEEDBACK_MODES = ("gradient", "ratio")


@dataclass(frozen=True)
class EsGains:
    K: float
    c: float
    cbar: float

    def __post_init__(self):
        for name in ("K", "c", "cbar"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"gain {name} must be positive, got {val}")


@dataclass
class ControllerState:
    theta1_hat: float
    theta2_hat: float
    lp1: float = 0.0
    lp2: float = 0.0
    Hhat_filt: float = math.nan
    G: float = 0.0
    Hhat: float = 0.0
    U1_raw: float = 0.0
    U2_raw: float = 0.0
    lp1_prev: float = 0.0
    y_mean: float = math.nan


class BoundaryInputs(NamedTuple):
    theta1: float
    theta2: float
    theta1_tt: float
    theta1_t: float


def estimate(y, t, p):
    """Instantaneous gradient and Hessian estimates ``(G, Hhat)``."""
    M, N = eval_demod(p, t)
    return M * y, N * y


def lowpass_step(state_in, u_in, cbar, dt):
    """Exact zero-order-hold step of ``cbar / (s + cbar)``."""
    if not (cbar > 0 and dt > 0):
        raise ValueError("cbar and dt must be positive")
    decay = math.exp(-cbar * dt)
    return decay * state_in + (1.0 - decay) * u_in


def compute_U(table, beta, beta_t, beta_at_1, G, hhat, gains, *, kbar=None,
              theta_feedback="ratio", u1_sign=1.0, hessian_scaled=False,
              literal_kbar_sign=False):
    """Unfiltered boundary rates ``(U1_raw, U2_raw)``.

    ``kbar`` defaults to ``gains.K * |hhat|`` (``gains.K * hhat`` with
    ``literal_kbar_sign``); it is the decay rate of the target ODE and must be
    positive for that mode to be stable. The position error fed back by the
    backstepping law is not measurable and is replaced by the gradient
    estimate: ``theta_feedback="ratio"`` uses ``G / hhat`` (an estimate of the
    error itself), ``"gradient"`` uses ``G``. ``hessian_scaled`` multiplies
    the beta integrals and the ``c^2/8`` term by ``hhat``.
    """
    if theta_feedback not in THETA_FEEDBACK_MODES:
        raise ValueError(f"theta_feedback must be one of {THETA_FEEDBACK_MODES}")
    if kbar is None:
        kbar = gains.K * (hhat if literal_kbar_sign else abs(hhat))
    phi_r = table.check_phi_r(kbar)
    phi_1 = table.phi_1(kbar)
    r2_int = table.r2_integral(kbar)
    w = table.w
    lever = 1.0 - table.y

    F1 = table.F1_0 + kbar * table.F1_1
    F2 = table.F2_0 + kbar * table.F2_1
    R1 = table.R1_0 + kbar * table.R1_1
    Q = table.Q_0 + kbar * table.Q_1
    S = table.S_0 + kbar * table.S_1
    p1 = kbar * table.p1_unit
    p2 = kbar * table.p2_unit

    wb = w * beta
    wbt = w * beta_t
    if theta_feedback == "ratio":
        theta_term = G / hhat if hhat != 0 else 0.0
    else:
        theta_term = G
    scale = hhat if hessian_scaled else 1.0

    k_beta = F1 + u1_sign * (R1 / phi_r) * F2
    k_beta_t = S + (phi_1 / phi_r) * (lever - Q)
    bracket = p1 + p2 * (phi_1 / phi_r) * r2_int
    U1 = scale * (np.dot(k_beta, wb) - np.dot(k_beta_t, wbt)) - bracket * theta_term

    # the damping comes from the table so it always matches the kernels
    U2 = (scale * table.c**2 / 8.0 * beta_at_1 + np.dot(F1, wb)
          - scale * np.dot(F2, wbt) - p2 * theta_term)
    return float(U1), float(U2)


def integrate_controls(cs, U1, U2, dt, p, t, dither_on=True):
    """Integrate the filtered rates into the set points and add the dither.

    ``U1``/``U2`` are the filtered rates just produced for the step ending at
    ``t``; the previous filtered U1 (``cs.lp1_prev``) gives the backward
    difference for the actuator acceleration.
    """
    cs.theta1_hat += U1 * dt
    cs.theta2_hat += U2 * dt
    if dither_on:
        S1, S2 = eval_S(p, t)
        S1_t, S1_tt = eval_S1_derivs(p, t)
    else:
        S1 = S2 = S1_t = S1_tt = 0.0
    theta1_tt = (U1 - cs.lp1_prev) / dt + S1_tt
    cs.lp1_prev = U1
    return BoundaryInputs(cs.theta1_hat + S1, cs.theta2_hat + S2, theta1_tt, U1 + S1_t)


class HessianFilter:
    """Slowly filtered Hessian estimate.

    The raw product N(t) y(t) carries ripple of order y*/a^2 at twice the
    dither frequency, so it is first averaged over one full dither period
    (a sliding window, exact for periodic ripple) and then smoothed by a
    first-order filter with time constant ``tau``. The estimate is only
    trusted while it stays below ``-floor``.
    """

    def __init__(self, period, dt, tau, floor_frac=0.05):
        self.n = max(1, int(round(period / dt)))
        self.buf = np.zeros(self.n)
        self.count = 0
        self.total = 0.0
        self.dt = dt
        self.tau = tau
        self.floor_frac = floor_frac
        self.value = math.nan
        self.floor = math.nan

    @property
    def ready(self):
        return self.count >= self.n

    def update(self, hhat):
        i = self.count % self.n
        self.total += hhat - self.buf[i]
        self.buf[i] = hhat
        self.count += 1
        if self.count < self.n:
            return self.value
        mean = self.total / self.n
        if self.count == self.n:
            self.value = min(mean, -1e-12)
            self.floor = self.floor_frac * abs(self.value)
        else:
            self.value = lowpass_step(self.value, mean, 1.0 / self.tau, self.dt)
        return self.value


class EsController:
    """Stateful controller stepping at a fixed ``dt``.

    Parameters mirror the run configuration; ``true_hessian`` is only read
    when ``use_true_hessian`` is set.
    """

    def __init__(self, table, gains, dither, dt, theta1_hat0, theta2_hat0=0.0, *,
                 true_hessian=None, use_true_hessian=False, u1_sign_variant=False,
                 theta_feedback="ratio", feedback_enabled=True, dither_on=True,
                 hessian_scaled=False, literal_kbar_sign=False, hessian_tau_periods=10.0,
                 washout=0.5):
        if not (math.isfinite(washout) and washout >= 0):
            raise ValueError(f"washout cutoff must be >= 0, got {washout}")
        if use_true_hessian and true_hessian is None:
            raise ValueError("use_true_hessian needs the true Hessian value")
        self.table = table
        self.gains = gains
        self.dither = dither
        self.dt = dt
        self.true_hessian = true_hessian
        self.use_true_hessian = use_true_hessian
        self.u1_sign = -1.0 if u1_sign_variant else 1.0
        self.theta_feedback = theta_feedback
        self.hessian_scaled = hessian_scaled
        self.literal_kbar_sign = literal_kbar_sign
        self.feedback_enabled = feedback_enabled
        self.dither_on = dither_on
        self.washout = washout
        self.hfilter = HessianFilter(dither.period, dt, hessian_tau_periods * dither.period)
        self.state = ControllerState(theta1_hat=theta1_hat0, theta2_hat=theta2_hat0)
        self._hhat_used = math.nan

    def boundary_inputs(self, t):
        """Set points at ``t`` without integrating (initial condition)."""
        cs = self.state
        if self.dither_on:
            S1, S2 = eval_S(self.dither, t)
            S1_t, S1_tt = eval_S1_derivs(self.dither, t)
        else:
            S1 = S2 = S1_t = S1_tt = 0.0
        return BoundaryInputs(cs.theta1_hat + S1, cs.theta2_hat + S2, S1_tt, cs.lp1 + S1_t)

    def _hessian_for_law(self):
        if self.use_true_hessian:
            return self.true_hessian
        hf = self.hfilter
        if not hf.ready:
            return None
        if hf.value <= -hf.floor:
            self._hhat_used = hf.value
        return self._hhat_used

    def _washed(self, y):
        """High-passed output ``y - eta`` with ``eta' = h (y - eta)``, ``eta(0) = y(0)``.

        Without it the demodulated signal carries a ripple of size
        ``2 y* / a`` at the dither frequency, which dwarfs the gradient.
        """
        cs = self.state
        if self.washout == 0:
            return y
        if math.isnan(cs.y_mean):
            cs.y_mean = y
        out = y - cs.y_mean
        cs.y_mean = lowpass_step(cs.y_mean, y, self.washout, self.dt)
        return out

    def step(self, t, y, beta, beta_t, beta_at_1):
        """Consume the measurement at ``t``; return inputs for ``t + dt``."""
        cs = self.state
        if self.dither_on:
            cs.G, cs.Hhat = estimate(self._washed(y), t, self.dither)
        else:
            cs.G, cs.Hhat = 0.0, 0.0
        cs.Hhat_filt = self.hfilter.update(cs.Hhat)

        hhat = self._hessian_for_law()
        if self.feedback_enabled and hhat is not None:
            cs.U1_raw, cs.U2_raw = compute_U(
                self.table, beta, beta_t, beta_at_1, cs.G, hhat, self.gains,
                theta_feedback=self.theta_feedback, u1_sign=self.u1_sign,
                hessian_scaled=self.hessian_scaled, literal_kbar_sign=self.literal_kbar_sign)
        else:
            cs.U1_raw = cs.U2_raw = 0.0

        cs.lp1 = lowpass_step(cs.lp1, cs.U1_raw, self.gains.cbar, self.dt)
        cs.lp2 = lowpass_step(cs.lp2, cs.U2_raw, self.gains.cbar, self.dt)
        return integrate_controls(cs, cs.lp1, cs.lp2, self.dt, self.dither, t + self.dt,
                                  dither_on=self.dither_on)
