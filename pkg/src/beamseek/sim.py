"""Scenario configuration, the closed-loop run, and its outputs."""

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beam import BeamMesh, BeamProbe, MapConfig, NewmarkBeam, nodal_dofs
from .controller import THETA_FEEDBACK_MODES, EsController, EsGains
from .dither import DitherParams, eval_R, eval_R_x
from .kernels import build_kernel_table

log = logging.getLogger(__name__)

TIMESERIES_COLUMNS = ("t", "Theta", "y", "theta1", "theta2", "G", "Hhat", "U1", "U2",
                      "theta1_hat", "theta2_hat", "Hhat_filt")
N_SNAPSHOTS = 100
SUMMARY_PERIODS = 5


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    H: float = -1.0
    Theta_star: float = 1.5
    y_star: float = 2.4
    a: float = 0.2
    omega: float = 5.0
    K: float = 0.1
    c: float = 0.1
    cbar: float = 6.0
    n_elems: int = 20
    dt: float = math.nan  # nan -> 2 pi / (1000 omega)
    t_end: float = 200.0
    quad_order: int = 64
    theta1_hat0: float = 0.5
    theta2_hat0: float = 0.0
    use_true_hessian: bool = False
    u1_sign_variant: bool = False
    theta_feedback: str = "ratio"
    hessian_scaled: bool = False
    literal_kbar_sign: bool = False
    feedback_enabled: bool = True
    washout: float = 0.5
    decimation: int = 10
    out_dir: str = "out"

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ConfigError(f"omega: dither frequency must be positive, got {self.omega}")
        if math.isnan(self.dt):
            self.dt = 2.0 * math.pi / (1000.0 * self.omega)
        self.validate()

    def validate(self):
        if not self.t_end > 0:
            raise ConfigError(f"t_end: must be positive, got {self.t_end}")
        if not self.dt > 0:
            raise ConfigError(f"dt: must be positive, got {self.dt}")
        if self.decimation < 1:
            raise ConfigError(f"decimation: must be >= 1, got {self.decimation}")
        if self.theta_feedback not in THETA_FEEDBACK_MODES:
            raise ConfigError(f"theta_feedback: must be one of {THETA_FEEDBACK_MODES}")
        if not (math.isfinite(self.washout) and self.washout >= 0):
            raise ConfigError(f"washout: must be >= 0, got {self.washout}")
        if self.quad_order < 8:
            raise ConfigError(f"quad_order: must be >= 8, got {self.quad_order}")
        try:
            self.map_config()
            self.dither()
            self.gains()
            self.mesh()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def map_config(self):
        return MapConfig(self.H, self.Theta_star, self.y_star)

    def dither(self):
        if self.a == 0:
            raise ConfigError("a: dither amplitude must be nonzero (demodulation divides by a)")
        return DitherParams(self.a, self.omega)

    def gains(self):
        return EsGains(self.K, self.c, self.cbar)

    def mesh(self):
        return BeamMesh(self.n_elems)

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text, source="<config>"):
    """Parse flat ``key = value`` text; missing keys keep their defaults."""
    fields = {f.name: f for f in dataclasses.fields(SimConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        kind = fields[key].type
        try:
            if kind in (bool, "bool"):
                values[key] = _parse_bool(val)
            elif kind in (int, "int"):
                values[key] = int(val)
            elif kind in (float, "float"):
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return SimConfig(**values)


def load_config(path):
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))


@dataclass
class RunSummary:
    final_Theta_err: float
    final_y_err: float
    final_theta1_err: float
    settled: bool
    wall_time: float
    extra: dict = field(default_factory=dict)

    def lines(self):
        out = [f"final_Theta_err: {self.final_Theta_err!r}",
               f"final_y_err: {self.final_y_err!r}",
               f"final_theta1_err: {self.final_theta1_err!r}",
               f"settled: {self.settled}",
               f"wall_time: {self.wall_time:.3f}"]
        out += [f"{k}: {v!r}" for k, v in self.extra.items()]
        return out


def summarize(history, cfg, wall_time=0.0):
    """Convergence metrics over the last five dither periods.

    ``history`` maps column names to full-resolution arrays.
    """
    n_last = int(round(SUMMARY_PERIODS * cfg.dither().period / cfg.dt))
    tail = slice(-n_last, None)
    Theta = history["Theta"][tail]
    y = history["y"][tail]
    theta1 = history["theta1"][tail]
    theta_err = float(np.mean(np.abs(Theta - cfg.Theta_star)))
    y_err = float(np.mean(np.abs(y - cfg.y_star)))
    theta1_err = float(np.max(np.abs(theta1 - cfg.Theta_star)))
    # settled: the integrator state stayed within 0.3 of the optimizer for the last quarter
    hat = history["theta1_hat"]
    quarter = hat[-max(1, len(hat) // 4):]
    settled = bool(np.all(np.abs(quarter - cfg.Theta_star) <= 0.3))
    extra = {
        "mean_Theta": float(np.mean(Theta)),
        "mean_y": float(np.mean(y)),
        "final_theta1_hat": float(hat[-1]),
    }
    return RunSummary(theta_err, y_err, theta1_err, settled, wall_time, extra)


class ClosedLoop:
    """Plant, probe and controller wired together for one configuration."""

    def __init__(self, cfg, table=None, dither_on=True):
        self.cfg = cfg
        self.mesh = cfg.mesh()
        self.map = cfg.map_config()
        self.p = cfg.dither()
        self.dither_on = dither_on
        self.table = table if table is not None else build_kernel_table(cfg.c, cfg.quad_order, cfg.n_elems)
        if (self.table.quad_order != cfg.quad_order or self.table.c != cfg.c
                or self.table.panels != cfg.n_elems):
            raise ConfigError("kernel table does not match configuration")
        self.beam = NewmarkBeam(self.mesh, cfg.dt)
        self.probe = BeamProbe(self.mesh, self.table.y)
        self.ctrl = EsController(
            self.table, cfg.gains(), self.p, cfg.dt, cfg.theta1_hat0, cfg.theta2_hat0,
            true_hessian=cfg.H, use_true_hessian=cfg.use_true_hessian,
            u1_sign_variant=cfg.u1_sign_variant, theta_feedback=cfg.theta_feedback,
            feedback_enabled=cfg.feedback_enabled, dither_on=dither_on,
            hessian_scaled=cfg.hessian_scaled, literal_kbar_sign=cfg.literal_kbar_sign,
            washout=cfg.washout)
        self.state = self._initial_state()
        self.theta2 = self.ctrl.boundary_inputs(0.0).theta2

    def _initial_state(self):
        """Static deflection for the initial set points plus the dither's periodic motion.

        Starting on the reference trajectory avoids exciting the undamped
        beam modes with the dither's initial velocity.
        """
        x = self.mesh.nodes
        th1, th2 = self.cfg.theta1_hat0, self.cfg.theta2_hat0
        u = th1 - 0.5 * th2 + 0.5 * th2 * x**2
        u_x = th2 * x
        d = nodal_dofs(self.mesh, u, u_x)
        if self.dither_on:
            _, rt, _ = eval_R(self.p, 0.0, x)
            _, rxt = eval_R_x(self.p, 0.0, x)
            v = nodal_dofs(self.mesh, rt, rxt)
        else:
            v = np.zeros(self.mesh.ndof)
        v[self.mesh.rot0] = 0.0
        inputs = self.ctrl.boundary_inputs(0.0)
        return self.beam.initial_state(d, v, theta2=inputs.theta2,
                                       fixed_acc=(0.0, inputs.theta1_tt))

    def advance(self, n):
        """Take step ``n`` (from t = n dt); return the row recorded at t."""
        dt = self.cfg.dt
        t = n * dt
        Theta, y, beta, beta_t, b1 = self.probe.measure(self.state, self.map, self.p,
                                                        dither_on=self.dither_on)
        theta1_now = float(self.state.d[self.mesh.disp1])
        inputs = self.ctrl.step(t, y, beta, beta_t, b1)
        cs = self.ctrl.state
        row = (t, Theta, y, theta1_now, self.theta2, cs.G, cs.Hhat, cs.lp1, cs.lp2,
               cs.theta1_hat - cs.lp1 * dt, cs.theta2_hat - cs.lp2 * dt, cs.Hhat_filt)
        try:
            self.state = self.beam.step(self.state, inputs.theta1, inputs.theta1_t,
                                        inputs.theta1_tt, inputs.theta2, t_new=(n + 1) * dt)
        except (ValueError, FloatingPointError) as exc:
            raise RuntimeError(f"step {n} (t = {t:.6f}): {exc}") from exc
        self.theta2 = inputs.theta2
        return row


def run(cfg, out_dir=None, write=True, plots=True, table=None):
    """Run the closed loop; write CSV/summary (and figures) if ``write``."""
    t0 = time.perf_counter()
    loop = ClosedLoop(cfg, table=table)
    n_steps = cfg.n_steps
    hist = np.empty((n_steps, len(TIMESERIES_COLUMNS)))
    snap_idx = set(np.round(np.linspace(0, n_steps - 1, N_SNAPSHOTS)).astype(int).tolist())
    snapshots = []
    for n in range(n_steps):
        if n in snap_idx:
            snapshots.append((n * cfg.dt, loop.state.d[0::2].copy()))
        hist[n] = loop.advance(n)
    wall = time.perf_counter() - t0
    history = {name: hist[:, k] for k, name in enumerate(TIMESERIES_COLUMNS)}
    summary = summarize(history, cfg, wall)
    log.info("run finished in %.1f s: %s", wall, summary)

    if write:
        out = Path(out_dir if out_dir is not None else cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_timeseries(out / "timeseries.csv", hist, cfg.decimation)
        write_snapshots(out / "snapshots.csv", loop.mesh.nodes, snapshots)
        (out / "summary.txt").write_text("\n".join(summary.lines()) + "\n")
        if plots:
            from .plotting import plot_run
            plot_run(out, history, loop.mesh.nodes, snapshots, cfg)
    return summary, history


def _fmt(v):
    return format(float(v), ".17g")


def write_timeseries(path, hist, decimation=1):
    with open(path, "w") as fh:
        fh.write(",".join(TIMESERIES_COLUMNS) + "\n")
        for row in hist[::decimation]:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_snapshots(path, x, snapshots):
    """First row: ``t`` then node coordinates; then one row per snapshot time."""
    with open(path, "w") as fh:
        fh.write("t," + ",".join(_fmt(v) for v in x) + "\n")
        for t, u in snapshots:
            fh.write(_fmt(t) + "," + ",".join(_fmt(v) for v in u) + "\n")


def read_timeseries(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    return {name: data[:, k] for k, name in enumerate(names)}
