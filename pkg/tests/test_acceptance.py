"""The eight acceptance criteria, one test each, at their stated tolerances.

Every test prints (and records for the terminal summary) a single
``[PASS]``/``[FAIL]`` line before asserting.
"""

import math
import time

import numpy as np
import pytest

from beamseek.beam import BeamMesh, NewmarkBeam, at_rest, constrained_eigenfrequencies
from beamseek.controller import EsGains, compute_U
from beamseek.dither import DitherParams, eval_R
from beamseek.kernels import build_kernel_table, kappa_parts, kappa_pde_residual
from beamseek.sim import SimConfig, parse_config, run
from beamseek.spectrum import target_spectrum
from beamseek.validate import averaged_estimates, free_vibration_drift
from beamseek.beam import MapConfig

from conftest import ACCEPTANCE_LINES
from oracles import KernelOracle


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number} ({title}): {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    cfg = SimConfig()
    t0 = time.perf_counter()
    summary, hist = run(cfg, out_dir=tmp_path_factory.mktemp("default"), plots=False)
    return cfg, summary, hist, time.perf_counter() - t0


def test_criterion_1_closed_loop_convergence(default_run):
    cfg, s, _, wall = default_run
    ok = s.final_Theta_err <= 0.3 and s.final_y_err <= 0.06 and wall < 60.0
    assert report(1, "closed-loop convergence", ok,
                  f"|Theta-Theta*| = {s.final_Theta_err:.4f} (<= 0.3), "
                  f"|y-y*| = {s.final_y_err:.4f} (<= 0.06), run {wall:.1f} s (< 60 s)")


def test_criterion_2_theta1_neighbourhood(default_run):
    cfg, s, _, _ = default_run
    bound = cfg.dither().amp1 + 0.1
    ok = s.final_theta1_err <= 0.52 and s.final_theta1_err <= bound
    assert report(2, "theta1 neighbourhood", ok,
                  f"max |theta1-Theta*| = {s.final_theta1_err:.4f} (<= {bound:.4f})")


def test_criterion_3_averaging_identity():
    p = DitherParams(0.2, 5.0)
    cfg = MapConfig(-1.0, 1.5, 2.4)
    t0 = time.perf_counter()
    worst = 0.0
    for th in (1.0, 1.5, 2.0):
        g, h = averaged_estimates(p, cfg, th, n_samples=10000)
        g_ref = cfg.H * (th - cfg.Theta_star)
        # relative where the reference is nonzero, absolute at the optimum
        worst = max(worst, abs(g - g_ref) / (abs(g_ref) if g_ref else 1.0),
                    abs(h - cfg.H) / abs(cfg.H))
    wall = time.perf_counter() - t0
    ok = worst <= 1e-8 and wall < 1.0
    assert report(3, "averaging identity", ok, f"max rel err {worst:.2e} (<= 1e-8), {wall:.2f} s")


def test_criterion_4_kernels():
    t0 = time.perf_counter()
    c = 0.1
    res = [kappa_pde_residual(c, n) for n in (32, 64, 128)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    x = np.linspace(0.1, 1.0, 10)
    kr, ki = kappa_parts(c, x, x)
    diag = float(np.max(np.abs(kr + 1j * ki + 0.5j * c * x)))
    table = build_kernel_table(c, 64)
    o0, o1 = KernelOracle(c, 0.0), KernelOracle(c, 1.0)
    worst = 0.0
    for j, yj in enumerate(map(float, table.y)):
        pairs = [
            (table.kappa_r[j], o1.kr(yj)), (table.kappa_i[j], o1.ki(yj)),
            (table.f1_unit[j], o1.moment("i", yj)), (table.f2_unit[j], o1.moment("r", yj)),
            (table.g1_unit[j], o1.moment("r", yj)), (table.g2_unit[j], o1.moment("i", yj)),
        ]
        for name in ("F1", "F2", "R1", "R2", "Q", "S"):
            ref0 = getattr(o0, name)(yj)
            ref1 = getattr(o1, name)(yj)
            pairs += [(getattr(table, f"{name}_0")[j], ref0),
                      (getattr(table, f"{name}_1")[j], ref1 - ref0)]
        worst = max(worst, max(abs(a - b) for a, b in pairs))
    worst = max(worst, abs(table.p1_unit - o1.p1), abs(table.p2_unit - o1.p2))
    wall = time.perf_counter() - t0
    ok = (bool(np.all((orders >= 1.8) & (orders <= 2.2))) and diag <= 1e-9
          and worst <= 1e-10 and wall < 10.0)
    assert report(4, "kernel correctness", ok,
                  f"residual orders {orders[0]:.3f}, {orders[1]:.3f} (in [1.8, 2.2]); "
                  f"diagonal err {diag:.1e} (<= 1e-9); table vs oracle {worst:.1e} (<= 1e-10); "
                  f"{wall:.1f} s")


def test_criterion_5_spectrum():
    t0 = time.perf_counter()
    rep = target_spectrum(0.1, 0.1, 200, 4)
    wall = time.perf_counter() - t0
    err0 = abs(rep.computed[0] - (-0.1)) if rep.computed[0] is not None else math.inf
    im_err = re_err = 0.0
    for p, q in zip(rep.predicted[1:], rep.computed[1:]):
        if q is None:
            im_err = re_err = math.inf
            break
        im_err = max(im_err, abs(q.imag - p.imag) / abs(p.imag))
        re_err = max(re_err, abs(q.real - p.real))
    ok = err0 <= 1e-6 and im_err <= 0.01 and re_err <= 0.02 and wall < 30.0
    assert report(5, "target spectrum", ok,
                  f"|sigma0 + kbar| = {err0:.1e} (<= 1e-6), pairs: Im rel {im_err:.1e} (<= 1e-2), "
                  f"Re abs {re_err:.1e} (<= 0.02), {wall:.1f} s")


def test_criterion_6_fem():
    target = math.pi**2 / 4
    w1 = float(constrained_eigenfrequencies(BeamMesh(100), 1)[0])
    rel = abs(w1 - target) / target
    drift = free_vibration_drift(n_elems=20, periods=10)
    ok = rel <= 1e-3 and drift <= 1e-9
    assert report(6, "FEM fidelity", ok,
                  f"omega1 rel err {rel:.1e} at n = 100 (<= 1e-3); energy drift {drift:.1e} "
                  f"over 10 periods at n = 20 (<= 1e-9)")


def test_criterion_7_trajectory():
    p = DitherParams(0.2, 5.0)
    R = lambda t, x: eval_R(p, t, x)[0]
    t = np.linspace(0.0, p.period, 100)[:, None]
    x = np.linspace(0.0, 1.0, 100)[None, :]
    f = np.vectorize(R)
    ht, hx = 2e-4, 0.02
    R_tt = (f(t + ht, x) - 2 * f(t, x) + f(t - ht, x)) / ht**2
    coef = (-1 / 6, 2.0, -13 / 2, 28 / 3, -13 / 2, 2.0, -1 / 6)
    R_xxxx = sum(ck * f(t, x + (k - 3) * hx) for k, ck in enumerate(coef)) / hx**4
    ratio = float(np.max(np.abs(R_tt + R_xxxx)) / np.max(np.abs(f(t, x))))
    ok = ratio <= 1e-4 and abs(p.amp1 - 0.4115) <= 1e-3 and abs(p.amp2 - 2.6745) <= 1e-3
    assert report(7, "trajectory generation", ok,
                  f"FD residual / max|R| = {ratio:.1e} (<= 1e-4); amp1 = {p.amp1:.4f}, "
                  f"amp2 = {p.amp2:.4f}")


def test_criterion_8_regression_properties(tmp_path):
    mesh = BeamMesh(20)
    beam = NewmarkBeam(mesh, 2 * math.pi / 5000)
    state = at_rest(mesh)
    for _ in range(5000):
        state = beam.step(state, 0.0, 0.0, 0.0, 0.0)
    zero = float(max(np.max(np.abs(state.d)), np.max(np.abs(state.v))))

    t0 = build_kernel_table(0.0, 64)
    rng = np.random.default_rng(8)
    collapse = 0.0
    for _ in range(20):
        beta, beta_t = rng.normal(size=(2, len(t0.y)))
        U = compute_U(t0, beta, beta_t, rng.normal(), rng.normal(), -1.0,
                      EsGains(0.1, 1.0, 6.0), kbar=0.0)
        collapse = max(collapse, abs(U[0]), abs(U[1]))

    cfg = parse_config("t_end = 5")
    run(cfg, out_dir=tmp_path / "a", plots=False)
    run(cfg, out_dir=tmp_path / "b", plots=False)
    same = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
               for n in ("timeseries.csv", "snapshots.csv"))
    ok = zero <= 1e-14 and collapse == 0.0 and same
    assert report(8, "equilibrium/regression", ok,
                  f"zero beam max {zero:.1e} (<= 1e-14); c = kbar = 0 max |U| = {collapse:.1e}; "
                  f"identical CSV bytes: {same}")


def test_supplementary_ascent_direction(default_run):
    # not one of the eight criteria: the output climbs towards y* on the way in.
    # Windows span two dither periods because the first beam mode (period
    # about 2.5 s, lightly damped) beats against one-period averages.
    cfg, _, hist, _ = default_run
    n = int(round(2 * cfg.dither().period / cfg.dt))
    y = hist["y"]
    means = y[: len(y) // n * n].reshape(-1, n).mean(axis=1)
    first = int(np.argmax(np.abs(means - cfg.y_star) <= 0.06))
    assert first > 0
    assert np.all(np.diff(means[: first + 1]) > 0)
    # once there, it stays near the optimum
    assert np.all(np.abs(means[first:] - cfg.y_star) <= 0.06)
