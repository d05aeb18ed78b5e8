"""Headline guarantees of the toolkit, one test per advertised claim.

Every test measures the quantity the claim is about, prints a single
PASS/FAIL line with the measured numbers (emitted outside pytest capture
so it shows up in plain runs), and asserts the stated tolerance. Wall
clock budgets are part of the claims and are asserted too.
"""
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from lagrom.analysis import (
    coherence,
    nwidth_proxy,
    relative_l2_error,
    singular_value_decay,
)
from lagrom.core import TimeAxis, subset_time
from lagrom.dmd import fit_dmd, predict
from lagrom.pdmd import (
    decode_and_reconstruct,
    fit_pdmd,
    fit_pod,
    predict_pdmd_trajectory,
    reconstruct_decoded_stack,
)
from lagrom.problems import (
    advdiff1d_manifold,
    advdiff2d_eulerian_exact,
    advdiff2d_lagrangian_data,
    benchmark_advdiff2d,
    benchmark_burgers1d,
    benchmark_burgers2d,
    burgers1d_data,
    generate,
    preset_grid,
    pulse_train_data,
)

RANKS_1D = (6, 8, 10, 12, 14)


def _line(capsys, ok: bool, label: str, detail: str,
          elapsed: float = None, budget: float = None) -> None:
    tail = ""
    if budget is not None:
        tail = f"  [{elapsed:.2f}s / budget {budget:.0f}s]"
    with capsys.disabled():
        print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}{tail}")


def _pdmd_prediction_error(train, truth, test_values, steps, r):
    """Fit rank-r surrogate on train, forecast each test parameter, decode
    to the fixed grid, return mean relative L2 error against truth."""
    model = fit_pdmd(train, fit_pod(train, r), r)
    pred = np.empty_like(truth)
    for i, mu in enumerate(np.atleast_2d(test_values)):
        traj = predict_pdmd_trajectory(model, mu, steps)
        for k in range(steps):
            pred[i, k] = decode_and_reconstruct(model, traj[k], train.grid)
    return relative_l2_error(truth, pred).mean


def test_rank_collapse_1d_translating_pulse(capsys):
    """Moving-frame snapshots of a rigidly translating pulse are rank 2 to
    machine precision; the fixed frame needs many modes for the same data."""
    t0 = time.perf_counter()
    grid = preset_grid("adv1d")
    times = TimeAxis(0.0, 1.0 / 80.0, 81)
    s_lag = singular_value_decay(pulse_train_data("lagrangian", grid, times))
    s_eul = singular_value_decay(pulse_train_data("eulerian", grid, times))
    elapsed = time.perf_counter() - t0
    ok = s_lag[2] < 1e-10 and s_eul[9] > 1e-3 and elapsed < 1.0
    _line(capsys, ok, "rank collapse, 1D translating pulse",
          f"moving s3/s1={s_lag[2]:.2e} (<1e-10), fixed s10/s1={s_eul[9]:.2e} (>1e-3)",
          elapsed, 1.0)
    assert s_lag[2] < 1e-10
    assert s_eul[9] > 1e-3
    assert elapsed < 1.0


def test_rank_collapse_2d_rigid_transport(capsys):
    """2D pure advection sampled over a 12x12 (direction, time) grid has a
    three-dimensional moving-frame snapshot span."""
    t0 = time.perf_counter()
    grid = preset_grid("advdiff2d")
    thetas = np.linspace(0.0, 2.0 * np.pi, 12, endpoint=False)
    snaps = advdiff2d_lagrangian_data(grid, TimeAxis(0.0, 1.0 / 11.0, 12),
                                      thetas, D=0.0)
    s = singular_value_decay(snaps)
    elapsed = time.perf_counter() - t0
    ok = s[3] < 1e-10 and elapsed < 5.0
    _line(capsys, ok, "rank collapse, 2D rigid transport",
          f"s4/s1={s[3]:.2e} (<1e-10)", elapsed, 5.0)
    assert s[3] < 1e-10
    assert elapsed < 5.0


def test_nwidth_decay_diffusing_window(capsys):
    """On characteristics the advected diffusing window loses its transport
    character and the width proxy decays at least geometrically: with C
    pinned at n=3, d_hat(n) <= C (5/6)^(n-2) through n=12."""
    t0 = time.perf_counter()
    grid = preset_grid("advdiff1d")
    man = advdiff1d_manifold(grid, TimeAxis(0.0, 0.01, 101), mu=1e-4,
                             sigma0=0.1, frame="lagrangian")
    curve = nwidth_proxy(man, 12)
    q = 5.0 / 6.0
    C = curve.d_hat[3] / q
    n = np.arange(3, 13)
    bound = C * q ** (n - 2)
    margin = (curve.d_hat[3:13] / bound).max()
    elapsed = time.perf_counter() - t0
    ok = margin <= 1.0 + 1e-9 and elapsed < 5.0
    _line(capsys, ok, "n-width decay, diffusing window on characteristics",
          f"max d_hat/bound={margin:.3f} over n in [3,12] (<=1)", elapsed, 5.0)
    assert margin <= 1.0 + 1e-9
    assert elapsed < 5.0


def test_coherence_separates_frames(capsys):
    """Past the training window the moving-frame pulse still correlates with
    training data (interpolation regime) while the fixed frame decorrelates
    well before the horizon ends."""
    t0 = time.perf_counter()
    grid = preset_grid("adv1d")
    train_t = TimeAxis(0.0, 0.01, 81)           # t in [0, 0.8]
    eval_t = TimeAxis(0.85, 0.05, 4)            # t in (0.8, 1.0]
    lag = coherence(pulse_train_data("lagrangian", grid, train_t),
                    pulse_train_data("lagrangian", grid, eval_t))
    eul = coherence(pulse_train_data("eulerian", grid, train_t),
                    pulse_train_data("eulerian", grid, eval_t))
    lag_min = lag.min_over(0.8, 1.0)
    before_end = eul.times < 1.0 - 1e-12
    eul_drop = float(eul.gamma[:, before_end].min())
    elapsed = time.perf_counter() - t0
    ok = lag_min > 0.99 and eul_drop < 0.5 and elapsed < 1.0
    _line(capsys, ok, "coherence separation between frames",
          f"moving min gamma={lag_min:.4f} (>0.99), "
          f"fixed gamma={eul_drop:.3f} before t=1 (<0.5)", elapsed, 1.0)
    assert lag_min > 0.99
    assert eul_drop < 0.5
    assert elapsed < 1.0


def test_exact_recovery_of_low_rank_linear_dynamics(capsys):
    """A rank-5 linear system in a 50-dim ambient space is recovered by the
    rank-5 fit well past working precision over a 20-step forecast."""
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((50, 5)))
    G = rng.standard_normal((5, 5))
    A0 = G * (0.95 / np.abs(np.linalg.eigvals(G)).max())
    h = rng.standard_normal(5)
    H = np.empty((5, 30))
    for k in range(30):
        H[:, k] = h
        h = A0 @ h
    X = Q @ H
    op = fit_dmd(X, 5)
    pred = predict(op, X[:, 0], 20)
    truth = Q @ (np.linalg.matrix_power(A0, 20) @ H[:, 0])
    rel = np.linalg.norm(pred - truth) / np.linalg.norm(truth)
    ok = rel < 1e-8
    _line(capsys, ok, "exact recovery of low-rank linear dynamics",
          f"20-step relative error={rel:.2e} (<1e-8), n=50 r=5 radius=0.95")
    assert rel < 1e-8


def test_benchmark_burgers1d_rom(capsys):
    """Full surrogate pipeline on the 1D viscous benchmark: 21 training
    Reynolds numbers, 4 unseen ones, 20 forecast steps. The moving-frame
    model stays under 5% at r=14, beats the fixed frame at every rank, and
    gains information monotonically in r (10% run-to-run slack)."""
    t0 = time.perf_counter()
    cfg = benchmark_burgers1d()
    grid = cfg["grid"]
    truth = burgers1d_data("eulerian", grid, cfg["test_times"],
                           cfg["test_values"]).data
    errs = {}
    for frame in ("lagrangian", "eulerian"):
        train = burgers1d_data(frame, grid, cfg["train_times"], cfg["train_values"])
        for r in RANKS_1D:
            errs[frame, r] = _pdmd_prediction_error(
                train, truth, cfg["test_values"][:, None], cfg["test_steps"], r)
    elapsed = time.perf_counter() - t0

    lag = [errs["lagrangian", r] for r in RANKS_1D]
    beats = all(errs["lagrangian", r] < errs["eulerian", r] for r in RANKS_1D)
    monotone = all(b <= a * 1.10 for a, b in zip(lag, lag[1:]))
    ok = lag[-1] < 0.05 and beats and monotone and elapsed < 120.0
    _line(capsys, ok, "1D viscous flow benchmark",
          f"moving r=14 err={lag[-1]:.3f} (<0.05), "
          f"moving<fixed at r in {RANKS_1D}: {beats}, monotone: {monotone}",
          elapsed, 120.0)
    assert lag[-1] < 0.05
    assert beats
    assert monotone
    assert elapsed < 120.0


def test_benchmark_rotating_transport_2d(capsys):
    """2D rotating-transport benchmark: 30 training directions, 6 unseen
    ones, forecast over the last fifth of the horizon. Moving-frame errors
    stay under 5% for r in {4,6,8,10}; the fixed frame exceeds 50% at r=6."""
    t0 = time.perf_counter()
    cfg = benchmark_advdiff2d()
    grid, tt = cfg["grid"], cfg["train_times"]
    steps = cfg["test_steps"]

    lag_train = advdiff2d_lagrangian_data(grid, tt, cfg["train_values"])
    lag_truth = advdiff2d_eulerian_exact(grid, cfg["test_times"],
                                         cfg["test_values"]).data
    lag_errs = {r: _pdmd_prediction_error(lag_train, lag_truth,
                                          cfg["test_values"][:, None], steps, r)
                for r in (4, 6, 8, 10)}

    eul_train = generate("advdiff2d", "eulerian", cfg["train_values"][:, None],
                         grid, tt, jobs=4)
    eul_runs = generate("advdiff2d", "eulerian", cfg["test_values"][:, None],
                        grid, TimeAxis(0.0, cfg["dt"], 101), jobs=4)
    eul_truth = eul_runs.data[:, 81:101]
    eul_err6 = _pdmd_prediction_error(eul_train, eul_truth,
                                      cfg["test_values"][:, None], steps, 6)
    elapsed = time.perf_counter() - t0

    lag_ok = all(e < 0.05 for e in lag_errs.values())
    ok = lag_ok and eul_err6 > 0.5 and elapsed < 600.0
    _line(capsys, ok, "2D rotating transport benchmark",
          f"moving max err={max(lag_errs.values()):.3f} over r in (4,6,8,10) "
          f"(<0.05), fixed r=6 err={eul_err6:.3f} (>0.5)", elapsed, 600.0)
    assert lag_ok
    assert eul_err6 > 0.5
    assert elapsed < 600.0


def _coupled_2d_error(points: int) -> float:
    # staged so peak memory stays around one stacked matrix plus its SVD:
    # the training sweep is folded into the model and released before the
    # test sweep starts (the 128x128 variant would not fit otherwise)
    cfg = benchmark_burgers2d(points)
    grid = cfg["grid"]
    full = generate("burgers2d", "lagrangian", cfg["train_values"][:, None],
                    grid, cfg["march_times"], snapshots=101)
    train = subset_time(full, *cfg["train_window"])
    del full
    model = fit_pdmd(train, fit_pod(train, 12), 12)
    del train
    test_full = generate("burgers2d", "lagrangian", cfg["test_values"][:, None],
                         grid, cfg["march_times"], snapshots=101)
    test_window = subset_time(test_full, *cfg["test_window"])
    del test_full
    truth = reconstruct_decoded_stack(test_window, grid)
    del test_window
    steps = cfg["test_window"][1] - cfg["test_window"][0] + 1
    pred = np.empty_like(truth)
    for i, mu in enumerate(cfg["test_values"][:, None]):
        traj = predict_pdmd_trajectory(model, mu, steps)
        for k in range(steps):
            pred[i, k] = decode_and_reconstruct(model, traj[k], grid)
    return relative_l2_error(truth, pred).mean


def test_benchmark_coupled_2d_ci_scale(capsys):
    """2D coupled-flow benchmark at the reduced 64x64 CI resolution:
    17 training amplitudes, 8 held-out ones, 10 forecast steps, r=12,
    under 1% mean error."""
    t0 = time.perf_counter()
    err = _coupled_2d_error(64)
    elapsed = time.perf_counter() - t0
    ok = err < 0.01 and elapsed < 300.0
    _line(capsys, ok, "2D coupled flow benchmark (64x64)",
          f"r=12 err={err:.5f} (<0.01)", elapsed, 300.0)
    assert err < 0.01
    assert elapsed < 300.0


@pytest.mark.desk
@pytest.mark.skipif(os.environ.get("LAGROM_DESK") != "1",
                    reason="full-resolution run, enable with LAGROM_DESK=1")
def test_benchmark_coupled_2d_desk_scale(capsys):
    """Same benchmark at the full 128x128 resolution."""
    t0 = time.perf_counter()
    err = _coupled_2d_error(128)
    elapsed = time.perf_counter() - t0
    ok = err < 0.01 and elapsed < 1800.0
    _line(capsys, ok, "2D coupled flow benchmark (128x128)",
          f"r=12 err={err:.5f} (<0.01)", elapsed, 1800.0)
    assert err < 0.01
    assert elapsed < 1800.0


def test_property_suites_green(capsys):
    """All invariant property suites pass: stacking bijection, container
    round trip, flux conservation, implicit-solve residual, interpolant
    nodal exactness, and the error-metric identities."""
    root = Path(__file__).resolve().parent.parent
    r = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-m", "properties",
         "-p", "no:cacheprovider", str(root / "tests")],
        capture_output=True, text=True, cwd=root)
    tail = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else "no output"
    ok = r.returncode == 0 and " passed" in tail
    _line(capsys, ok, "invariant property suites", tail)
    assert ok, r.stdout + r.stderr
