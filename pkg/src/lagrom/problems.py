"""Built-in problem presets and snapshot-data generators.

Five problems are exposed through the CLI: linear advection of a narrow
pulse (adv1d), viscous Burgers with a closed-form solution (burgers1d),
an advected diffusing window (advdiff1d), rigid 2D advection-diffusion of
a Gaussian (advdiff2d), and 2D coupled Burgers (burgers2d).

Where a closed-form solution exists it is used to generate benchmark data:
burgers1d in both frames (moving-frame coordinates integrated along exact
characteristics with RK4) and the moving-frame advdiff2d data (nodes ride
the rigid characteristics exactly; resampling a finite-difference state
back and forth between frames every step would deposit a parameter-dependent
diffusion floor that has nothing to do with the physics). The grid-based
solvers in `fom` cover everything else and are cross-checked against the
same closed forms in the test suite.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .core import Grid, ParamSet, SnapshotSet, TimeAxis
from .fom import (
    AdvectionDiffusionProblem1D,
    Problem2D,
    advdiff1d_exact,
    burgers1d_exact,
    solve_eulerian_1d,
    solve_eulerian_2d,
    solve_lagrangian_1d,
    solve_lagrangian_2d,
)

PROBLEM_NAMES = ("adv1d", "burgers1d", "advdiff1d", "advdiff2d", "burgers2d")

PARAM_NAMES = {
    "adv1d": ("c",),
    "burgers1d": ("Re",),
    "advdiff1d": ("mu",),
    "advdiff2d": ("theta",),
    "burgers2d": ("mu",),
}

# Domain presets; the CLI --grid flag only chooses resolution.
DOMAINS = {
    "adv1d": (((0.0, 2.0),), (True,)),
    "burgers1d": (((0.0, 1.5),), (False,)),
    "advdiff1d": (((0.0, 2.0),), (True,)),
    "advdiff2d": (((0.0, 4.0), (0.0, 4.0)), (True, True)),
    "burgers2d": (((0.0, 5.0), (0.0, 5.0)), (True, True)),
}

DEFAULT_POINTS = {
    "adv1d": (128,),
    "burgers1d": (128,),
    "advdiff1d": (256,),
    "advdiff2d": (40, 40),
    "burgers2d": (128, 128),
}

PULSE_CENTER = 0.3
PULSE_WIDTH = 0.005   # squared width in the Gaussian denominator
PULSE_AMP = 0.5
ADVDIFF2D_D = 1e-3
ADVDIFF2D_S0 = 0.1
BURGERS2D_NU = 0.01


def preset_grid(problem: str, points: Optional[Sequence[int]] = None) -> Grid:
    bounds, periodic = DOMAINS[problem]
    pts = tuple(points) if points is not None else DEFAULT_POINTS[problem]
    if len(pts) != len(bounds):
        raise ValueError(f"{problem} needs {len(bounds)} grid extents, got {len(pts)}")
    return Grid(bounds=bounds, points=tuple(int(n) for n in pts), periodic=periodic)


# ------------------------------------------------------------ 1D problems

def advection_problem_1d() -> AdvectionDiffusionProblem1D:
    """Linear advection of a narrow Gaussian pulse; parameter is the speed."""
    return AdvectionDiffusionProblem1D(
        flux=lambda u, mu: mu[0] * u,
        wave_speed=lambda u, mu: np.full_like(np.asarray(u, dtype=np.float64), mu[0]),
        diffusion=lambda x, t, u, mu: np.zeros_like(x),
        initial=lambda x, mu: PULSE_AMP * np.exp(-((x - PULSE_CENTER) ** 2) / PULSE_WIDTH),
        bc="periodic",
    )


def advdiff_problem_1d(sigma0: float = 0.1) -> AdvectionDiffusionProblem1D:
    """Unit-speed advection of a smoothed window; parameter is the
    diffusion coefficient."""
    return AdvectionDiffusionProblem1D(
        flux=lambda u, mu: u,
        wave_speed=lambda u, mu: np.ones_like(np.asarray(u, dtype=np.float64)),
        diffusion=lambda x, t, u, mu: np.full_like(x, mu[0]),
        initial=lambda x, mu: advdiff1d_exact(x, 0.0, mu[0], sigma0),
        bc="periodic",
    )


def burgers_problem_1d(nu_from=lambda mu: 1.0 / mu[0]) -> AdvectionDiffusionProblem1D:
    """Viscous Burgers as a finite-difference problem (used for solver
    validation only; benchmark data comes from the closed form). The
    parameter is a Reynolds number; viscosity defaults to 1/Re, the value
    for which the closed-form profile satisfies the equation."""
    return AdvectionDiffusionProblem1D(
        flux=lambda u, mu: 0.5 * u * u,
        wave_speed=lambda u, mu: np.asarray(u, dtype=np.float64),
        diffusion=lambda x, t, u, mu: np.full_like(x, nu_from(mu)),
        initial=lambda x, mu: burgers1d_exact(x, 0.0, mu[0]),
        bc="dirichlet",
        bc_values=(0.0, 0.0),
    )


# ----------------------------------------------------- closed-form fields

def pulse_exact_1d(x: np.ndarray, t: float, c: float, length: float) -> np.ndarray:
    """Periodically translated Gaussian pulse."""
    d = x - c * t - PULSE_CENTER
    d = d - length * np.round(d / length)
    return PULSE_AMP * np.exp(-d * d / PULSE_WIDTH)


def advdiff2d_exact(X, Y, t: float, theta: float, D: float = ADVDIFF2D_D,
                    s0: float = ADVDIFF2D_S0, period=(4.0, 4.0)) -> np.ndarray:
    """Gaussian blob advected rigidly at angle theta while diffusing, on a
    doubly periodic domain (single-image approximation; the blob stays many
    widths away from its periodic copies for all benchmark horizons)."""
    s = s0 + 4.0 * D * t
    cx = 2.0 + t * math.cos(theta)
    cy = 2.0 + t * math.sin(theta)
    dx = X - cx
    dy = Y - cy
    dx = dx - period[0] * np.round(dx / period[0])
    dy = dy - period[1] * np.round(dy / period[1])
    return (s0 / s) * np.exp(-(dx * dx + dy * dy) / s)


def burgers2d_initial(X, Y, mu: float):
    """Background-1 flow with an amplitude-mu sine bump on [0.2, 1.2]^2;
    u and v start identical."""
    patch = (X >= 0.2) & (X <= 1.2) & (Y >= 0.2) & (Y <= 1.2)
    bump = np.where(patch, np.sin(np.pi * (X - 0.2)) * np.sin(np.pi * (Y - 0.2)), 0.0)
    u0 = 1.0 + mu * bump
    return u0, u0.copy()


def burgers_problem_2d(mu: float, nu: float = BURGERS2D_NU) -> Problem2D:
    return Problem2D(
        variant="burgers",
        initial=lambda X, Y: burgers2d_initial(X, Y, mu),
        diffusion=nu,
    )


def advdiff_problem_2d(theta: float, D: float = ADVDIFF2D_D) -> Problem2D:
    return Problem2D(
        variant="advection_diffusion",
        initial=lambda X, Y: advdiff2d_exact(X, Y, 0.0, theta, D),
        theta=theta,
        diffusion=D,
    )


# ------------------------------------------------- analytic data builders

def _assemble(blocks: list[np.ndarray], grid: Grid, params: ParamSet,
              times: TimeAxis, frame: str, channel_names) -> SnapshotSet:
    return SnapshotSet(grid, params, times, frame, tuple(channel_names),
                       np.stack(blocks, axis=0))


def pulse_train_data(frame: str, grid: Grid, times: TimeAxis, c: float = 1.0) -> SnapshotSet:
    """Closed-form translating-pulse snapshots in either frame (one
    parameter row). Moving-frame coordinates are stored unwrapped."""
    x = grid.nodes(0)
    L = grid.length(0)
    params = ParamSet(("c",), np.array([[c]]))
    if frame == "eulerian":
        data = np.stack([pulse_exact_1d(x, t, c, L) for t in times.times])
        return SnapshotSet(grid, params, times, "eulerian", ("u",), data[None, :, None, :])
    u0 = PULSE_AMP * np.exp(-((x - PULSE_CENTER) ** 2) / PULSE_WIDTH)
    snaps = np.empty((times.count, 2, grid.points[0]))
    for k, t in enumerate(times.times):
        snaps[k, 0] = x + c * t
        snaps[k, 1] = u0
    return SnapshotSet(grid, params, times, "lagrangian", ("chi", "u"), snaps[None])


def burgers1d_data(frame: str, grid: Grid, times: TimeAxis, re_values,
                   rk4_substeps: int = 4) -> SnapshotSet:
    """Closed-form viscous Burgers snapshots. Fixed frame samples the
    formula on the grid; the moving frame integrates node characteristics
    dchi/dt = u(chi, t) with RK4 and evaluates the formula along them."""
    x = grid.nodes(0)
    re_values = np.atleast_1d(np.asarray(re_values, dtype=np.float64))
    params = ParamSet(("Re",), re_values[:, None])
    if frame == "eulerian":
        blocks = []
        for Re in re_values:
            data = np.stack([burgers1d_exact(x, t, Re) for t in times.times])
            blocks.append(data[:, None, :])
        return _assemble(blocks, grid, params, times, "eulerian", ("u",))
    blocks = []
    h = times.dt / rk4_substeps
    for Re in re_values:
        snaps = np.empty((times.count, 2, grid.points[0]))
        chi = x.copy()
        t = times.t0
        # walk characteristics forward from t0 (t0 > 0 starts from the
        # profile at t0, matching a window continued from training)
        snaps[0, 0] = chi
        snaps[0, 1] = burgers1d_exact(chi, t, Re)
        for k in range(1, times.count):
            for _ in range(rk4_substeps):
                k1 = burgers1d_exact(chi, t, Re)
                k2 = burgers1d_exact(chi + 0.5 * h * k1, t + 0.5 * h, Re)
                k3 = burgers1d_exact(chi + 0.5 * h * k2, t + 0.5 * h, Re)
                k4 = burgers1d_exact(chi + h * k3, t + h, Re)
                chi = chi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                t += h
            t = times.instant(k)  # kill accumulated float drift
            snaps[k, 0] = chi
            snaps[k, 1] = burgers1d_exact(chi, t, Re)
        blocks.append(snaps)
    return _assemble(blocks, grid, params, times, "lagrangian", ("chi", "u"))


def advdiff1d_manifold(grid: Grid, times: TimeAxis, mu: float = 1e-4,
                       sigma0: float = 0.1, frame: str = "eulerian") -> SnapshotSet:
    """Closed-form snapshots of the advected diffusing window, used by the
    width diagnostics. The fixed frame sees translation plus spreading; on
    characteristics only the spreading remains (the state channel alone is
    stored, which is what the width bound concerns)."""
    x = grid.nodes(0)
    if frame == "eulerian":
        data = np.stack([advdiff1d_exact(x, t, mu, sigma0) for t in times.times])
    else:
        # chi = x_hat + t, so u(chi, t) seen from the node is the profile
        # with the translation cancelled
        data = np.stack([advdiff1d_exact(x + t, t, mu, sigma0) for t in times.times])
    params = ParamSet(("mu",), np.array([[mu]]))
    return SnapshotSet(grid, params, times, frame, ("u",), data[None, :, None, :])


def jump_transport_data(frame: str, grid: Grid, times: TimeAxis, c: float = 1.0,
                        edge: float = 0.25) -> SnapshotSet:
    """Translating step function (the classic slow-decay case for linear
    bases). Fixed frame stores the moving indicator; the moving frame stores
    the rigid coordinate plus the frozen initial profile."""
    x = grid.nodes(0)
    params = ParamSet(("c",), np.array([[c]]))
    if frame == "eulerian":
        data = np.stack([(x - c * t <= edge).astype(np.float64) for t in times.times])
        return SnapshotSet(grid, params, times, "eulerian", ("u",), data[None, :, None, :])
    u0 = (x <= edge).astype(np.float64)
    snaps = np.empty((times.count, 2, grid.points[0]))
    for k, t in enumerate(times.times):
        snaps[k, 0] = x + c * t
        snaps[k, 1] = u0
    return SnapshotSet(grid, params, times, "lagrangian", ("chi", "u"), snaps[None])


def advdiff2d_lagrangian_data(grid: Grid, times: TimeAxis, thetas,
                              D: float = ADVDIFF2D_D) -> SnapshotSet:
    """Moving-frame 2D advection-diffusion snapshots on exact rigid
    characteristics; with D=0 this is the pure-advection manifold."""
    X, Y = grid.meshgrid()
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    params = ParamSet(("theta",), thetas[:, None])
    period = (grid.length(0), grid.length(1))
    blocks = []
    for theta in thetas:
        cx, cy = math.cos(theta), math.sin(theta)
        snaps = np.empty((times.count, 3, *grid.shape))
        for k, t in enumerate(times.times):
            chi = X + t * cx
            zeta = Y + t * cy
            snaps[k, 0] = chi
            snaps[k, 1] = zeta
            snaps[k, 2] = advdiff2d_exact(chi, zeta, t, theta, D, period=period)
        blocks.append(snaps)
    return _assemble(blocks, grid, params, times, "lagrangian", ("chi", "zeta", "u"))


def advdiff2d_eulerian_exact(grid: Grid, times: TimeAxis, thetas,
                             D: float = ADVDIFF2D_D) -> SnapshotSet:
    """Closed-form fixed-frame counterpart of the moving-frame generator."""
    X, Y = grid.meshgrid()
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    params = ParamSet(("theta",), thetas[:, None])
    period = (grid.length(0), grid.length(1))
    blocks = []
    for theta in thetas:
        snaps = np.stack([advdiff2d_exact(X, Y, t, theta, D, period=period)
                          for t in times.times])
        blocks.append(snaps[:, None])
    return _assemble(blocks, grid, params, times, "eulerian", ("u",))


# --------------------------------------------------- solver data builders

def _run_many(solve, problems, grid, times, jobs: int,
              stride: int = 1) -> list[SnapshotSet]:
    # thin each run as it finishes; holding every parameter at marching
    # resolution is what blows memory on large 2D sweeps
    run = lambda p: subsample_time(solve(p, grid, times), stride)
    if jobs <= 1:
        return [run(p) for p in problems]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(run, problems))


def subsample_time(s: SnapshotSet, stride: int) -> SnapshotSet:
    """Keep every stride-th instant (stride must divide the step count)."""
    if stride == 1:
        return s
    if (s.times.count - 1) % stride != 0:
        raise ValueError(f"stride {stride} does not divide {s.times.count - 1} steps")
    times = TimeAxis(s.times.t0, s.times.dt * stride, (s.times.count - 1) // stride + 1)
    return SnapshotSet(s.grid, s.params, times, s.frame, s.channel_names,
                       s.data[:, ::stride].copy())


def generate(problem: str, frame: str, param_values: np.ndarray, grid: Grid,
             times: TimeAxis, snapshots: Optional[int] = None,
             jobs: int = 1) -> SnapshotSet:
    """Produce the multi-parameter snapshot set for one problem preset.

    times is the marching axis (t0, solver step, instant count); if
    snapshots is given the result is thinned to that many instants, which
    must divide the step count evenly.
    """
    if problem not in PROBLEM_NAMES:
        raise ValueError(f"unknown problem {problem!r}")
    if frame not in ("eulerian", "lagrangian"):
        raise ValueError(f"unknown frame {frame!r}")
    values = np.atleast_2d(np.asarray(param_values, dtype=np.float64))
    if values.shape[1] != 1:
        raise ValueError(f"{problem} takes one parameter per row")
    names = PARAM_NAMES[problem]
    params = ParamSet(names, values)
    stride = 1
    if snapshots is not None:
        if snapshots < 2:
            raise ValueError("need at least 2 snapshots")
        steps = times.count - 1
        if steps % (snapshots - 1) != 0:
            raise ValueError(
                f"{snapshots} snapshots do not divide {steps} steps evenly")
        stride = steps // (snapshots - 1)

    if problem == "burgers1d":
        out_times = times if stride == 1 else TimeAxis(
            times.t0, times.dt * stride, snapshots)
        return burgers1d_data(frame, grid, out_times, values[:, 0])

    if problem == "advdiff2d" and frame == "lagrangian":
        out_times = times if stride == 1 else TimeAxis(
            times.t0, times.dt * stride, snapshots)
        return advdiff2d_lagrangian_data(grid, out_times, values[:, 0])

    if problem in ("adv1d", "advdiff1d"):
        p = advection_problem_1d() if problem == "adv1d" else advdiff_problem_1d()
        solve = solve_eulerian_1d if frame == "eulerian" else solve_lagrangian_1d
        run = lambda mu: subsample_time(solve(p, grid, times, mu), stride)
        if jobs <= 1:
            runs = [run(values[i]) for i in range(len(values))]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as ex:
                runs = list(ex.map(run, values))
    else:
        if problem == "advdiff2d":
            probs = [advdiff_problem_2d(v[0]) for v in values]
        else:
            probs = [burgers_problem_2d(v[0]) for v in values]
        solve = solve_eulerian_2d if frame == "eulerian" else solve_lagrangian_2d
        runs = _run_many(solve, probs, grid, times, jobs, stride)

    return _assemble([r.data[0] for r in runs], grid, params, runs[0].times,
                     frame, runs[0].channel_names)


# ------------------------------------------------------ benchmark presets

def seeded_test_params(lo: float, hi: float, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic 'random' test parameters: sorted uniform draws."""
    return np.sort(np.random.default_rng(seed).uniform(lo, hi, n))


def benchmark_burgers1d() -> dict:
    """Viscous Burgers study: 21 training Reynolds numbers, four unseen
    test values, 20-step forecast horizon past the training window."""
    grid = preset_grid("burgers1d")
    return {
        "grid": grid,
        "train_times": TimeAxis(0.0, 0.04, 81),
        "train_values": np.linspace(200.0, 600.0, 21),
        "test_values": np.array([277.0, 315.0, 413.0, 572.0]),
        "test_steps": 20,
        "test_times": TimeAxis(3.2 + 0.04, 0.04, 20),
    }


def benchmark_advdiff2d() -> dict:
    """Rotating-transport study: 30 training angles, six unseen angles,
    forecast over the last fifth of the horizon."""
    grid = preset_grid("advdiff2d")
    return {
        "grid": grid,
        "dt": 0.01,
        "train_times": TimeAxis(0.0, 0.01, 81),
        "train_values": np.linspace(0.0, 2.0 * math.pi, 30),
        "test_values": np.array([2.0 * math.pi * k / 7.0 for k in range(1, 7)]),
        "test_steps": 20,
        "test_times": TimeAxis(0.81, 0.01, 20),
        "diffusion": ADVDIFF2D_D,
    }


def benchmark_burgers2d(points: int = 128) -> dict:
    """2D Burgers study: 17 training amplitudes, 8 seeded test amplitudes,
    forecast over the last 10 stored instants."""
    grid = preset_grid("burgers2d", (points, points))
    return {
        "grid": grid,
        "dt": 5e-3,
        "march_times": TimeAxis(0.0, 5e-3, 401),
        "stride": 4,
        "stored_times": TimeAxis(0.0, 0.02, 101),
        "train_values": 0.4 + 0.025 * np.arange(17),
        "test_values": seeded_test_params(0.4, 0.8, 8, seed=0),
        "train_window": (0, 90),
        "test_window": (91, 100),
        "nu": BURGERS2D_NU,
    }
