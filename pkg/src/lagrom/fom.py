"""Full-order solvers and closed-form reference solutions.

1D: implicit-explicit finite differences (explicit upwind flux, implicit
diffusion via direct tridiagonal solves) in the fixed frame, and the moving
frame analogue that transports grid nodes along characteristics while
handling diffusion on the fixed grid. 2D: forward Euler with per-cell upwind
advection and a central five-point Laplacian, plus the moving-frame variant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from . import _kernels as K
from .core import (
    CflViolation,
    Grid,
    GridTangling,
    ParamSet,
    SnapshotSet,
    SolverBlowup,
    TimeAxis,
)

TANGLE_TOL = 1e-10
SPEED_EQUAL_TOL = 1e-14


@dataclass(frozen=True)
class AdvectionDiffusionProblem1D:
    """Scalar conservation law u_t + F(u)_x = (D u_x)_x on an interval.

    flux F(u, mu) and wave_speed f(u, mu) = dF/du are problem closures;
    diffusion D(x, t, u, mu) must be nonnegative wherever evaluated.
    bc is "periodic" or "dirichlet" (bc_values = left/right data).
    """

    flux: Callable
    wave_speed: Callable
    diffusion: Callable
    initial: Callable
    bc: str = "periodic"
    bc_values: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.bc not in ("periodic", "dirichlet"):
            raise ValueError(f"unknown boundary kind {self.bc!r}")


@dataclass(frozen=True)
class Problem2D:
    """2D periodic problem: rigid advection-diffusion or coupled Burgers.

    advection_diffusion: velocity (cos(theta), sin(theta)), diffusion D,
    initial(X, Y) -> u0. burgers: viscosity nu = diffusion, initial(X, Y)
    -> (u0, v0).
    """

    variant: str
    initial: Callable
    theta: float = 0.0
    diffusion: float = 0.0

    def __post_init__(self):
        if self.variant not in ("advection_diffusion", "burgers"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.diffusion < 0:
            raise ValueError("diffusion must be nonnegative")
        if self.variant == "advection_diffusion" and not (
            -1e-3 <= self.theta <= 2 * math.pi + 1e-3
        ):
            raise ValueError("theta outside [0, 2*pi]")


@dataclass
class CflReport:
    """Stability numbers accumulated over a run (maxima)."""

    advective_cfl: float = 0.0
    diffusive_number: float = 0.0
    max_wave_speed: float = 0.0

    def absorb(self, adv, diff, speed):
        self.advective_cfl = max(self.advective_cfl, adv)
        self.diffusive_number = max(self.diffusive_number, diff)
        self.max_wave_speed = max(self.max_wave_speed, speed)


def _check_flux_consistency(p: AdvectionDiffusionProblem1D, u: np.ndarray, mu):
    # spot-check f = dF/du by central differences on a few state samples
    samples = np.unique(np.concatenate([u[:: max(1, len(u) // 7)], [u.min(), u.max()]]))
    h = 1e-6 * np.maximum(1.0, np.abs(samples))
    fd = (p.flux(samples + h, mu) - p.flux(samples - h, mu)) / (2 * h)
    f = p.wave_speed(samples, mu)
    if not np.allclose(fd, f, rtol=1e-4, atol=1e-6):
        raise ValueError("wave_speed is inconsistent with flux (finite-difference check)")


def _upwind_flux_1d(u_ext, p, mu):
    """Numerical flux at faces from extended node values (len n+2 with ghosts,
    or wrapped periodic array of len n+1 handled by the caller)."""
    ul = u_ext[:-1]
    ur = u_ext[1:]
    du = ur - ul
    Fl = p.flux(ul, mu)
    Fr = p.flux(ur, mu)
    fl = p.wave_speed(ul, mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(
            np.abs(du) < SPEED_EQUAL_TOL * np.maximum(1.0, np.abs(ul)),
            fl,
            (Fr - Fl) / du,
        )
    return np.where(a >= 0, Fl, Fr), a


def _implicit_diffusion_1d(u_star, d_nodes, r, bc, bc_values, d_ghost=(0.0, 0.0)):
    """One backward-Euler diffusion step: solve (I - r*div(D grad)) u = u_star.

    d_nodes holds D at the grid nodes; face coefficients are arithmetic
    means. Returns the new state. Periodic uses the cyclic solver; dirichlet
    folds ghost data into the right-hand side.
    """
    n = u_star.shape[0]
    if bc == "periodic":
        d_m = 0.5 * (d_nodes + np.roll(d_nodes, 1))   # face j-1/2
        d_p = np.roll(d_m, -1)                        # face j+1/2
        lower = -r * d_m
        upper = -r * d_p
        diag = 1.0 + r * (d_m + d_p)
        return K.cyclic_tridiag_solve(lower, diag, upper, u_star)
    gl, gr = bc_values
    dgl, dgr = d_ghost
    d_m = np.empty(n)
    d_p = np.empty(n)
    d_m[1:] = 0.5 * (d_nodes[1:] + d_nodes[:-1])
    d_p[:-1] = d_m[1:]
    d_m[0] = 0.5 * (dgl + d_nodes[0])
    d_p[-1] = 0.5 * (d_nodes[-1] + dgr)
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = -r * d_m[1:]
    upper[:-1] = -r * d_p[:-1]
    diag = 1.0 + r * (d_m + d_p)
    rhs = u_star.copy()
    rhs[0] += r * d_m[0] * gl
    rhs[-1] += r * d_p[-1] * gr
    return K.tridiag_solve(lower, diag, upper, rhs)


def _single_param_set(mu) -> ParamSet:
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    names = tuple(f"mu{i}" for i in range(mu.shape[0])) if mu.shape[0] != 1 else ("mu",)
    return ParamSet(names, mu[None, :])


def solve_eulerian_1d(
    p: AdvectionDiffusionProblem1D,
    g: Grid,
    t: TimeAxis,
    mu,
    report_out: Optional[list] = None,
) -> SnapshotSet:
    """March the 1D IMEX scheme on the fixed grid; snapshots at every instant."""
    if g.dim != 1:
        raise ValueError("1D solver needs a 1D grid")
    x = g.nodes(0)
    dx = g.spacing(0)
    dt = t.dt
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    u = np.asarray(p.initial(x, mu), dtype=np.float64).copy()
    _check_flux_consistency(p, u, mu)
    report = CflReport()
    out = np.empty((t.count, 1, g.points[0]))
    out[0, 0] = u
    r = dt / dx**2
    for k in range(1, t.count):
        tn = t.instant(k - 1)
        speed = float(np.max(np.abs(p.wave_speed(u, mu))))
        adv = dt * speed / dx
        if adv > 1.0 + 1e-12:
            report.absorb(adv, 0.0, speed)
            if report_out is not None:
                report_out.append(report)
            raise CflViolation(
                f"advective CFL {adv:.3f} > 1 at step {k} (dt*max|f|/dx, max|f|={speed:.3g})"
            )
        if p.bc == "periodic":
            u_ext = np.concatenate([u, u[:1]])
            fluxes, _ = _upwind_flux_1d(u_ext, p, mu)  # faces 1/2 .. n-1/2, n+1/2=wrap
            u_star = u - dt / dx * (fluxes - np.roll(fluxes, 1))
        else:
            gl, gr = p.bc_values
            u_ext = np.concatenate([[gl], u, [gr]])
            fluxes, _ = _upwind_flux_1d(u_ext, p, mu)  # faces -1/2 .. n-1/2
            u_star = u - dt / dx * (fluxes[1:] - fluxes[:-1])
        d_nodes = np.broadcast_to(
            np.asarray(p.diffusion(x, t.instant(k), u_star, mu), dtype=np.float64), x.shape
        )
        if np.any(d_nodes < 0):
            raise ValueError("negative diffusion coefficient")
        diff_num = 2.0 * float(d_nodes.max()) * dt / dx**2
        report.absorb(adv, diff_num, speed)
        if d_nodes.max() > 0.0:
            if p.bc == "periodic":
                u = _implicit_diffusion_1d(u_star, d_nodes, r, p.bc, p.bc_values)
            else:
                dg = (
                    float(p.diffusion(x[0] - dx, t.instant(k), np.float64(p.bc_values[0]), mu)),
                    float(p.diffusion(x[-1] + dx, t.instant(k), np.float64(p.bc_values[1]), mu)),
                )
                u = _implicit_diffusion_1d(u_star, d_nodes, r, p.bc, p.bc_values, dg)
        else:
            u = u_star
        if not np.isfinite(u).all():
            raise SolverBlowup(f"non-finite state at step {k}")
        out[k, 0] = u
    if report_out is not None:
        report_out.append(report)
    return SnapshotSet(g, _single_param_set(mu), t, "eulerian", ("u",), out[None])


def _interp_periodic(xq, x_nodes, vals, a, L):
    """Linear interpolation with periodic wrap: nodes may be in any order and
    any branch; both sides extended by one period image."""
    xw = a + np.mod(x_nodes - a, L)
    order = np.argsort(xw, kind="stable")
    xs = xw[order]
    vs = vals[order]
    xs = np.concatenate([[xs[-1] - L], xs, [xs[0] + L]])
    vs = np.concatenate([[vs[-1]], vs, [vs[0]]])
    xqw = a + np.mod(xq - a, L)
    return np.interp(xqw, xs, vs)


def solve_lagrangian_1d(
    p: AdvectionDiffusionProblem1D,
    g: Grid,
    t: TimeAxis,
    mu,
    report_out: Optional[list] = None,
) -> SnapshotSet:
    """Moving-frame 1D solve: nodes ride characteristics (trapezoidal update),
    diffusion is taken on the fixed grid each step (map over, implicit step,
    map back). chi is stored unwrapped. Channels ("chi", "u")."""
    if g.dim != 1:
        raise ValueError("1D solver needs a 1D grid")
    x = g.nodes(0)
    dx = g.spacing(0)
    dt = t.dt
    a0, b0 = g.bounds[0]
    L = g.length(0)
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    chi = x.copy()
    u = np.asarray(p.initial(x, mu), dtype=np.float64).copy()
    _check_flux_consistency(p, u, mu)
    report = CflReport()
    out = np.empty((t.count, 2, g.points[0]))
    out[0] = (chi, u)
    r = dt / dx**2
    for k in range(1, t.count):
        speed = float(np.max(np.abs(p.wave_speed(u, mu))))
        adv = dt * speed / dx
        if adv > 1.0 + 1e-12:
            report.absorb(adv, 0.0, speed)
            if report_out is not None:
                report_out.append(report)
            raise CflViolation(
                f"advective CFL {adv:.3f} > 1 at step {k} (dt*max|f|/dx, max|f|={speed:.3g})"
            )
        d_nodes = np.broadcast_to(
            np.asarray(p.diffusion(x, t.instant(k), u, mu), dtype=np.float64), x.shape
        )
        if np.any(d_nodes < 0):
            raise ValueError("negative diffusion coefficient")
        diff_num = 2.0 * float(d_nodes.max()) * dt / dx**2
        report.absorb(adv, diff_num, speed)
        if d_nodes.max() > 0.0:
            # replace u by its fixed-grid diffusion image: L -> E, solve, E -> L
            if p.bc == "periodic":
                ue = _interp_periodic(x, chi, u, a0, L)
                ue = _implicit_diffusion_1d(ue, d_nodes, r, p.bc, p.bc_values)
                u_new = _interp_periodic(chi, x, ue, a0, L)
            else:
                order = np.argsort(chi, kind="stable")
                ue = np.interp(x, chi[order], u[order])
                dg = (
                    float(p.diffusion(x[0] - dx, t.instant(k), np.float64(p.bc_values[0]), mu)),
                    float(p.diffusion(x[-1] + dx, t.instant(k), np.float64(p.bc_values[1]), mu)),
                )
                ue = _implicit_diffusion_1d(ue, d_nodes, r, p.bc, p.bc_values, dg)
                u_new = np.interp(chi, x, ue)
        else:
            u_new = u
        chi = chi + 0.5 * dt * (p.wave_speed(u, mu) + p.wave_speed(u_new, mu))
        u = u_new
        if np.min(np.diff(chi)) < -TANGLE_TOL * dx:
            raise GridTangling(f"grid tangled at step {k} (min node gap {np.min(np.diff(chi)):.3g})")
        if not (np.isfinite(u).all() and np.isfinite(chi).all()):
            raise SolverBlowup(f"non-finite state at step {k}")
        out[k] = (chi, u)
    if report_out is not None:
        report_out.append(report)
    return SnapshotSet(g, _single_param_set(mu), t, "lagrangian", ("chi", "u"), out[None])


def burgers1d_exact(x, t: float, Re: float) -> np.ndarray:
    """Closed-form viscous Burgers profile u(x, t; Re) on x >= 0.

    u = (x/(t+1)) / (1 + sqrt((t+1)/t0) * exp(Re * x^2 / (4t+4))),
    t0 = exp(Re/8). Overflow-safe for the tested domain: the exponential is
    evaluated through its logarithm and clipped.
    """
    x = np.asarray(x, dtype=np.float64)
    log_amp = 0.5 * (np.log(t + 1.0) - Re / 8.0)
    log_exp = np.clip(log_amp + Re * x * x / (4.0 * t + 4.0), None, 700.0)
    return (x / (t + 1.0)) / (1.0 + np.exp(log_exp))


def advdiff1d_exact(x, t: float, mu: float, sigma0: float) -> np.ndarray:
    """Translating window profile smoothed by diffusion: difference of normal
    CDFs with width sqrt(2*mu*(t + sigma0)), window edges 0.35/0.65, unit speed."""
    if mu <= 0 or sigma0 <= 0:
        raise ValueError("mu and sigma0 must be positive")
    x = np.asarray(x, dtype=np.float64)
    s = math.sqrt(2.0 * mu * (t + sigma0))
    xi = x - t
    return ndtr((xi - 0.35) / s) - ndtr((xi - 0.65) / s)


def _stability_precheck_2d(speed_x, speed_y, D, dt, dx, dy, step):
    adv = dt * (speed_x / dx + speed_y / dy)
    diff = 2.0 * D * dt * (1.0 / dx**2 + 1.0 / dy**2)
    if adv > 1.0 + 1e-12:
        raise CflViolation(f"advective stability {adv:.3f} > 1 at step {step}")
    if diff > 1.0 + 1e-12:
        raise CflViolation(f"diffusive stability {diff:.3f} > 1 at step {step}")
    return adv, diff


def solve_eulerian_2d(
    p: Problem2D, g: Grid, t: TimeAxis, report_out: Optional[list] = None
) -> SnapshotSet:
    """Forward Euler on the fixed periodic grid: per-cell sign upwind advection
    plus central Laplacian. Burgers advances u and v from the same level."""
    if g.dim != 2 or not all(g.periodic):
        raise ValueError("2D solver needs a doubly periodic 2D grid")
    X, Y = g.meshgrid()
    dx, dy = g.spacing(0), g.spacing(1)
    dt = t.dt
    report = CflReport()
    if p.variant == "advection_diffusion":
        cx, cy = math.cos(p.theta), math.sin(p.theta)
        u = np.asarray(p.initial(X, Y), dtype=np.float64).copy()
        out = np.empty((t.count, 1, *g.shape))
        out[0, 0] = u
        vx = np.full(g.shape, cx)
        vy = np.full(g.shape, cy)
        for k in range(1, t.count):
            adv, diff = _stability_precheck_2d(abs(cx), abs(cy), p.diffusion, dt, dx, dy, k)
            report.absorb(adv, diff, max(abs(cx), abs(cy)))
            u = u + dt * (
                -K.upwind_advect_periodic(u, vx, vy, 1.0 / dx, 1.0 / dy)
                + p.diffusion * K.laplacian5_periodic(u, 1.0 / dx**2, 1.0 / dy**2)
            )
            if not np.isfinite(u).all():
                raise SolverBlowup(f"non-finite state at step {k}")
            out[k, 0] = u
        channels = ("u",)
    else:
        u0, v0 = p.initial(X, Y)
        u = np.asarray(u0, dtype=np.float64).copy()
        v = np.asarray(v0, dtype=np.float64).copy()
        out = np.empty((t.count, 2, *g.shape))
        out[0] = (u, v)
        for k in range(1, t.count):
            smax_x = float(np.max(np.abs(u)))
            smax_y = float(np.max(np.abs(v)))
            adv, diff = _stability_precheck_2d(smax_x, smax_y, p.diffusion, dt, dx, dy, k)
            report.absorb(adv, diff, max(smax_x, smax_y))
            lap_u = K.laplacian5_periodic(u, 1.0 / dx**2, 1.0 / dy**2)
            lap_v = K.laplacian5_periodic(v, 1.0 / dx**2, 1.0 / dy**2)
            du = -K.upwind_advect_periodic(u, u, v, 1.0 / dx, 1.0 / dy) + p.diffusion * lap_u
            dv = -K.upwind_advect_periodic(v, u, v, 1.0 / dx, 1.0 / dy) + p.diffusion * lap_v
            u = u + dt * du
            v = v + dt * dv
            if not (np.isfinite(u).all() and np.isfinite(v).all()):
                raise SolverBlowup(f"non-finite state at step {k}")
            out[k] = (u, v)
        channels = ("u", "v")
    if report_out is not None:
        report_out.append(report)
    return SnapshotSet(g, _single_param_set(_p2d_mu(p)), t, "eulerian", channels, out[None])


def _p2d_mu(p: Problem2D):
    return [p.theta] if p.variant == "advection_diffusion" else [1.0]


def _reconstruct_on_grid_2d(chi, zeta, fields, g: Grid):
    """Map moving-node fields to the fixed grid by inverting the displaced
    bilinear cell map. Returns (fields_on_grid, min_cell_det)."""
    X, Y = g.meshgrid()
    ax, ay = g.bounds[0][0], g.bounds[1][0]
    dx, dy = g.spacing(0), g.spacing(1)
    per_x = g.length(0) if g.periodic[0] else 0.0
    per_y = g.length(1) if g.periodic[1] else 0.0
    i0, j0, s, tt, det = K.locate_displaced_bilinear(
        chi, zeta, X, Y, ax, ay, dx, dy, per_x, per_y
    )
    n1, n2 = chi.shape
    i1 = (i0 + 1) % n1
    j1 = (j0 + 1) % n2
    w00 = (1 - s) * (1 - tt)
    w10 = s * (1 - tt)
    w01 = (1 - s) * tt
    w11 = s * tt
    outs = []
    for f in fields:
        vals = f[i0, j0] * w00 + f[i1, j0] * w10 + f[i0, j1] * w01 + f[i1, j1] * w11
        outs.append(vals.reshape(g.shape))
    return outs, float(det.min())


def solve_lagrangian_2d(
    p: Problem2D, g: Grid, t: TimeAxis, report_out: Optional[list] = None
) -> SnapshotSet:
    """Moving-frame 2D solve. Characteristics advance by the trapezoidal rule
    per axis; when diffusion is active the state hops to the fixed grid for an
    explicit diffusion step and back (bilinear both ways). chi, zeta stay
    unwrapped."""
    if g.dim != 2 or not all(g.periodic):
        raise ValueError("2D solver needs a doubly periodic 2D grid")
    X, Y = g.meshgrid()
    ax, ay = g.bounds[0][0], g.bounds[1][0]
    dx, dy = g.spacing(0), g.spacing(1)
    dt = t.dt
    report = CflReport()
    chi = X.copy()
    zeta = Y.copy()
    if p.variant == "advection_diffusion":
        cx, cy = math.cos(p.theta), math.sin(p.theta)
        u = np.asarray(p.initial(X, Y), dtype=np.float64).copy()
        out = np.empty((t.count, 3, *g.shape))
        out[0] = (chi, zeta, u)
        for k in range(1, t.count):
            adv, diff = _stability_precheck_2d(abs(cx), abs(cy), p.diffusion, dt, dx, dy, k)
            report.absorb(adv, diff, max(abs(cx), abs(cy)))
            if p.diffusion > 0.0:
                (ue,), min_det = _reconstruct_on_grid_2d(chi, zeta, (u,), g)
                if min_det < TANGLE_TOL:
                    raise GridTangling(f"grid tangled at step {k} (min cell det {min_det:.3g})")
                ue = ue + dt * p.diffusion * K.laplacian5_periodic(ue, 1.0 / dx**2, 1.0 / dy**2)
                u = K.bilinear_sample_periodic(ue, chi, zeta, ax, ay, dx, dy)
            # constant velocity: both trapezoid stages coincide
            chi = chi + dt * cx
            zeta = zeta + dt * cy
            if not np.isfinite(u).all():
                raise SolverBlowup(f"non-finite state at step {k}")
            out[k] = (chi, zeta, u)
        channels = ("chi", "zeta", "u")
    else:
        u0, v0 = p.initial(X, Y)
        u = np.asarray(u0, dtype=np.float64).copy()
        v = np.asarray(v0, dtype=np.float64).copy()
        out = np.empty((t.count, 4, *g.shape))
        out[0] = (chi, zeta, u, v)
        for k in range(1, t.count):
            smax_x = float(np.max(np.abs(u)))
            smax_y = float(np.max(np.abs(v)))
            adv, diff = _stability_precheck_2d(smax_x, smax_y, p.diffusion, dt, dx, dy, k)
            report.absorb(adv, diff, max(smax_x, smax_y))
            if p.diffusion > 0.0:
                (ue, ve), min_det = _reconstruct_on_grid_2d(chi, zeta, (u, v), g)
                if min_det < TANGLE_TOL:
                    raise GridTangling(f"grid tangled at step {k} (min cell det {min_det:.3g})")
                inv2x, inv2y = 1.0 / dx**2, 1.0 / dy**2
                ue = ue + dt * p.diffusion * K.laplacian5_periodic(ue, inv2x, inv2y)
                ve = ve + dt * p.diffusion * K.laplacian5_periodic(ve, inv2x, inv2y)
                u_new = K.bilinear_sample_periodic(ue, chi, zeta, ax, ay, dx, dy)
                v_new = K.bilinear_sample_periodic(ve, chi, zeta, ax, ay, dx, dy)
            else:
                u_new, v_new = u, v
            chi = chi + 0.5 * dt * (u + u_new)
            zeta = zeta + 0.5 * dt * (v + v_new)
            u, v = u_new, v_new
            if not (np.isfinite(u).all() and np.isfinite(v).all()):
                raise SolverBlowup(f"non-finite state at step {k}")
            out[k] = (chi, zeta, u, v)
        channels = ("chi", "zeta", "u", "v")
    if report_out is not None:
        report_out.append(report)
    return SnapshotSet(g, _single_param_set(_p2d_mu(p)), t, "lagrangian", channels, out[None])
