"""Frame plumbing: augmented snapshot stacking, coordinate wrapping, frame
interpolation, and reconstruction of fixed-grid fields from moving-node data.

Reconstruction is the step that turns a (chi, u) state back into a field on
the reference grid. In 1D it runs a cubic radial-basis interpolant through
the wrapped nodes; in 2D it inverts the displaced structured grid cell by
cell and blends bilinearly (the moving grid stays a smooth deformation of
the reference lattice in every regime this package targets, so no
triangulation is needed).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .core import Grid, GridTangling, SnapshotSet

MERGE_FACTOR = 0.75  # node clusters tighter than this fraction of the target
                     # spacing are averaged before the RBF solve


@dataclass(frozen=True)
class LagrangianState:
    """Moving-node state: coordinate arrays plus value channels on the
    reference grid's index space. zeta is None in 1D."""

    grid: Grid
    chi: np.ndarray
    values: tuple[np.ndarray, ...]
    zeta: Optional[np.ndarray] = None
    value_names: tuple[str, ...] = ("u",)

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=np.float64)
        object.__setattr__(self, "chi", chi)
        if not np.isfinite(chi).all():
            raise ValueError("non-finite chi")
        if self.grid.dim == 2:
            if self.zeta is None:
                raise ValueError("2D state needs zeta")
            zeta = np.asarray(self.zeta, dtype=np.float64)
            if not np.isfinite(zeta).all():
                raise ValueError("non-finite zeta")
            object.__setattr__(self, "zeta", zeta)
        elif self.zeta is not None:
            raise ValueError("zeta given for a 1D state")
        vals = tuple(np.asarray(v, dtype=np.float64) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(self.value_names):
            raise ValueError("value channel count does not match names")
        for v in vals:
            if v.shape != chi.shape:
                raise ValueError("value array shape differs from chi")
        if chi.shape != self.grid.shape:
            raise ValueError("coordinate array shape differs from the reference grid")
        if self.grid.dim == 1:
            a, _ = self.grid.bounds[0]
            L = self.grid.length(0)
            w = np.sort(a + np.mod(chi - a, L)) if self.grid.periodic[0] else np.sort(chi)
            if np.any(np.diff(w) <= 0.0):
                raise GridTangling("duplicate node positions after wrapping-aware sort")


def stack(state: LagrangianState) -> np.ndarray:
    """Channel-stack a state: coordinates first, then values."""
    coords = (state.chi,) if state.grid.dim == 1 else (state.chi, state.zeta)
    return np.stack(coords + state.values)


def unstack(a: np.ndarray, grid: Grid, value_names: Optional[tuple] = None) -> LagrangianState:
    """Inverse of stack. The grid dimension decides how many leading channels
    are coordinates."""
    a = np.asarray(a, dtype=np.float64)
    nc = grid.dim
    if a.shape[0] <= nc:
        raise ValueError(f"need more than {nc} channels to unstack a {grid.dim}D state")
    if value_names is None:
        n_vals = a.shape[0] - nc
        value_names = ("u",) if n_vals == 1 else ("u", "v")[:n_vals]
        if n_vals > 2:
            value_names = tuple(f"u{i}" for i in range(n_vals))
    if grid.dim == 1:
        return LagrangianState(grid, a[0], tuple(a[1:]), None, tuple(value_names))
    return LagrangianState(grid, a[0], tuple(a[2:]), a[1], tuple(value_names))


def wrap_coordinates(chi, domain: tuple[float, float], periodic: bool) -> np.ndarray:
    """Fold coordinates into [a, b) when periodic; identity otherwise."""
    a, b = domain
    L = b - a
    if L <= 0:
        raise ValueError("domain length must be positive")
    chi = np.asarray(chi, dtype=np.float64)
    if not periodic:
        return chi.copy()
    w = np.mod(chi - a, L)
    # np.mod can round up to L itself for tiny negative inputs; fold that
    # back so the result stays in [a, b) and re-wrapping is a no-op.
    w = np.where(w >= L, 0.0, w)
    return a + w


def interp_between_frames(values, from_nodes, to_nodes):
    """Linear (1D) or bilinear (2D regular source grid) interpolation with
    constant extrapolation beyond the node range.

    1D: from_nodes is a strictly increasing vector. 2D: from_nodes is a pair
    of axis vectors (x_axis, y_axis), values indexed [ix, iy], to_nodes a
    pair of query arrays.
    """
    axes_pair = (
        isinstance(from_nodes, (tuple, list))
        and len(from_nodes) == 2
        and np.ndim(from_nodes[0]) >= 1
    )
    if axes_pair:
        xa, ya = (np.asarray(v, dtype=np.float64) for v in from_nodes)
        if np.any(np.diff(xa) <= 0) or np.any(np.diff(ya) <= 0):
            raise ValueError("source axes must be strictly increasing")
        qx, qy = (np.asarray(v, dtype=np.float64) for v in to_nodes)
        vals = np.asarray(values, dtype=np.float64)
        gx = np.clip((qx - xa[0]) / (xa[1] - xa[0]), 0.0, len(xa) - 1.0)
        gy = np.clip((qy - ya[0]) / (ya[1] - ya[0]), 0.0, len(ya) - 1.0)
        i0 = np.minimum(np.floor(gx).astype(np.int64), len(xa) - 2)
        j0 = np.minimum(np.floor(gy).astype(np.int64), len(ya) - 2)
        s = gx - i0
        t = gy - j0
        return (
            vals[i0, j0] * (1 - s) * (1 - t)
            + vals[i0 + 1, j0] * s * (1 - t)
            + vals[i0, j0 + 1] * (1 - s) * t
            + vals[i0 + 1, j0 + 1] * s * t
        )
    from_nodes = np.asarray(from_nodes, dtype=np.float64)
    if np.any(np.diff(from_nodes) <= 0):
        raise ValueError("from_nodes must be strictly increasing")
    return np.interp(np.asarray(to_nodes, dtype=np.float64), from_nodes, np.asarray(values, dtype=np.float64))


def _merge_close_nodes(xs, vs, tol):
    """Average clusters of sorted nodes closer than tol (values column-wise).
    Keeps the interpolation matrix well conditioned when characteristics pile
    up. On uniform data no clusters form and the inputs pass through."""
    if len(xs) < 2 or np.all(np.diff(xs) >= tol):
        return xs, vs
    group = np.concatenate([[0], np.cumsum(np.diff(xs) >= tol)])
    n_groups = group[-1] + 1
    counts = np.bincount(group, minlength=n_groups)
    xm = np.bincount(group, weights=xs, minlength=n_groups) / counts
    vm = np.stack(
        [np.bincount(group, weights=col, minlength=n_groups) / counts for col in vs]
    )
    return xm, vm


def _rbf1d_fit_eval(nodes, vals, targets):
    """Cubic kernel |r|^3 with a linear tail, dense direct solve, evaluated
    at the target points. vals may be a matrix (one row per channel)."""
    n = len(nodes)
    A = np.zeros((n + 2, n + 2))
    A[:n, :n] = np.abs(nodes[:, None] - nodes[None, :]) ** 3
    A[:n, n] = 1.0
    A[:n, n + 1] = nodes
    A[n, :n] = 1.0
    A[n + 1, :n] = nodes
    rhs = np.zeros((n + 2, vals.shape[0]))
    rhs[:n] = vals.T
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    w, tail = sol[:n], sol[n:]
    E = np.abs(targets[:, None] - nodes[None, :]) ** 3
    return (E @ w + tail[0][None, :] + targets[:, None] * tail[1][None, :]).T


def _reconstruct_1d(state: LagrangianState, target: Grid, method: str) -> np.ndarray:
    a, b = state.grid.bounds[0]
    L = state.grid.length(0)
    periodic = state.grid.periodic[0]
    xt = target.nodes(0)
    dx_t = target.spacing(0)
    vals = np.stack(state.values)

    xw = wrap_coordinates(state.chi, (a, b), periodic)
    order = np.argsort(xw, kind="stable")
    xs = xw[order]
    vs = vals[:, order]
    if len(xs) < 2:
        raise ValueError("need at least 2 nodes to reconstruct")

    if method == "linear":
        out = np.empty((vals.shape[0], target.points[0]))
        if periodic:
            xe = np.concatenate([[xs[-1] - L], xs, [xs[0] + L]])
            for c in range(vals.shape[0]):
                ve = np.concatenate([[vs[c, -1]], vs[c], [vs[c, 0]]])
                out[c] = np.interp(wrap_coordinates(xt, (a, b), True), xe, ve)
        else:
            for c in range(vals.shape[0]):
                # np.interp clamps to the end values = nearest-node fill
                out[c] = np.interp(xt, xs, vs[c])
        return out
    if method != "rbf":
        raise ValueError(f"unknown reconstruction method {method!r}")

    xs, vs = _merge_close_nodes(xs, vs, MERGE_FACTOR * dx_t)
    if periodic:
        # continuity across the seam: re-image a window of nodes from each side
        W = max(6.0 * dx_t, 0.05 * L)
        left = xs < a + W
        right = xs > a + L - W
        xs_ext = np.concatenate([xs[right] - L, xs, xs[left] + L])
        vs_ext = np.concatenate([vs[:, right], vs, vs[:, left]], axis=1)
        return _rbf1d_fit_eval(xs_ext, vs_ext, wrap_coordinates(xt, (a, b), True))
    out = _rbf1d_fit_eval(xs, vs, xt)
    # nearest fill beyond the node hull
    lo = xt < xs[0]
    hi = xt > xs[-1]
    out[:, lo] = vs[:, :1]
    out[:, hi] = vs[:, -1:]
    return out


def _reconstruct_2d(state: LagrangianState, target: Grid) -> np.ndarray:
    g = state.grid
    Xq, Yq = target.meshgrid()
    ax, ay = g.bounds[0][0], g.bounds[1][0]
    dx, dy = g.spacing(0), g.spacing(1)
    per_x = g.length(0) if g.periodic[0] else 0.0
    per_y = g.length(1) if g.periodic[1] else 0.0
    i0, j0, s, t, det = K.locate_displaced_bilinear(
        state.chi, state.zeta, Xq, Yq, ax, ay, dx, dy, per_x, per_y
    )
    if float(det.min()) < 1e-10:
        raise GridTangling(f"displaced grid tangled (min cell det {float(det.min()):.3g})")
    n1, n2 = state.chi.shape
    i1 = (i0 + 1) % n1
    j1 = (j0 + 1) % n2
    w00 = (1 - s) * (1 - t)
    w10 = s * (1 - t)
    w01 = (1 - s) * t
    w11 = s * t
    out = np.empty((len(state.values), *target.shape))
    for c, f in enumerate(state.values):
        out[c] = (f[i0, j0] * w00 + f[i1, j0] * w10 + f[i0, j1] * w01 + f[i1, j1] * w11).reshape(
            target.shape
        )
    return out


def reconstruct_eulerian(state: LagrangianState, target: Grid, method: str = None) -> np.ndarray:
    """Evaluate the moving-node state on a fixed target grid.

    Returns an array [n_value_channels, *target.shape]. Default method is
    "rbf" in 1D and "linear" in 2D, matching how each is used downstream.
    """
    if state.grid.dim != target.dim:
        raise ValueError("state and target dimensions differ")
    if state.grid.dim == 1:
        return _reconstruct_1d(state, target, method or "rbf")
    if (method or "linear") != "linear":
        raise ValueError("2D reconstruction supports only the linear method")
    return _reconstruct_2d(state, target)


def state_from_snapshot(s: SnapshotSet, param_index: int, time_index: int) -> LagrangianState:
    """View one (param, time) entry of a lagrangian SnapshotSet as a state."""
    if s.frame != "lagrangian":
        raise ValueError("snapshot set is not lagrangian")
    block = s.snapshot(param_index, time_index)
    names = s.channel_names[s.grid.dim :]
    if s.grid.dim == 1:
        return LagrangianState(s.grid, block[0], tuple(block[1:]), None, names)
    return LagrangianState(s.grid, block[0], tuple(block[2:]), block[1], names)
