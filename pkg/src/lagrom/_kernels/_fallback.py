"""Pure numpy/scipy implementations of the hot kernels.

Selected by lagrom._kernels when the compiled extension is unavailable.
Both implementations follow the same operation order so results agree to
rounding noise; the test suite checks them against each other.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

IMPL = "fallback"


def tridiag_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system. lower[i] multiplies x[i-1] in row i
    (lower[0] unused), upper[i] multiplies x[i+1] (upper[-1] unused)."""
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def cyclic_tridiag_solve(lower, diag, upper, rhs):
    """Periodic tridiagonal solve: row 0 also carries lower[0] on x[n-1] and
    row n-1 carries upper[n-1] on x[0]. Sherman-Morrison on top of the plain
    Thomas solve."""
    n = diag.shape[0]
    alpha = lower[0]
    beta = upper[n - 1]
    gamma = -diag[0]
    d = diag.copy()
    d[0] = diag[0] - gamma
    d[n - 1] = diag[n - 1] - alpha * beta / gamma
    u = np.zeros(n)
    u[0] = gamma
    u[n - 1] = beta
    y = tridiag_solve(lower, d, upper, rhs)
    z = tridiag_solve(lower, d, upper, u)
    # v = (1, 0, ..., 0, alpha/gamma)
    fac = (y[0] + alpha / gamma * y[n - 1]) / (1.0 + z[0] + alpha / gamma * z[n - 1])
    return y - fac * z


def laplacian5_periodic(u, inv_dx2, inv_dy2):
    """Five-point Laplacian with periodic wrap on both axes; u indexed [ix, iy]."""
    return (np.roll(u, -1, 0) - 2.0 * u + np.roll(u, 1, 0)) * inv_dx2 + (
        np.roll(u, -1, 1) - 2.0 * u + np.roll(u, 1, 1)
    ) * inv_dy2


def upwind_advect_periodic(u, vx, vy, inv_dx, inv_dy):
    """First-order upwind v . grad(u) on a periodic grid; vx, vy are fields
    (or scalars broadcast by the caller) giving the local advection speed."""
    dxm = (u - np.roll(u, 1, 0)) * inv_dx
    dxp = (np.roll(u, -1, 0) - u) * inv_dx
    dym = (u - np.roll(u, 1, 1)) * inv_dy
    dyp = (np.roll(u, -1, 1) - u) * inv_dy
    return vx * np.where(vx > 0, dxm, dxp) + vy * np.where(vy > 0, dym, dyp)


def bilinear_sample_periodic(f, qx, qy, ax, ay, dx, dy):
    """Sample field f (indexed [ix, iy], nodes at a + i*d) at points (qx, qy)
    with periodic wrapping on both axes."""
    nx, ny = f.shape
    gx = (qx - ax) / dx
    gy = (qy - ay) / dy
    i0 = np.floor(gx).astype(np.int64)
    j0 = np.floor(gy).astype(np.int64)
    fx = gx - i0
    fy = gy - j0
    i0 %= nx
    j0 %= ny
    i1 = (i0 + 1) % nx
    j1 = (j0 + 1) % ny
    return (
        f[i0, j0] * (1 - fx) * (1 - fy)
        + f[i1, j0] * fx * (1 - fy)
        + f[i0, j1] * (1 - fx) * fy
        + f[i1, j1] * fx * fy
    )


def locate_displaced_bilinear(chi, zeta, qx, qy, ax, ay, dx, dy, per_x, per_y, iters=8):
    """Invert the displaced-grid map at query points.

    chi, zeta hold the (unwrapped) positions of a logically periodic
    structured grid whose reference nodes are a + i*d per axis. For each
    query point this walks Newton steps in logical coordinates (r, q) until
    the bilinear blend of the enclosing displaced cell hits the query
    (modulo the periods), handling seam crossings by snapping each corner
    coordinate to the branch nearest its expected location.

    per <= 0 disables wrapping on that axis.

    Returns flat (i0, j0, s, t, det) arrays: cell indices (wrapped), local
    coordinates clipped to [0,1], and the final Jacobian determinant in
    units of dx*dy (negative or tiny det flags a tangled cell).
    """
    n1, n2 = chi.shape
    qx = np.asarray(qx, dtype=np.float64).ravel()
    qy = np.asarray(qy, dtype=np.float64).ravel()
    sx = (chi - (ax + np.arange(n1)[:, None] * dx)).mean()
    sy = (zeta - (ay + np.arange(n2)[None, :] * dy)).mean()
    px = per_x if per_x > 0 else np.inf
    py = per_y if per_y > 0 else np.inf

    rx = (qx - sx - ax) / dx
    ry = (qy - sy - ay) / dy
    for _ in range(iters):
        i0 = np.floor(rx).astype(np.int64)
        j0 = np.floor(ry).astype(np.int64)
        s = rx - i0
        t = ry - j0
        i0m = i0 % n1
        j0m = j0 % n2
        i1m = (i0m + 1) % n1
        j1m = (j0m + 1) % n2
        ex0 = ax + dx * i0 + sx
        ex1 = ax + dx * (i0 + 1) + sx
        ey0 = ay + dy * j0 + sy
        ey1 = ay + dy * (j0 + 1) + sy
        c00 = chi[i0m, j0m] + px * np.round((ex0 - chi[i0m, j0m]) / px)
        c10 = chi[i1m, j0m] + px * np.round((ex1 - chi[i1m, j0m]) / px)
        c01 = chi[i0m, j1m] + px * np.round((ex0 - chi[i0m, j1m]) / px)
        c11 = chi[i1m, j1m] + px * np.round((ex1 - chi[i1m, j1m]) / px)
        z00 = zeta[i0m, j0m] + py * np.round((ey0 - zeta[i0m, j0m]) / py)
        z10 = zeta[i1m, j0m] + py * np.round((ey0 - zeta[i1m, j0m]) / py)
        z01 = zeta[i0m, j1m] + py * np.round((ey1 - zeta[i0m, j1m]) / py)
        z11 = zeta[i1m, j1m] + py * np.round((ey1 - zeta[i1m, j1m]) / py)
        fx = c00 * (1 - s) * (1 - t) + c10 * s * (1 - t) + c01 * (1 - s) * t + c11 * s * t
        fy = z00 * (1 - s) * (1 - t) + z10 * s * (1 - t) + z01 * (1 - s) * t + z11 * s * t
        ex = qx - fx
        ey = qy - fy
        if np.isfinite(px):
            ex -= px * np.round(ex / px)
        if np.isfinite(py):
            ey -= py * np.round(ey / py)
        dxs = (c10 - c00) * (1 - t) + (c11 - c01) * t
        dxt = (c01 - c00) * (1 - s) + (c11 - c10) * s
        dys = (z10 - z00) * (1 - t) + (z11 - z01) * t
        dyt = (z01 - z00) * (1 - s) + (z11 - z10) * s
        det = dxs * dyt - dxt * dys
        det = np.where(np.abs(det) < 1e-14, 1e-14, det)
        rx = rx + (ex * dyt - ey * dxt) / det
        ry = ry + (dxs * ey - dys * ex) / det

    i0 = np.floor(rx).astype(np.int64)
    j0 = np.floor(ry).astype(np.int64)
    s = np.clip(rx - i0, 0.0, 1.0)
    t = np.clip(ry - j0, 0.0, 1.0)
    return i0 % n1, j0 % n2, s, t, det / (dx * dy)
