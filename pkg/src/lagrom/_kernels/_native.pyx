# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels. Mirrors _fallback.py operation for operation; the
python-visible entry points accept the same argument shapes."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, round as c_round, fabs, INFINITY

cnp.import_array()

IMPL = "native"


cdef inline Py_ssize_t pmod(Py_ssize_t i, Py_ssize_t n) nogil:
    cdef Py_ssize_t r = i % n
    return r + n if r < 0 else r


cdef void _thomas(const double[::1] lower, const double[::1] diag,
                  const double[::1] upper, const double[::1] rhs,
                  double[::1] out, double[::1] cp, double[::1] dp) nogil:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double m
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / m
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m
    out[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]


def tridiag_solve(lower, diag, upper, rhs):
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    scratch = np.empty((2, n))
    cdef double[:, ::1] sc = scratch
    _thomas(lo, d, up, b, out, sc[0], sc[1])
    return out_arr


def cyclic_tridiag_solve(lower, diag, upper, rhs):
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] dg = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = dg.shape[0]
    cdef double alpha = lo[0]
    cdef double beta = up[n - 1]
    cdef double gamma = -dg[0]
    d_arr = np.asarray(dg).copy()
    cdef double[::1] d = d_arr
    d[0] = dg[0] - gamma
    d[n - 1] = dg[n - 1] - alpha * beta / gamma
    u_arr = np.zeros(n)
    cdef double[::1] u = u_arr
    u[0] = gamma
    u[n - 1] = beta
    y_arr = np.empty(n)
    z_arr = np.empty(n)
    cdef double[::1] y = y_arr
    cdef double[::1] z = z_arr
    scratch = np.empty((2, n))
    cdef double[:, ::1] sc = scratch
    _thomas(lo, d, up, b, y, sc[0], sc[1])
    _thomas(lo, d, up, u, z, sc[0], sc[1])
    cdef double fac = (y[0] + alpha / gamma * y[n - 1]) / (1.0 + z[0] + alpha / gamma * z[n - 1])
    return y_arr - fac * z_arr


def laplacian5_periodic(u, double inv_dx2, double inv_dy2):
    cdef const double[:, ::1] f = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1]
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, im, ip, jm, jp
    with nogil:
        for i in range(nx):
            im = nx - 1 if i == 0 else i - 1
            ip = 0 if i == nx - 1 else i + 1
            for j in range(ny):
                jm = ny - 1 if j == 0 else j - 1
                jp = 0 if j == ny - 1 else j + 1
                out[i, j] = (f[ip, j] - 2.0 * f[i, j] + f[im, j]) * inv_dx2 \
                    + (f[i, jp] - 2.0 * f[i, j] + f[i, jm]) * inv_dy2
    return out_arr


def upwind_advect_periodic(u, vx, vy, double inv_dx, double inv_dy):
    cdef const double[:, ::1] f = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1]
    cdef const double[:, ::1] ax = np.ascontiguousarray(np.broadcast_to(vx, (nx, ny)), dtype=np.float64)
    cdef const double[:, ::1] ay = np.ascontiguousarray(np.broadcast_to(vy, (nx, ny)), dtype=np.float64)
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double gx, gy
    with nogil:
        for i in range(nx):
            im = nx - 1 if i == 0 else i - 1
            ip = 0 if i == nx - 1 else i + 1
            for j in range(ny):
                jm = ny - 1 if j == 0 else j - 1
                jp = 0 if j == ny - 1 else j + 1
                if ax[i, j] > 0:
                    gx = (f[i, j] - f[im, j]) * inv_dx
                else:
                    gx = (f[ip, j] - f[i, j]) * inv_dx
                if ay[i, j] > 0:
                    gy = (f[i, j] - f[i, jm]) * inv_dy
                else:
                    gy = (f[i, jp] - f[i, j]) * inv_dy
                out[i, j] = ax[i, j] * gx + ay[i, j] * gy
    return out_arr


def bilinear_sample_periodic(f, qx, qy, double ax, double ay, double dx, double dy):
    cdef const double[:, ::1] ff = np.ascontiguousarray(f, dtype=np.float64)
    qx_arr = np.ascontiguousarray(qx, dtype=np.float64)
    qy_arr = np.ascontiguousarray(qy, dtype=np.float64)
    shape = qx_arr.shape
    cdef const double[::1] px = qx_arr.ravel()
    cdef const double[::1] py = qy_arr.ravel()
    cdef Py_ssize_t nq = px.shape[0]
    cdef Py_ssize_t nx = ff.shape[0], ny = ff.shape[1]
    out_arr = np.empty(nq)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, i0, j0, i1, j1
    cdef double gx, gy, fx, fy
    with nogil:
        for k in range(nq):
            gx = (px[k] - ax) / dx
            gy = (py[k] - ay) / dy
            i0 = <Py_ssize_t>floor(gx)
            j0 = <Py_ssize_t>floor(gy)
            fx = gx - i0
            fy = gy - j0
            i0 = pmod(i0, nx)
            j0 = pmod(j0, ny)
            i1 = 0 if i0 == nx - 1 else i0 + 1
            j1 = 0 if j0 == ny - 1 else j0 + 1
            out[k] = ff[i0, j0] * (1 - fx) * (1 - fy) + ff[i1, j0] * fx * (1 - fy) \
                + ff[i0, j1] * (1 - fx) * fy + ff[i1, j1] * fx * fy
    return out_arr.reshape(shape)


def locate_displaced_bilinear(chi, zeta, qx, qy, double ax, double ay,
                              double dx, double dy, double per_x, double per_y,
                              int iters=8):
    cdef const double[:, ::1] cx = np.ascontiguousarray(chi, dtype=np.float64)
    cdef const double[:, ::1] cz = np.ascontiguousarray(zeta, dtype=np.float64)
    cdef Py_ssize_t n1 = cx.shape[0], n2 = cx.shape[1]
    qx_arr = np.ascontiguousarray(qx, dtype=np.float64).ravel()
    qy_arr = np.ascontiguousarray(qy, dtype=np.float64).ravel()
    cdef const double[::1] pxq = qx_arr
    cdef const double[::1] pyq = qy_arr
    cdef Py_ssize_t nq = pxq.shape[0]

    cdef double sx = float(np.mean(np.asarray(chi) - (ax + np.arange(n1)[:, None] * dx)))
    cdef double sy = float(np.mean(np.asarray(zeta) - (ay + np.arange(n2)[None, :] * dy)))
    cdef double px = per_x if per_x > 0 else INFINITY
    cdef double py = per_y if per_y > 0 else INFINITY

    i_out = np.empty(nq, dtype=np.int64)
    j_out = np.empty(nq, dtype=np.int64)
    s_out = np.empty(nq)
    t_out = np.empty(nq)
    det_out = np.empty(nq)
    cdef long long[::1] io = i_out
    cdef long long[::1] jo = j_out
    cdef double[::1] so = s_out
    cdef double[::1] to = t_out
    cdef double[::1] deto = det_out

    cdef Py_ssize_t k, it, i0, j0, i0m, j0m, i1m, j1m
    cdef double rx, ry, s, t, ex0, ex1, ey0, ey1
    cdef double c00, c10, c01, c11, z00, z10, z01, z11
    cdef double fx, fy, ex, ey, dxs, dxt, dys, dyt, det
    with nogil:
        for k in range(nq):
            rx = (pxq[k] - sx - ax) / dx
            ry = (pyq[k] - sy - ay) / dy
            det = 1.0
            for it in range(iters):
                i0 = <Py_ssize_t>floor(rx)
                j0 = <Py_ssize_t>floor(ry)
                s = rx - i0
                t = ry - j0
                i0m = pmod(i0, n1)
                j0m = pmod(j0, n2)
                i1m = 0 if i0m == n1 - 1 else i0m + 1
                j1m = 0 if j0m == n2 - 1 else j0m + 1
                ex0 = ax + dx * i0 + sx
                ex1 = ax + dx * (i0 + 1) + sx
                ey0 = ay + dy * j0 + sy
                ey1 = ay + dy * (j0 + 1) + sy
                if px == INFINITY:
                    c00 = cx[i0m, j0m]; c10 = cx[i1m, j0m]
                    c01 = cx[i0m, j1m]; c11 = cx[i1m, j1m]
                else:
                    c00 = cx[i0m, j0m] + px * c_round((ex0 - cx[i0m, j0m]) / px)
                    c10 = cx[i1m, j0m] + px * c_round((ex1 - cx[i1m, j0m]) / px)
                    c01 = cx[i0m, j1m] + px * c_round((ex0 - cx[i0m, j1m]) / px)
                    c11 = cx[i1m, j1m] + px * c_round((ex1 - cx[i1m, j1m]) / px)
                if py == INFINITY:
                    z00 = cz[i0m, j0m]; z10 = cz[i1m, j0m]
                    z01 = cz[i0m, j1m]; z11 = cz[i1m, j1m]
                else:
                    z00 = cz[i0m, j0m] + py * c_round((ey0 - cz[i0m, j0m]) / py)
                    z10 = cz[i1m, j0m] + py * c_round((ey0 - cz[i1m, j0m]) / py)
                    z01 = cz[i0m, j1m] + py * c_round((ey1 - cz[i0m, j1m]) / py)
                    z11 = cz[i1m, j1m] + py * c_round((ey1 - cz[i1m, j1m]) / py)
                fx = c00 * (1 - s) * (1 - t) + c10 * s * (1 - t) + c01 * (1 - s) * t + c11 * s * t
                fy = z00 * (1 - s) * (1 - t) + z10 * s * (1 - t) + z01 * (1 - s) * t + z11 * s * t
                ex = pxq[k] - fx
                ey = pyq[k] - fy
                if px != INFINITY:
                    ex -= px * c_round(ex / px)
                if py != INFINITY:
                    ey -= py * c_round(ey / py)
                dxs = (c10 - c00) * (1 - t) + (c11 - c01) * t
                dxt = (c01 - c00) * (1 - s) + (c11 - c10) * s
                dys = (z10 - z00) * (1 - t) + (z11 - z01) * t
                dyt = (z01 - z00) * (1 - s) + (z11 - z10) * s
                det = dxs * dyt - dxt * dys
                if fabs(det) < 1e-14:
                    det = 1e-14
                rx = rx + (ex * dyt - ey * dxt) / det
                ry = ry + (dxs * ey - dys * ex) / det
            i0 = <Py_ssize_t>floor(rx)
            j0 = <Py_ssize_t>floor(ry)
            s = rx - i0
            t = ry - j0
            if s < 0.0:
                s = 0.0
            elif s > 1.0:
                s = 1.0
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            io[k] = pmod(i0, n1)
            jo[k] = pmod(j0, n2)
            so[k] = s
            to[k] = t
            deto[k] = det / (dx * dy)
    return i_out, j_out, s_out, t_out, det_out
