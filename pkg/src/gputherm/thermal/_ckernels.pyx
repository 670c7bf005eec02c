# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels for the layered conductance operator.

The operator acting on a temperature-rise field ``x`` of shape
``(layers, ny, nx)`` is::

    (A x)_c = diag_c x_c + sum_{links c-d} g_cd (x_c - x_d)

with x-links ``gx[l, j, i]`` between (i, i+1), y-links ``gy[l, j, i]``
between (j, j+1) and vertical links ``gz[l, j, i]`` between (l, l+1).
"""
import numpy as np
from libc.math cimport sqrt


cdef void _apply(const double[:, :, ::1] gx, const double[:, :, ::1] gy,
                 const double[:, :, ::1] gz, const double[:, :, ::1] diag,
                 const double[:, :, ::1] x, double[:, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t L = x.shape[0], ny = x.shape[1], nx = x.shape[2]
    cdef Py_ssize_t l, j, i
    cdef double v, xc
    for l in range(L):
        for j in range(ny):
            for i in range(nx):
                xc = x[l, j, i]
                v = diag[l, j, i] * xc
                if i > 0:
                    v = v + gx[l, j, i - 1] * (xc - x[l, j, i - 1])
                if i < nx - 1:
                    v = v + gx[l, j, i] * (xc - x[l, j, i + 1])
                if j > 0:
                    v = v + gy[l, j - 1, i] * (xc - x[l, j - 1, i])
                if j < ny - 1:
                    v = v + gy[l, j, i] * (xc - x[l, j + 1, i])
                if l > 0:
                    v = v + gz[l - 1, j, i] * (xc - x[l - 1, j, i])
                if l < L - 1:
                    v = v + gz[l, j, i] * (xc - x[l + 1, j, i])
                out[l, j, i] = v


cdef double _dot(const double[::1] a, const double[::1] b) noexcept nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0
    for k in range(a.shape[0]):
        s = s + a[k] * b[k]
    return s


def apply_operator(gx, gy, gz, diag, x):
    out = np.empty_like(x)
    _apply(gx, gy, gz, diag, x, out)
    return out


def pcg(gx, gy, gz, diag, inv_precond, rhs, x0, double rtol, Py_ssize_t maxiter):
    """Jacobi-preconditioned conjugate gradients.

    Returns ``(x, iterations, relative_residual)`` where the residual is
    recomputed from scratch at exit.
    """
    shape = rhs.shape
    x_arr = np.array(x0, dtype=np.float64, order="C", copy=True)
    r_arr = np.empty(shape, dtype=np.float64)
    z_arr = np.empty(shape, dtype=np.float64)
    p_arr = np.empty(shape, dtype=np.float64)
    q_arr = np.empty(shape, dtype=np.float64)

    cdef double[:, :, ::1] x3 = x_arr
    cdef double[:, :, ::1] q3 = q_arr
    cdef double[:, :, ::1] p3 = p_arr
    cdef double[::1] x = x_arr.reshape(-1)
    cdef double[::1] r = r_arr.reshape(-1)
    cdef double[::1] z = z_arr.reshape(-1)
    cdef double[::1] p = p_arr.reshape(-1)
    cdef double[::1] q = q_arr.reshape(-1)
    cdef const double[::1] b = rhs.reshape(-1)
    cdef const double[::1] m = inv_precond.reshape(-1)
    cdef const double[:, :, ::1] gx_ = gx
    cdef const double[:, :, ::1] gy_ = gy
    cdef const double[:, :, ::1] gz_ = gz
    cdef const double[:, :, ::1] dg = diag

    cdef Py_ssize_t n = b.shape[0], k, it = 0
    cdef double bnorm, rz, rz_new, alpha, beta, pq, rnorm, target

    bnorm = sqrt(_dot(b, b))
    if bnorm == 0.0:
        x_arr[...] = 0.0
        return x_arr, 0, 0.0
    target = rtol * bnorm

    with nogil:
        _apply(gx_, gy_, gz_, dg, x3, q3)
        for k in range(n):
            r[k] = b[k] - q[k]
            z[k] = m[k] * r[k]
            p[k] = z[k]
        rz = _dot(r, z)
        rnorm = sqrt(_dot(r, r))
        while rnorm > target and it < maxiter:
            _apply(gx_, gy_, gz_, dg, p3, q3)
            pq = _dot(p, q)
            if pq <= 0.0:
                break
            alpha = rz / pq
            for k in range(n):
                x[k] = x[k] + alpha * p[k]
                r[k] = r[k] - alpha * q[k]
                z[k] = m[k] * r[k]
            rz_new = _dot(r, z)
            beta = rz_new / rz
            rz = rz_new
            for k in range(n):
                p[k] = z[k] + beta * p[k]
            rnorm = sqrt(_dot(r, r))
            it += 1
        _apply(gx_, gy_, gz_, dg, x3, q3)
        for k in range(n):
            r[k] = b[k] - q[k]
        rnorm = sqrt(_dot(r, r))
    return x_arr, it, rnorm / bnorm
