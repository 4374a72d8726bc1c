# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the regression net's hot path.

Same contract as ``kernels_np`` (the numpy fallback): batches are (B,
features) row-major float64, dense weights (out, in). Matrix products go
through BLAS dgemm; the batchnorm/ReLU/dropout elementwise work is fused
into single passes instead of a chain of temporaries. Results may differ
from the numpy kernels in the last ulps because the reduction order differs.
"""

import numpy as np

from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dgemm


cdef void _gemm_x_wt(double[:, ::1] x, double[:, ::1] w, double[:, ::1] z) noexcept nogil:
    # z (B, out) = x (B, in) @ w.T; row-major buffers fed to Fortran dgemm
    # via the transposed column-major views
    cdef int m = <int>w.shape[0]
    cdef int n = <int>x.shape[0]
    cdef int k = <int>x.shape[1]
    cdef double one = 1.0, zero = 0.0
    cdef char ta = b'T', tb = b'N'
    dgemm(&ta, &tb, &m, &n, &k, &one, &w[0, 0], &k, &x[0, 0], &k, &zero, &z[0, 0], &m)


cdef void _gemm_dz_w(double[:, ::1] dz, double[:, ::1] w, double[:, ::1] dx) noexcept nogil:
    # dx (B, in) = dz (B, out) @ w (out, in)
    cdef int m = <int>w.shape[1]
    cdef int n = <int>dz.shape[0]
    cdef int k = <int>w.shape[0]
    cdef double one = 1.0, zero = 0.0
    cdef char ta = b'N', tb = b'N'
    dgemm(&ta, &tb, &m, &n, &k, &one, &w[0, 0], &m, &dz[0, 0], &k, &zero, &dx[0, 0], &m)


cdef void _gemm_dzt_x(double[:, ::1] dz, double[:, ::1] x, double[:, ::1] dw) noexcept nogil:
    # dw (out, in) = dz.T (out, B) @ x (B, in)
    cdef int m = <int>x.shape[1]
    cdef int n = <int>dz.shape[1]
    cdef int k = <int>x.shape[0]
    cdef double one = 1.0, zero = 0.0
    cdef char ta = b'N', tb = b'T'
    dgemm(&ta, &tb, &m, &n, &k, &one, &x[0, 0], &m, &dz[0, 0], &n, &zero, &dw[0, 0], &m)


cdef inline double[:, ::1] _c2d(object a):
    return np.ascontiguousarray(a, dtype=np.float64)


cdef inline double[::1] _c1d(object a):
    return np.ascontiguousarray(a, dtype=np.float64)


def dense_forward(object x_in, object w_in, object b_in):
    cdef double[:, ::1] x = _c2d(x_in)
    cdef double[:, ::1] w = _c2d(w_in)
    cdef double[::1] b = _c1d(b_in)
    cdef Py_ssize_t rows = x.shape[0], cols = w.shape[0]
    z_arr = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] z = z_arr
    cdef Py_ssize_t i, j
    if rows == 0:
        return z_arr
    with nogil:
        _gemm_x_wt(x, w, z)
        for i in range(rows):
            for j in range(cols):
                z[i, j] += b[j]
    return z_arr


def dense_backward(object dz_in, object x_in, object w_in):
    cdef double[:, ::1] dz = _c2d(dz_in)
    cdef double[:, ::1] x = _c2d(x_in)
    cdef double[:, ::1] w = _c2d(w_in)
    cdef Py_ssize_t rows = dz.shape[0], cols = dz.shape[1], in_w = w.shape[1]
    dx_arr = np.empty((rows, in_w), dtype=np.float64)
    dw_arr = np.empty((cols, in_w), dtype=np.float64)
    db_arr = np.zeros(cols, dtype=np.float64)
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t i, j
    with nogil:
        _gemm_dz_w(dz, w, dx)
        _gemm_dzt_x(dz, x, dw)
        for i in range(rows):
            for j in range(cols):
                db[j] += dz[i, j]
    return dx_arr, dw_arr, db_arr


def block_forward_train(object x_in, object w_in, object b_in, object gamma_in,
                        object beta_in, double eps, object keep_mask, double inv_keep):
    cdef double[:, ::1] x = _c2d(x_in)
    cdef double[:, ::1] w = _c2d(w_in)
    cdef double[::1] b = _c1d(b_in)
    cdef double[::1] gamma = _c1d(gamma_in)
    cdef double[::1] beta = _c1d(beta_in)
    cdef bint has_mask = keep_mask is not None
    cdef double[:, ::1] mask = _c2d(keep_mask) if has_mask else _c2d(np.empty((0, 0)))

    cdef Py_ssize_t rows = x.shape[0], cols = w.shape[0]
    z_arr = np.empty((rows, cols), dtype=np.float64)
    xhat_arr = np.empty((rows, cols), dtype=np.float64)
    bn_arr = np.empty((rows, cols), dtype=np.float64)
    out_arr = np.empty((rows, cols), dtype=np.float64)
    mu_arr = np.zeros(cols, dtype=np.float64)
    var_arr = np.zeros(cols, dtype=np.float64)
    istd_arr = np.empty(cols, dtype=np.float64)
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] xhat = xhat_arr
    cdef double[:, ::1] bn = bn_arr
    cdef double[:, ::1] out = out_arr
    cdef double[::1] mu = mu_arr
    cdef double[::1] var = var_arr
    cdef double[::1] istd = istd_arr
    cdef Py_ssize_t i, j
    cdef double diff, xh, y, a

    with nogil:
        _gemm_x_wt(x, w, z)
        for i in range(rows):
            for j in range(cols):
                z[i, j] += b[j]
                mu[j] += z[i, j]
        for j in range(cols):
            mu[j] /= rows
        for i in range(rows):
            for j in range(cols):
                diff = z[i, j] - mu[j]
                var[j] += diff * diff
        for j in range(cols):
            var[j] /= rows
            istd[j] = 1.0 / sqrt(var[j] + eps)
        for i in range(rows):
            for j in range(cols):
                xh = (z[i, j] - mu[j]) * istd[j]
                xhat[i, j] = xh
                y = gamma[j] * xh + beta[j]
                bn[i, j] = y
                a = y if y > 0.0 else 0.0
                if has_mask:
                    a = a * mask[i, j] * inv_keep
                out[i, j] = a
    return out_arr, xhat_arr, istd_arr, mu_arr, var_arr, bn_arr


def block_forward_eval(object x_in, object w_in, object b_in, object gamma_in,
                       object beta_in, object rmean_in, object rvar_in, double eps):
    cdef double[:, ::1] x = _c2d(x_in)
    cdef double[:, ::1] w = _c2d(w_in)
    cdef double[::1] b = _c1d(b_in)
    cdef double[::1] gamma = _c1d(gamma_in)
    cdef double[::1] beta = _c1d(beta_in)
    cdef double[::1] rmean = _c1d(rmean_in)
    cdef double[::1] rvar = _c1d(rvar_in)
    cdef Py_ssize_t rows = x.shape[0], cols = w.shape[0]
    out_arr = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double y
    if rows == 0:
        return out_arr
    with nogil:
        _gemm_x_wt(x, w, out)
        for i in range(rows):
            for j in range(cols):
                y = gamma[j] * ((out[i, j] + b[j] - rmean[j]) / sqrt(rvar[j] + eps)) + beta[j]
                out[i, j] = y if y > 0.0 else 0.0
    return out_arr


def block_backward(object dout_in, object x_in, object w_in, object gamma_in,
                   object xhat_in, object istd_in, object bn_in,
                   object keep_mask, double inv_keep):
    cdef double[:, ::1] dout = _c2d(dout_in)
    cdef double[:, ::1] x = _c2d(x_in)
    cdef double[:, ::1] w = _c2d(w_in)
    cdef double[::1] gamma = _c1d(gamma_in)
    cdef double[:, ::1] xhat = _c2d(xhat_in)
    cdef double[::1] istd = _c1d(istd_in)
    cdef double[:, ::1] bn = _c2d(bn_in)
    cdef bint has_mask = keep_mask is not None
    cdef double[:, ::1] mask = _c2d(keep_mask) if has_mask else _c2d(np.empty((0, 0)))

    cdef Py_ssize_t rows = dout.shape[0], cols = dout.shape[1], in_w = w.shape[1]
    dz_arr = np.empty((rows, cols), dtype=np.float64)
    dx_arr = np.empty((rows, in_w), dtype=np.float64)
    dw_arr = np.empty((cols, in_w), dtype=np.float64)
    db_arr = np.zeros(cols, dtype=np.float64)
    dgamma_arr = np.zeros(cols, dtype=np.float64)
    dbeta_arr = np.zeros(cols, dtype=np.float64)
    s1_arr = np.zeros(cols, dtype=np.float64)
    s2_arr = np.zeros(cols, dtype=np.float64)
    cdef double[:, ::1] dz = dz_arr
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef double[::1] dgamma = dgamma_arr
    cdef double[::1] dbeta = dbeta_arr
    cdef double[::1] s1 = s1_arr
    cdef double[::1] s2 = s2_arr
    cdef Py_ssize_t i, j
    cdef double v, dxh

    with nogil:
        # pass 1: dropout and relu masks, gamma/beta grads, batch sums
        for i in range(rows):
            for j in range(cols):
                v = dout[i, j]
                if has_mask:
                    v = v * mask[i, j] * inv_keep
                if bn[i, j] <= 0.0:
                    v = 0.0
                dgamma[j] += v * xhat[i, j]
                dbeta[j] += v
                dxh = v * gamma[j]
                dz[i, j] = dxh
                s1[j] += dxh
                s2[j] += dxh * xhat[i, j]
        # pass 2: batch-statistics chain rule for the biased variance
        for i in range(rows):
            for j in range(cols):
                dz[i, j] = (istd[j] / rows) * (
                    rows * dz[i, j] - s1[j] - xhat[i, j] * s2[j]
                )
                db[j] += dz[i, j]
        _gemm_dz_w(dz, w, dx)
        _gemm_dzt_x(dz, x, dw)
    return dx_arr, dw_arr, db_arr, dgamma_arr, dbeta_arr
