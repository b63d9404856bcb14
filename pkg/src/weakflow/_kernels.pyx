# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sequential kernels. Mirrors weakflow._kernels_py exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

ctypedef double complex cplx


cdef inline void _matmul(const cplx[:, ::1] a, const cplx[:, ::1] b,
                         cplx[:, ::1] out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef cplx s
    for i in range(d):
        for j in range(d):
            s = 0
            for k in range(d):
                s = s + a[i, k] * b[k, j]
            out[i, j] = s


def cumulative_products(steps):
    cdef const cplx[:, :, ::1] st = np.ascontiguousarray(steps, dtype=np.complex128)
    cdef Py_ssize_t n = st.shape[0], d = st.shape[1], k, i
    out_arr = np.zeros((n + 1, d, d), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_arr
    for i in range(d):
        out[0, i, i] = 1
    with nogil:
        for k in range(n):
            _matmul(st[k], out[k], out[k + 1], d)
    return out_arr


def apply_ordered(steps, psi):
    cdef const cplx[:, :, ::1] st = np.ascontiguousarray(steps, dtype=np.complex128)
    cdef Py_ssize_t n = st.shape[0], d = st.shape[1], k, i, j
    v_arr = np.array(psi, dtype=np.complex128)
    w_arr = np.empty(d, dtype=np.complex128)
    cdef cplx[::1] v = v_arr
    cdef cplx[::1] w = w_arr
    cdef cplx s
    with nogil:
        for k in range(n):
            for i in range(d):
                s = 0
                for j in range(d):
                    s = s + st[k, i, j] * v[j]
                w[i] = s
            for i in range(d):
                v[i] = w[i]
    return v_arr


def series_vector(gens, psi, int order):
    cdef const cplx[:, :, ::1] g = np.ascontiguousarray(gens, dtype=np.complex128)
    cdef Py_ssize_t n = g.shape[0], d = g.shape[1]
    v_arr = np.zeros((order + 1, d), dtype=np.complex128)
    v_arr[0] = psi
    cdef cplx[:, ::1] v = v_arr
    acc_arr = np.empty(d, dtype=np.complex128)
    tmp_arr = np.empty(d, dtype=np.complex128)
    cdef cplx[::1] acc = acc_arr
    cdef cplx[::1] tmp = tmp_arr
    cdef Py_ssize_t k, m, l, i, j
    cdef cplx s
    cdef double inv
    with nogil:
        for k in range(n):
            m = order
            while m >= 1:
                for i in range(d):
                    acc[i] = v[0, i]
                for l in range(1, m + 1):
                    inv = 1.0 / (m - l + 1)
                    for i in range(d):
                        s = 0
                        for j in range(d):
                            s = s + g[k, i, j] * acc[j]
                        tmp[i] = v[l, i] + s * inv
                    for i in range(d):
                        acc[i] = tmp[i]
                for i in range(d):
                    v[m, i] = acc[i]
                m -= 1
    return v_arr


def series_scalar(gens, int order):
    cdef const cplx[::1] g = np.ascontiguousarray(gens, dtype=np.complex128)
    cdef Py_ssize_t n = g.shape[0], k, m, l
    c_arr = np.zeros(order + 1, dtype=np.complex128)
    cdef cplx[::1] c = c_arr
    cdef cplx acc
    c[0] = 1
    with nogil:
        for k in range(n):
            m = order
            while m >= 1:
                acc = c[0]
                for l in range(1, m + 1):
                    acc = c[l] + g[k] * acc / (m - l + 1)
                c[m] = acc
                m -= 1
    return c_arr
