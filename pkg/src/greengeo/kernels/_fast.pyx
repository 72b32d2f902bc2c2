# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tensor-assembly kernels.

Semantics and index conventions match greengeo.kernels._ref exactly; the
parity test suite asserts agreement between the two backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def christoffel(g_inv, dg):
    cdef double[:, :, ::1] gi = np.ascontiguousarray(g_inv, dtype=np.float64)
    cdef double[:, :, :, ::1] d = np.ascontiguousarray(dg, dtype=np.float64)
    cdef Py_ssize_t m = gi.shape[0], n = gi.shape[1]
    out = np.empty((m, n, n, n))
    cdef double[:, :, :, ::1] o = out
    cdef Py_ssize_t p, k, i, j, s
    cdef double acc
    for p in range(m):
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for s in range(n):
                        acc += gi[p, k, s] * (d[p, i, j, s] + d[p, j, i, s] - d[p, s, i, j])
                    o[p, k, i, j] = 0.5 * acc
    return out


def christoffel_derivative(g_inv, dg, d2g):
    cdef double[:, :, ::1] gi = np.ascontiguousarray(g_inv, dtype=np.float64)
    cdef double[:, :, :, ::1] d = np.ascontiguousarray(dg, dtype=np.float64)
    cdef double[:, :, :, :, ::1] dd = np.ascontiguousarray(d2g, dtype=np.float64)
    cdef Py_ssize_t m = gi.shape[0], n = gi.shape[1]
    out = np.empty((m, n, n, n, n))
    cdef double[:, :, :, :, ::1] o = out
    dginv_arr = np.empty((n, n, n))
    cdef double[:, :, ::1] dginv = dginv_arr
    cdef Py_ssize_t p, l, k, i, j, s, a, b
    cdef double acc, t
    for p in range(m):
        # d_l g^{ks} = - g^{ka} (d_l g_ab) g^{bs}
        for l in range(n):
            for k in range(n):
                for s in range(n):
                    acc = 0.0
                    for a in range(n):
                        for b in range(n):
                            acc -= gi[p, k, a] * d[p, l, a, b] * gi[p, b, s]
                    dginv[l, k, s] = acc
        for l in range(n):
            for k in range(n):
                for i in range(n):
                    for j in range(n):
                        acc = 0.0
                        for s in range(n):
                            t = d[p, i, j, s] + d[p, j, i, s] - d[p, s, i, j]
                            acc += dginv[l, k, s] * t
                            t = dd[p, l, i, j, s] + dd[p, l, j, i, s] - dd[p, l, s, i, j]
                            acc += gi[p, k, s] * t
                        o[p, l, k, i, j] = 0.5 * acc
    return out


def ricci_from_jet(g_inv, dg, d2g):
    gamma_arr = christoffel(g_inv, dg)
    dgamma_arr = christoffel_derivative(g_inv, dg, d2g)
    cdef double[:, :, :, ::1] gamma = gamma_arr
    cdef double[:, :, :, :, ::1] dgamma = dgamma_arr
    cdef Py_ssize_t m = gamma.shape[0], n = gamma.shape[1]
    out = np.empty((m, n, n))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t p, i, j, k, s
    cdef double acc
    for p in range(m):
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for k in range(n):
                    acc += dgamma[p, k, k, i, j] - dgamma[p, j, k, i, k]
                    for s in range(n):
                        acc += gamma[p, k, k, s] * gamma[p, s, i, j]
                        acc -= gamma[p, k, j, s] * gamma[p, s, i, k]
                o[p, i, j] = acc
    # symmetrize away finite-difference noise
    for p in range(m):
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.5 * (o[p, i, j] + o[p, j, i])
                o[p, i, j] = acc
                o[p, j, i] = acc
    return out


def covariant_hessian(df, d2f, gamma):
    cdef double[:, ::1] d1 = np.ascontiguousarray(df, dtype=np.float64)
    cdef double[:, :, ::1] d2 = np.ascontiguousarray(d2f, dtype=np.float64)
    cdef double[:, :, :, ::1] gam = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t m = d1.shape[0], n = d1.shape[1]
    out = np.empty((m, n, n))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t p, i, j, k
    cdef double acc
    for p in range(m):
        for i in range(n):
            for j in range(n):
                acc = d2[p, i, j]
                for k in range(n):
                    acc -= gam[p, k, i, j] * d1[p, k]
                o[p, i, j] = acc
    return out


def vector_divergence(gamma, v, dv):
    cdef double[:, :, :, ::1] gam = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef double[:, ::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[:, :, ::1] dvv = np.ascontiguousarray(dv, dtype=np.float64)
    cdef Py_ssize_t m = vv.shape[0], n = vv.shape[1]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef Py_ssize_t p, a, s
    cdef double acc
    for p in range(m):
        acc = 0.0
        for a in range(n):
            acc += dvv[p, a, a]
            for s in range(n):
                acc += gam[p, a, a, s] * vv[p, s]
        o[p] = acc
    return out


def tensor_divergence(g_inv, gamma, t, dt):
    cdef double[:, :, ::1] gi = np.ascontiguousarray(g_inv, dtype=np.float64)
    cdef double[:, :, :, ::1] gam = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef double[:, :, ::1] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[:, :, :, ::1] dtt = np.ascontiguousarray(dt, dtype=np.float64)
    cdef Py_ssize_t m = tt.shape[0], n = tt.shape[1]
    out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t p, i, j, k, s
    cdef double acc, cov
    for p in range(m):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                for k in range(n):
                    cov = dtt[p, k, i, j]
                    for s in range(n):
                        cov -= gam[p, s, k, i] * tt[p, s, j]
                        cov -= gam[p, s, k, j] * tt[p, i, s]
                    acc += gi[p, j, k] * cov
            o[p, i] = acc
    return out


def sym2_norm2(g_inv, t):
    cdef double[:, :, ::1] gi = np.ascontiguousarray(g_inv, dtype=np.float64)
    cdef double[:, :, ::1] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t m = tt.shape[0], n = tt.shape[1]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef Py_ssize_t p, i, j, a, b
    cdef double acc
    for p in range(m):
        acc = 0.0
        for i in range(n):
            for j in range(n):
                for a in range(n):
                    for b in range(n):
                        acc += gi[p, i, a] * gi[p, j, b] * tt[p, i, j] * tt[p, a, b]
        o[p] = acc
    return out


def raise_index(g_inv, w):
    cdef double[:, :, ::1] gi = np.ascontiguousarray(g_inv, dtype=np.float64)
    cdef double[:, ::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t m = ww.shape[0], n = ww.shape[1]
    out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t p, i, j
    cdef double acc
    for p in range(m):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += gi[p, i, j] * ww[p, j]
            o[p, i] = acc
    return out
