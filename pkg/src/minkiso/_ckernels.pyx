# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the batched kernels in ``_pykernels``.

Triangles (n = 2) and 2x2 tangent blocks take the hand-written loops; other
dimensions defer to the NumPy reference.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

from . import _pykernels

cnp.import_array()

BACKEND = "cython"


def linear_bounds(V, e_plus, e_minus, lambdas, n_plus, n_minus, int space_dim, double tau):
    cdef const double[:, ::1] v = np.ascontiguousarray(V, dtype=np.float64)
    cdef const double[:, ::1] ep = np.ascontiguousarray(e_plus, dtype=np.float64)
    cdef const double[:, ::1] em = np.ascontiguousarray(e_minus, dtype=np.float64)
    cdef const double[::1] lam = np.ascontiguousarray(lambdas, dtype=np.float64)
    cdef const double[:, ::1] npl = np.ascontiguousarray(n_plus, dtype=np.float64).reshape(-1, v.shape[1])
    cdef const double[:, ::1] nmi = np.ascontiguousarray(n_minus, dtype=np.float64).reshape(-1, v.shape[1])
    cdef Py_ssize_t N = v.shape[0], D = v.shape[1]
    cdef Py_ssize_t n = lam.shape[0], k = em.shape[0], m = npl.shape[0], kk = nmi.shape[0]
    cdef Py_ssize_t r = n if n < k else k
    cdef Py_ssize_t i, j, d
    cdef double a, b, acc, vs, vt, stau
    stau = sqrt(tau * tau - 1.0) if tau > 1.0 else 0.0
    out = np.empty((6, N))
    cdef double[:, ::1] o = out
    for i in range(N):
        vs = 0.0
        vt = 0.0
        for d in range(space_dim):
            vs += v[i, d] * v[i, d]
        for d in range(space_dim, D):
            vt += v[i, d] * v[i, d]
        vs = sqrt(vs)
        vt = sqrt(vt)
        acc = 0.0
        for j in range(n):
            a = 0.0
            for d in range(D):
                a += v[i, d] * ep[j, d]
            b = 0.0
            if j < r:
                for d in range(D):
                    b += v[i, d] * em[j, d]
            a = a - lam[j] * b
            acc += a * a / (1.0 - lam[j] * lam[j])
        o[0, i] = sqrt(acc)
        o[1, i] = tau * vs + stau * vt
        acc = 0.0
        for j in range(m):
            a = 0.0
            for d in range(space_dim):
                a += v[i, d] * npl[j, d]
            for d in range(space_dim, D):
                a -= v[i, d] * npl[j, d]
            acc += a * a
        o[2, i] = sqrt(acc)
        o[3, i] = vs
        acc = 0.0
        for j in range(kk):
            a = 0.0
            for d in range(space_dim):
                a += v[i, d] * nmi[j, d]
            for d in range(space_dim, D):
                a -= v[i, d] * nmi[j, d]
            acc += a * a
        o[4, i] = sqrt(acc)
        o[5, i] = stau * vs + tau * vt
    return {
        "proj": (out[0], out[1]),
        "plus": (out[2], out[3]),
        "minus": (out[4], out[5]),
    }


def simplex_stiffness(X, cells, int space_dim):
    cells = np.asarray(cells, dtype=np.int64)
    if cells.ndim != 2 or cells.shape[1] != 3:
        return _pykernels.simplex_stiffness(X, cells, space_dim)
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const long long[:, ::1] c = np.ascontiguousarray(cells)
    cdef Py_ssize_t T = c.shape[0], D = x.shape[1]
    K = np.empty((T, 3, 3))
    vol = np.empty(T)
    G = np.empty((T, 2, 2))
    cdef double[:, :, ::1] Kv = K
    cdef double[::1] volv = vol
    cdef double[:, :, ::1] Gv = G
    cdef Py_ssize_t t, d
    cdef double g11, g12, g22, det, sgn, e1, e2, a, i11, i12, i22
    cdef long long p0, p1, p2
    for t in range(T):
        p0 = c[t, 0]
        p1 = c[t, 1]
        p2 = c[t, 2]
        g11 = 0.0
        g12 = 0.0
        g22 = 0.0
        for d in range(D):
            sgn = 1.0 if d < space_dim else -1.0
            e1 = x[p1, d] - x[p0, d]
            e2 = x[p2, d] - x[p0, d]
            g11 += sgn * e1 * e1
            g12 += sgn * e1 * e2
            g22 += sgn * e2 * e2
        det = g11 * g22 - g12 * g12
        Gv[t, 0, 0] = g11
        Gv[t, 0, 1] = g12
        Gv[t, 1, 0] = g12
        Gv[t, 1, 1] = g22
        a = 0.5 * sqrt(det) if det > 0.0 else 0.0
        volv[t] = a
        i11 = g22 / det
        i22 = g11 / det
        i12 = -g12 / det
        # D = [[-1,-1],[1,0],[0,1]];  K = a * D Ginv D^T
        Kv[t, 1, 1] = a * i11
        Kv[t, 2, 2] = a * i22
        Kv[t, 1, 2] = a * i12
        Kv[t, 2, 1] = a * i12
        Kv[t, 0, 1] = -a * (i11 + i12)
        Kv[t, 1, 0] = Kv[t, 0, 1]
        Kv[t, 0, 2] = -a * (i12 + i22)
        Kv[t, 2, 0] = Kv[t, 0, 2]
        Kv[t, 0, 0] = a * (i11 + 2.0 * i12 + i22)
    return K, vol, G


def abp_integrand(hess, ii, y, int space_dim):
    hess = np.asarray(hess, dtype=np.float64)
    if hess.ndim != 3 or hess.shape[1] != 2:
        return _pykernels.abp_integrand(hess, ii, y, space_dim)
    cdef const double[:, :, ::1] h = np.ascontiguousarray(hess)
    cdef const double[:, :, :, ::1] II = np.ascontiguousarray(ii, dtype=np.float64)
    cdef const double[:, ::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t S = h.shape[0], D = yy.shape[1]
    cdef Py_ssize_t s, d
    cdef double m11, m12, m21, m22, q11, q12, q21, q22, sgn, tr, dt, disc
    mins = np.empty(S)
    dets = np.empty(S)
    trs = np.empty(S)
    cdef double[::1] mv = mins
    cdef double[::1] dv = dets
    cdef double[::1] tv = trs
    for s in range(S):
        q11 = 0.0
        q12 = 0.0
        q21 = 0.0
        q22 = 0.0
        for d in range(D):
            sgn = yy[s, d] if d < space_dim else -yy[s, d]
            q11 += II[s, 0, 0, d] * sgn
            q12 += II[s, 0, 1, d] * sgn
            q21 += II[s, 1, 0, d] * sgn
            q22 += II[s, 1, 1, d] * sgn
        m11 = h[s, 0, 0] - q11
        m22 = h[s, 1, 1] - q22
        m12 = 0.5 * ((h[s, 0, 1] - q12) + (h[s, 1, 0] - q21))
        tr = m11 + m22
        dt = m11 * m22 - m12 * m12
        disc = sqrt(0.25 * (m11 - m22) * (m11 - m22) + m12 * m12)
        mv[s] = 0.5 * tr - disc
        dv[s] = dt
        tv[s] = tr
    return mins, dets, trs
