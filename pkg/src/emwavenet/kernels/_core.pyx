# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled elementwise kernels: modulation forward/backward and Adam.

Mirrors kernels/_fallback.py. Complex grids are walked through float64
views with explicit real/imag arithmetic (the C99 complex helpers cost a
function call per multiply), the per-pixel sincos of the mask is computed
once per row, and every loop runs contiguously over the trailing axis.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()


def modulate(u_arr, double[:, ::1] amp, double[:, ::1] phase, double k):
    u_arr = np.ascontiguousarray(u_arr, dtype=np.complex128)
    cdef Py_ssize_t nb = u_arr.shape[0], n0 = u_arr.shape[1], n1 = u_arr.shape[2]
    out_arr = np.empty((nb, n0, n1), dtype=np.complex128)
    cdef double[:, :, ::1] u = u_arr.view(np.float64)
    cdef double[:, :, ::1] o = out_arr.view(np.float64)
    mask_arr = np.empty(2 * n1, dtype=np.float64)
    cdef double[::1] mask = mask_arr
    cdef Py_ssize_t b, i, j
    cdef double th, a, ur, ui, mr, mi
    for i in range(n0):
        for j in range(n1):
            a = amp[i, j]
            th = k * phase[i, j]
            mask[2 * j] = a * cos(th)
            mask[2 * j + 1] = a * sin(th)
        for b in range(nb):
            for j in range(n1):
                ur = u[b, i, 2 * j]
                ui = u[b, i, 2 * j + 1]
                mr = mask[2 * j]
                mi = mask[2 * j + 1]
                o[b, i, 2 * j] = ur * mr - ui * mi
                o[b, i, 2 * j + 1] = ur * mi + ui * mr
    return out_arr


def modulation_backward(g_arr, m_arr, double[:, ::1] amp, double[:, ::1] phase, double k):
    g_arr = np.ascontiguousarray(g_arr, dtype=np.complex128)
    m_arr = np.ascontiguousarray(m_arr, dtype=np.complex128)
    cdef Py_ssize_t nb = g_arr.shape[0], n0 = g_arr.shape[1], n1 = g_arr.shape[2]
    d_amp_arr = np.empty((n0, n1), dtype=np.float64)
    d_phase_arr = np.empty((n0, n1), dtype=np.float64)
    g_prev_arr = np.empty((nb, n0, n1), dtype=np.complex128)
    scratch_arr = np.empty(4 * n1, dtype=np.float64)  # e_re, e_im, acc_re, acc_im interleaved
    cdef double[:, :, ::1] g = g_arr.view(np.float64)
    cdef double[:, :, ::1] m = m_arr.view(np.float64)
    cdef double[:, :, ::1] gp = g_prev_arr.view(np.float64)
    cdef double[:, ::1] d_amp = d_amp_arr
    cdef double[:, ::1] d_phase = d_phase_arr
    cdef double[::1] s = scratch_arr
    cdef Py_ssize_t b, i, j
    cdef double th, a, gr, gi, mr, mi, er, ei, t1, t2
    for i in range(n0):
        for j in range(n1):
            th = k * phase[i, j]
            s[4 * j] = cos(th)
            s[4 * j + 1] = sin(th)
            s[4 * j + 2] = 0.0
            s[4 * j + 3] = 0.0
        for b in range(nb):
            for j in range(n1):
                gr = g[b, i, 2 * j]
                gi = g[b, i, 2 * j + 1]
                mr = m[b, i, 2 * j]
                mi = m[b, i, 2 * j + 1]
                er = s[4 * j]
                ei = s[4 * j + 1]
                # q = m * conj(g) * e, accumulated over the batch
                t1 = mr * gr + mi * gi
                t2 = mi * gr - mr * gi
                s[4 * j + 2] += t1 * er - t2 * ei
                s[4 * j + 3] += t1 * ei + t2 * er
                # cotangent to the incident field: amp * conj(e) * g
                a = amp[i, j]
                gp[b, i, 2 * j] = a * (er * gr + ei * gi)
                gp[b, i, 2 * j + 1] = a * (er * gi - ei * gr)
        for j in range(n1):
            a = amp[i, j]
            d_amp[i, j] = 2.0 * s[4 * j + 2]
            d_phase[i, j] = -2.0 * k * a * s[4 * j + 3]
    return d_amp_arr, d_phase_arr, g_prev_arr


def adam_update(double[:, ::1] param, double[:, ::1] grad, double[:, ::1] m, double[:, ::1] v,
                double lr, double beta1, double beta2, double eps, double bc1, double bc2):
    cdef Py_ssize_t n0 = param.shape[0], n1 = param.shape[1]
    cdef Py_ssize_t i, j
    cdef double g
    for i in range(n0):
        for j in range(n1):
            g = grad[i, j]
            m[i, j] = beta1 * m[i, j] + (1.0 - beta1) * g
            v[i, j] = beta2 * v[i, j] + (1.0 - beta2) * (g * g)
            param[i, j] -= lr * (m[i, j] / bc1) / (sqrt(v[i, j] / bc2) + eps)
