# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element kernels; array contract identical to _kernels_np."""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()


def stiffness_elems(double[:, :, :, ::1] gphys, double[:, ::1] wdet):
    cdef Py_ssize_t nt = gphys.shape[0], nq = gphys.shape[1]
    out_arr = np.zeros((nt, 6, 6))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t t, q, i, j
    cdef double w, acc
    with nogil:
        for t in range(nt):
            for q in range(nq):
                w = wdet[t, q]
                for i in range(6):
                    for j in range(6):
                        acc = gphys[t, q, i, 0] * gphys[t, q, j, 0] + gphys[t, q, i, 1] * gphys[t, q, j, 1]
                        out[t, i, j] += w * acc
    return out_arr


def mass_elems(double[:, ::1] p2, double[:, ::1] wdet):
    cdef Py_ssize_t nt = wdet.shape[0], nq = wdet.shape[1]
    out_arr = np.zeros((nt, 6, 6))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t t, q, i, j
    cdef double w
    with nogil:
        for t in range(nt):
            for q in range(nq):
                w = wdet[t, q]
                for i in range(6):
                    for j in range(6):
                        out[t, i, j] += w * p2[q, i] * p2[q, j]
    return out_arr


def divergence_elems(double[:, ::1] p1, double[:, :, :, ::1] gphys, double[:, ::1] wdet):
    cdef Py_ssize_t nt = gphys.shape[0], nq = gphys.shape[1]
    out_arr = np.zeros((nt, 3, 6, 2))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t t, q, k, j, c
    cdef double w
    with nogil:
        for t in range(nt):
            for q in range(nq):
                w = wdet[t, q]
                for k in range(3):
                    for j in range(6):
                        for c in range(2):
                            out[t, k, j, c] += w * p1[q, k] * gphys[t, q, j, c]
    return out_arr


def load_elems(double[:, ::1] p2, double[:, ::1] wdet, double[:, :, ::1] fvals):
    cdef Py_ssize_t nt = wdet.shape[0], nq = wdet.shape[1]
    out_arr = np.zeros((nt, 6, 2))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t t, q, i, c
    cdef double w
    with nogil:
        for t in range(nt):
            for q in range(nq):
                w = wdet[t, q]
                for i in range(6):
                    for c in range(2):
                        out[t, i, c] += w * fvals[t, q, c] * p2[q, i]
    return out_arr


def convection_elems(double[:, ::1] p2, double[:, :, :, ::1] gphys, double[:, ::1] wdet,
                     double[:, :, ::1] a_elem):
    cdef Py_ssize_t nt = gphys.shape[0], nq = gphys.shape[1]
    out_arr = np.zeros((nt, 6, 6))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t t, q, i, j, k
    cdef double w, a0, a1, adg
    with nogil:
        for t in range(nt):
            for q in range(nq):
                w = wdet[t, q]
                a0 = 0.0
                a1 = 0.0
                for k in range(6):
                    a0 += p2[q, k] * a_elem[t, k, 0]
                    a1 += p2[q, k] * a_elem[t, k, 1]
                for j in range(6):
                    adg = a0 * gphys[t, q, j, 0] + a1 * gphys[t, q, j, 1]
                    for i in range(6):
                        out[t, i, j] += w * p2[q, i] * adg
    return out_arr


def grad_coupling_elems(double[:, ::1] p2, double[:, :, :, ::1] gphys, double[:, ::1] wdet,
                        double[:, :, ::1] u_elem):
    cdef Py_ssize_t nt = gphys.shape[0], nq = gphys.shape[1]
    out_arr = np.zeros((nt, 6, 2, 6, 2))
    cdef double[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t t, q, i, j, c, d, k
    cdef double w
    cdef double gu[2][2]
    with nogil:
        for t in range(nt):
            for q in range(nq):
                w = wdet[t, q]
                for c in range(2):
                    for d in range(2):
                        gu[c][d] = 0.0
                for k in range(6):
                    for c in range(2):
                        for d in range(2):
                            gu[c][d] += u_elem[t, k, c] * gphys[t, q, k, d]
                for i in range(6):
                    for c in range(2):
                        for j in range(6):
                            for d in range(2):
                                out[t, i, c, j, d] += w * p2[q, i] * gu[c][d] * p2[q, j]
    return out_arr


def gradtest_coupling_elems(double[:, ::1] p2, double[:, :, :, ::1] gphys, double[:, ::1] wdet,
                            double[:, :, ::1] u_elem):
    cdef Py_ssize_t nt = gphys.shape[0], nq = gphys.shape[1]
    out_arr = np.zeros((nt, 6, 2, 6, 2))
    cdef double[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t t, q, i, j, c, d, k
    cdef double w
    cdef double uq[2]
    with nogil:
        for t in range(nt):
            for q in range(nq):
                w = wdet[t, q]
                uq[0] = 0.0
                uq[1] = 0.0
                for k in range(6):
                    uq[0] += p2[q, k] * u_elem[t, k, 0]
                    uq[1] += p2[q, k] * u_elem[t, k, 1]
                for i in range(6):
                    for c in range(2):
                        for j in range(6):
                            for d in range(2):
                                out[t, i, c, j, d] += w * gphys[t, q, i, d] * uq[c] * p2[q, j]
    return out_arr


def l4_value_grad(double[:, ::1] p2, double[:, ::1] wdet, double[:, :, ::1] v_elem):
    cdef Py_ssize_t nt = wdet.shape[0], nq = wdet.shape[1]
    grad_arr = np.zeros((nt, 6, 2))
    cdef double[:, :, ::1] grad = grad_arr
    cdef Py_ssize_t t, q, i, k
    cdef double w, v0, v1, v2, value = 0.0
    with nogil:
        for t in range(nt):
            for q in range(nq):
                w = wdet[t, q]
                v0 = 0.0
                v1 = 0.0
                for k in range(6):
                    v0 += p2[q, k] * v_elem[t, k, 0]
                    v1 += p2[q, k] * v_elem[t, k, 1]
                v2 = v0 * v0 + v1 * v1
                value += w * v2 * v2
                for i in range(6):
                    grad[t, i, 0] += 4.0 * w * v2 * v0 * p2[q, i]
                    grad[t, i, 1] += 4.0 * w * v2 * v1 * p2[q, i]
    return float(value), grad_arr
