# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the projection and stretch hot loops.

Geometry matches _kernels_py.py exactly: centered pixel coordinates,
linear interpolation along columns, zero outside the slab, float64
accumulation.  Forward ops parallelize over (view, row) work items; the
scatter ops parallelize over the disjoint partition of their outputs
(rows for backprojection, (view, row) pairs for the stretch adjoint) so
no write needs synchronization and results are thread-count invariant.
"""
import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport cos, floor, tan


def project(const float[:, :, ::1] x, const double[::1] angles_rad, bint path_weighting,
            int num_threads):
    cdef Py_ssize_t n_d = x.shape[0], n_h = x.shape[1], n_w = x.shape[2]
    cdef Py_ssize_t n_view = angles_rad.shape[0]
    out_arr = np.zeros((n_view, n_h, n_w), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    cdef double cj = 0.5 * (n_w - 1), cz = 0.5 * (n_d - 1)
    cdef Py_ssize_t t, k, i, j, z, lo
    cdef double sec, tn, w, base, pos, f, acc
    cdef Py_ssize_t n_items = n_view * n_h

    for t in prange(n_items, nogil=True, schedule='static',
                    num_threads=num_threads):
        k = t // n_h
        i = t - k * n_h
        sec = 1.0 / cos(angles_rad[k])
        tn = tan(angles_rad[k])
        w = sec if path_weighting else 1.0
        for j in range(n_w):
            acc = 0.0
            base = (j - cj) * sec + cj
            for z in range(n_d):
                pos = base + (z - cz) * tn
                if pos < 0.0 or pos > n_w - 1:
                    continue
                lo = <Py_ssize_t>floor(pos)
                if lo >= n_w - 1:
                    acc = acc + x[z, i, n_w - 1]
                else:
                    f = pos - lo
                    acc = acc + (1.0 - f) * x[z, i, lo] + f * x[z, i, lo + 1]
            out[k, i, j] = <float>(w * acc)
    return out_arr


def backproject(const float[:, :, ::1] y, const double[::1] angles_rad, bint path_weighting,
                Py_ssize_t n_d, int num_threads):
    cdef Py_ssize_t n_view = y.shape[0], n_h = y.shape[1], n_w = y.shape[2]
    acc_arr = np.zeros((n_d, n_h, n_w), dtype=np.float64)
    cdef double[:, :, ::1] acc = acc_arr
    cdef double cj = 0.5 * (n_w - 1), cz = 0.5 * (n_d - 1)
    cdef Py_ssize_t i, k, j, z, lo
    cdef double sec, tn, w, base, pos, f, val

    # rows are the disjoint partition of the output: every view scatters
    # into the same voxels, but only within its own row i
    for i in prange(n_h, nogil=True, schedule='static',
                    num_threads=num_threads):
        for k in range(n_view):
            sec = 1.0 / cos(angles_rad[k])
            tn = tan(angles_rad[k])
            w = sec if path_weighting else 1.0
            for j in range(n_w):
                val = w * y[k, i, j]
                base = (j - cj) * sec + cj
                for z in range(n_d):
                    pos = base + (z - cz) * tn
                    if pos < 0.0 or pos > n_w - 1:
                        continue
                    lo = <Py_ssize_t>floor(pos)
                    if lo >= n_w - 1:
                        acc[z, i, n_w - 1] = acc[z, i, n_w - 1] + val
                    else:
                        f = pos - lo
                        acc[z, i, lo] = acc[z, i, lo] + (1.0 - f) * val
                        acc[z, i, lo + 1] = acc[z, i, lo + 1] + f * val
    return acc_arr.astype(np.float32)


def stretch(const float[:, :, ::1] y, const double[::1] angles_rad, bint magnify,
            int num_threads):
    cdef Py_ssize_t n_view = y.shape[0], n_h = y.shape[1], n_w = y.shape[2]
    out_arr = np.zeros((n_view, n_h, n_w), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    cdef double cj = 0.5 * (n_w - 1)
    cdef Py_ssize_t t, k, i, q, lo
    cdef double scale, pos, f
    cdef Py_ssize_t n_items = n_view * n_h

    for t in prange(n_items, nogil=True, schedule='static',
                    num_threads=num_threads):
        k = t // n_h
        i = t - k * n_h
        scale = cos(angles_rad[k]) if magnify else 1.0 / cos(angles_rad[k])
        for q in range(n_w):
            pos = (q - cj) * scale + cj
            if pos < 0.0 or pos > n_w - 1:
                out[k, i, q] = 0.0
                continue
            lo = <Py_ssize_t>floor(pos)
            if lo >= n_w - 1:
                out[k, i, q] = y[k, i, n_w - 1]
            else:
                f = pos - lo
                out[k, i, q] = <float>((1.0 - f) * y[k, i, lo] + f * y[k, i, lo + 1])
    return out_arr


def stretch_adjoint(const float[:, :, ::1] ys, const double[::1] angles_rad, bint magnify,
                    int num_threads):
    cdef Py_ssize_t n_view = ys.shape[0], n_h = ys.shape[1], n_w = ys.shape[2]
    acc_arr = np.zeros((n_view, n_h, n_w), dtype=np.float64)
    cdef double[:, :, ::1] acc = acc_arr
    cdef double cj = 0.5 * (n_w - 1)
    cdef Py_ssize_t t, k, i, q, lo
    cdef double scale, pos, f, val
    cdef Py_ssize_t n_items = n_view * n_h

    # output row (k, i) only receives from input row (k, i)
    for t in prange(n_items, nogil=True, schedule='static',
                    num_threads=num_threads):
        k = t // n_h
        i = t - k * n_h
        scale = cos(angles_rad[k]) if magnify else 1.0 / cos(angles_rad[k])
        for q in range(n_w):
            pos = (q - cj) * scale + cj
            if pos < 0.0 or pos > n_w - 1:
                continue
            val = ys[k, i, q]
            lo = <Py_ssize_t>floor(pos)
            if lo >= n_w - 1:
                acc[k, i, n_w - 1] = acc[k, i, n_w - 1] + val
            else:
                f = pos - lo
                acc[k, i, lo] = acc[k, i, lo] + (1.0 - f) * val
                acc[k, i, lo + 1] = acc[k, i, lo + 1] + f * val
    return acc_arr.astype(np.float32)
