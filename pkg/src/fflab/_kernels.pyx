# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled transform-evaluation kernel (pairs with _kernels_py)."""

import numpy as np

from libc.math cimport M_PI, cos, fabs, sin


cdef inline double complex cis(double x) noexcept nogil:
    return cos(x) + 1j * sin(x)


def eval_batch(const double[::1] lams, const double[::1] node_r,
               const int[:, ::1] children,
               const double[::1] letter_p, const double[::1] letter_t,
               double center, double width, double tol,
               double complex[::1] out):
    """Walk the merged word DAG once per frequency, filling ``out``."""
    cdef Py_ssize_t nnodes = node_r.shape[0]
    cdef Py_ssize_t nlet = letter_p.shape[0]
    cdef Py_ssize_t m = lams.shape[0]
    scratch = np.zeros(nnodes, dtype=np.complex128)
    cdef double complex[::1] W = scratch
    cdef Py_ssize_t j, u, i
    cdef double lam, r
    cdef double complex w, acc

    with nogil:
        for j in range(m):
            lam = lams[j]
            for u in range(nnodes):
                W[u] = 0
            W[0] = 1
            acc = 0
            for u in range(nnodes):
                w = W[u]
                if w == 0:
                    continue
                r = node_r[u]
                if children[u, 0] < 0 or M_PI * fabs(r * lam) * width <= tol:
                    acc = acc + w * cis(2.0 * M_PI * lam * r * center)
                else:
                    for i in range(nlet):
                        W[children[u, i]] = W[children[u, i]] + \
                            w * letter_p[i] * cis(2.0 * M_PI * lam * r * letter_t[i])
            out[j] = acc
