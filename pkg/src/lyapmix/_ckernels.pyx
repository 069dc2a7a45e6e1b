# cython: language_level=3
"""Compiled inner loops. Same signatures as :mod:`lyapmix._pykernels`.

All arithmetic is carried out in the element type of the arrays passed in
(``float`` or ``double``), so binary32 inputs are factorized and solved in
binary32.
"""

import numpy as np

cimport cython
from cython cimport floating
from libc.math cimport fabs, sqrt


def ilu0_factor(const int[::1] indptr, const int[::1] indices,
                floating[::1] lu, const int[::1] diag):
    """Overwrite `lu` (CSR values, sorted indices) with its ILU(0) factors.

    Returns -1 on success or the index of the first row with a zero pivot.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, kp, jp, k, j
    cdef floating lik, piv
    cdef int[::1] iw = np.full(n, -1, dtype=np.intc)

    for i in range(n):
        for kp in range(indptr[i], indptr[i + 1]):
            iw[indices[kp]] = <int>kp
        for kp in range(indptr[i], diag[i]):
            k = indices[kp]
            piv = lu[diag[k]]
            lik = lu[kp] / piv
            lu[kp] = lik
            for jp in range(diag[k] + 1, indptr[k + 1]):
                j = iw[indices[jp]]
                if j >= 0:
                    lu[j] = lu[j] - lik * lu[jp]
        for kp in range(indptr[i], indptr[i + 1]):
            iw[indices[kp]] = -1
        if lu[diag[i]] == 0:
            return i
    return -1


def ilu0_solve(const int[::1] indptr, const int[::1] indices,
               const floating[::1] lu, const int[::1] diag,
               floating[::1] x):
    """Solve ``L U x = b`` in place; `x` holds `b` on entry."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, kp
    cdef floating acc

    for i in range(n):
        acc = x[i]
        for kp in range(indptr[i], diag[i]):
            acc = acc - lu[kp] * x[indices[kp]]
        x[i] = acc
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for kp in range(diag[i] + 1, indptr[i + 1]):
            acc = acc - lu[kp] * x[indices[kp]]
        x[i] = acc / lu[diag[i]]


cdef floating _off_norm(floating[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j
    cdef floating s = 0
    for i in range(n):
        for j in range(n):
            if i != j:
                s = s + a[i, j] * a[i, j]
    return <floating>sqrt(s)


def jacobi_eigh(floating[:, ::1] a, floating[:, ::1] v, double tol, int max_sweeps):
    """Cyclic Jacobi on the symmetric matrix `a` (overwritten, becomes diagonal).

    `v` must hold the identity on entry and receives the eigenvectors as
    columns. Returns the number of sweeps performed.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, k
    cdef floating apq, tau, t, c, s, akp, akq
    cdef floating one = 1
    cdef int sweep = 0

    while sweep < max_sweeps and _off_norm(a) > tol:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2 * apq)
                t = one / (<floating>fabs(tau) + <floating>sqrt(one + tau * tau))
                if tau < 0:
                    t = -t
                c = one / <floating>sqrt(one + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                a[p, q] = 0
                a[q, p] = 0
                for k in range(n):
                    akp = v[k, p]
                    akq = v[k, q]
                    v[k, p] = c * akp - s * akq
                    v[k, q] = s * akp + c * akq
        sweep += 1
    return sweep
