"""Pure-Python versions of the compiled kernels in ``_ckernels.pyx``.

Row and rotation updates are vectorized with numpy where the data
dependencies allow it. Arithmetic stays in the dtype of the arrays passed in.
"""

import numpy as np


def ilu0_factor(indptr, indices, lu, diag):
    n = len(indptr) - 1
    iw = np.full(n, -1, dtype=np.intp)
    for i in range(n):
        start, stop = indptr[i], indptr[i + 1]
        iw[indices[start:stop]] = np.arange(start, stop)
        for kp in range(start, diag[i]):
            k = indices[kp]
            lik = lu[kp] / lu[diag[k]]
            lu[kp] = lik
            upper = slice(diag[k] + 1, indptr[k + 1])
            target = iw[indices[upper]]
            hit = target >= 0
            lu[target[hit]] -= lik * lu[upper][hit]
        iw[indices[start:stop]] = -1
        if lu[diag[i]] == 0:
            return i
    return -1


def ilu0_solve(indptr, indices, lu, diag, x):
    n = len(indptr) - 1
    for i in range(n):
        lo = slice(indptr[i], diag[i])
        if lo.start < lo.stop:
            x[i] -= np.dot(lu[lo], x[indices[lo]])
    for i in range(n - 1, -1, -1):
        hi = slice(diag[i] + 1, indptr[i + 1])
        if hi.start < hi.stop:
            x[i] -= np.dot(lu[hi], x[indices[hi]])
        x[i] /= lu[diag[i]]


def _off_norm(a):
    off = a.copy()
    np.fill_diagonal(off, 0)
    return np.sqrt(np.sum(off * off, dtype=a.dtype))


def jacobi_eigh(a, v, tol, max_sweeps):
    n = a.shape[0]
    one = a.dtype.type(1)
    sweep = 0
    while sweep < max_sweeps and _off_norm(a) > tol:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2 * apq)
                t = one / (abs(tau) + np.sqrt(one + tau * tau))
                if tau < 0:
                    t = -t
                c = one / np.sqrt(one + t * t)
                s = t * c
                colp, colq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp, rowq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = 0
                a[q, p] = 0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweep += 1
    return sweep
