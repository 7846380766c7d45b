# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Cyclic coordinate-descent sweep for the weighted Lasso (compiled core)."""

from libc.math cimport fabs


def cd_cycle(double[::1, :] A, double[::1] x, double[::1] r,
             double[::1] penalties, double[::1] col_sq,
             long[::1] order):
    """One pass of cyclic coordinate descent over the indices in ``order``.

    ``A`` must be Fortran-ordered so columns are contiguous.  ``x`` and the
    residual ``r = y - A @ x`` are updated in place.  Returns the largest
    KKT violation observed at the pre-update iterates, which upper-bounds
    the stationarity gap of the visited coordinates at sweep entry.
    """
    cdef Py_ssize_t n_rows = A.shape[0]
    cdef Py_ssize_t n_idx = order.shape[0]
    cdef Py_ssize_t t, i, m
    cdef double h, g, c, p, xi, xnew, d, viol
    cdef double maxviol = 0.0

    with nogil:
        for t in range(n_idx):
            i = order[t]
            c = col_sq[i]
            if c <= 0.0:
                continue
            p = penalties[i]
            xi = x[i]
            h = 0.0
            for m in range(n_rows):
                h += A[m, i] * r[m]
            g = h            # (A^T r)_i at the current point
            h += c * xi      # correlation with coordinate i fully restored

            if xi != 0.0:
                viol = fabs(g - (p if xi > 0.0 else -p))
            else:
                viol = fabs(g) - p
                if viol < 0.0:
                    viol = 0.0
            if viol > maxviol:
                maxviol = viol

            if h > p:
                xnew = (h - p) / c
            elif h < -p:
                xnew = (h + p) / c
            else:
                xnew = 0.0
            d = xnew - xi
            if d != 0.0:
                for m in range(n_rows):
                    r[m] -= d * A[m, i]
                x[i] = xnew

    return maxviol
