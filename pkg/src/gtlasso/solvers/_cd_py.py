"""Pure-NumPy fallback for the coordinate-descent sweep.

Semantically identical to the compiled kernel; used when the extension is
not built.  Roughly two orders of magnitude slower on large problems.
"""

from __future__ import annotations

import numpy as np


def cd_cycle(A, x, r, penalties, col_sq, order):
    maxviol = 0.0
    for i in order:
        c = col_sq[i]
        if c <= 0.0:
            continue
        p = penalties[i]
        xi = x[i]
        col = A[:, i]
        g = float(col @ r)
        h = g + c * xi

        if xi != 0.0:
            viol = abs(g - (p if xi > 0.0 else -p))
        else:
            viol = max(abs(g) - p, 0.0)
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
            r -= d * col
            x[i] = xnew
    return maxviol
