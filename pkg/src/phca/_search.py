"""Golden-section line search, vectorized over independent brackets."""

import numpy as np

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo, hi, tol):
    """Maximize ``f`` on each bracket ``[lo[i], hi[i]]``.

    ``f`` maps an array of abscissae (one per bracket) to values. Returns
    the best abscissa and value seen per bracket, endpoints included, so a
    monotone function ends on the boundary.
    """
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    tol = np.broadcast_to(np.asarray(tol, dtype=float), lo.shape)
    a, b = lo.copy(), hi.copy()
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best_x = np.where(fc >= fd, c, d)
    best_f = np.maximum(fc, fd)
    while np.any(b - a > tol):
        left = fc >= fd
        # keep [a, d] when c is better, else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _INV_PHI * (b - a)
        new_d = a + _INV_PHI * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_next = np.where(left, np.nan, fd)
        fd_next = np.where(left, fc, np.nan)
        probe = np.where(left, c_next, d_next)
        fp = f(probe)
        fc = np.where(left, fp, fc_next)
        fd = np.where(left, fd_next, fp)
        c, d = c_next, d_next
        better = fp > best_f
        best_x = np.where(better, probe, best_x)
        best_f = np.where(better, fp, best_f)
    for edge in (lo, hi):
        fe = f(edge)
        better = fe > best_f
        best_x = np.where(better, edge, best_x)
        best_f = np.where(better, fe, best_f)
    return best_x, best_f
