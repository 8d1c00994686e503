"""Pure-Python reference for the compiled kernels in ``_kernels_c.pyx``."""
import numpy as np


def g_orthonormalize(B, GB, rel_pivot):
    """Modified Gram-Schmidt (two sweeps) in the inner product ``<x, y> = x @ G @ y``.

    ``GB`` carries ``B @ G`` row by row and is updated alongside ``B``, so the
    Gram matrix itself is never touched. Returns ``(Q, GQ, failed)`` where
    ``failed`` is the first row whose remaining squared norm dropped to
    ``rel_pivot`` times the largest input squared norm, or -1.
    """
    q = np.array(B, dtype=np.float64, order="C", copy=True)
    gq = np.array(GB, dtype=np.float64, order="C", copy=True)
    k = q.shape[0]
    maxn = max((float(q[j] @ gq[j]) for j in range(k)), default=0.0)
    for j in range(k):
        for _ in range(2):
            for i in range(j):
                c = q[j] @ gq[i]
                q[j] -= c * q[i]
                gq[j] -= c * gq[i]
        nrm2 = q[j] @ gq[j]
        if not nrm2 > rel_pivot * maxn:
            return q, gq, j
        s = 1.0 / np.sqrt(nrm2)
        q[j] *= s
        gq[j] *= s
    return q, gq, -1


def residual_energy(V, GV, Q, GQ, w):
    """``sum_i w_i <r_i, r_i>`` for the residuals ``r_i`` of the rows of ``V``
    after removing their components along the orthonormal rows of ``Q``."""
    r = np.array(V, dtype=np.float64, copy=True)
    gr = np.array(GV, dtype=np.float64, copy=True)
    for j in range(Q.shape[0]):
        c = r @ GQ[j]
        r -= np.outer(c, Q[j])
        gr -= np.outer(c, GQ[j])
    return float(np.dot(w, np.einsum("ij,ij->i", r, gr)))
