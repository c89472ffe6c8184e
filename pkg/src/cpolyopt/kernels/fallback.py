"""Pure-NumPy Schur-complement accumulation kernel.

Computes H[j, k] += <A_j, Wi A_k Wi> for symmetric COO-encoded constraint
matrices sharing the scaling matrix ``Wi``.  Entries carry pre-folded weights
``w = v * sqrt(2)`` off the diagonal and ``w = v / sqrt(2)`` on it, so the
per-pair contribution is uniformly

    w_a * w_b * (Wi[ia, ib] * Wi[ja, jb] + Wi[ia, jb] * Wi[ja, ib]).

The double loop is evaluated in row chunks with dense gathers; an optional
one-hot matrix turns the scatter into two small matrix products.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse

__all__ = ["schur_pairs"]

_CHUNK_FLOATS = 2_000_000  # per-chunk scratch budget (~16 MB)


def schur_pairs(
    H: np.ndarray,
    ii: np.ndarray,
    jj: np.ndarray,
    kk: np.ndarray,
    ww: np.ndarray,
    Wi: np.ndarray,
) -> None:
    n = ii.shape[0]
    if n == 0:
        return
    m = H.shape[0]
    onehot = scipy.sparse.csr_matrix(
        (np.ones(n), (np.arange(n), kk.astype(np.int64))), shape=(n, m)
    )
    chunk = max(1, _CHUNK_FLOATS // n)
    Wii = Wi[ii]
    Wij = Wi[jj]
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        gathered = Wii[lo:hi][:, ii] * Wij[lo:hi][:, jj]
        gathered += Wii[lo:hi][:, jj] * Wij[lo:hi][:, ii]
        gathered *= ww[lo:hi, None]
        gathered *= ww[None, :]
        H += onehot[lo:hi].T @ (gathered @ onehot)
