# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Schur-complement accumulation over COO constraint pairs.

Same contract as ``fallback.schur_pairs``: for pre-folded weights the
contribution of entry pair (a, b) to H[k_a, k_b] is

    w_a * w_b * (Wi[i_a, i_b] * Wi[j_a, j_b] + Wi[i_a, j_b] * Wi[j_a, i_b])

summed over ordered pairs; the loop below runs a <= b and mirrors the write.
"""


def schur_pairs(double[:, ::1] H, const int[:] ii, const int[:] jj,
                const int[:] kk, const double[:] ww,
                const double[:, ::1] Wi):
    cdef Py_ssize_t n = ii.shape[0]
    cdef Py_ssize_t a, b
    cdef int ia, ja, ka, ib, jb, kb
    cdef double wa, val
    for a in range(n):
        ia = ii[a]
        ja = jj[a]
        ka = kk[a]
        wa = ww[a]
        for b in range(a, n):
            ib = ii[b]
            jb = jj[b]
            val = wa * ww[b] * (Wi[ia, ib] * Wi[ja, jb] + Wi[ia, jb] * Wi[ja, ib])
            kb = kk[b]
            if a == b:
                H[ka, kb] += val
            else:
                H[ka, kb] += val
                H[kb, ka] += val
