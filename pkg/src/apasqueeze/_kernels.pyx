# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coherent-state projection kernel."""
import numpy as np

from libc.math cimport exp, log, sqrt

cdef double BIG = 1e100
cdef double SHRINK = 1e-100
# labels processed together; eight arrays of this length stay in L1
DEF BLOCK = 256
# the running term can grow by at most |gamma|^RESCALE_EVERY between checks
DEF RESCALE_EVERY = 16


def coherent_overlaps(const double complex[::1] gammas, const double complex[::1] amps):
    """``<gamma_i|psi> = e^{-|g|^2/2} sum_k conj(g)^k / sqrt(k!) psi_k`` for every ``i``."""
    cdef Py_ssize_t m = gammas.shape[0]
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t start, stop, i, k
    cdef double ln_big = log(BIG)
    cdef double inv, ar, ai, tmp, scale
    cdef double gr[BLOCK]
    cdef double gi[BLOCK]
    cdef double tr[BLOCK]
    cdef double ti[BLOCK]
    cdef double accr[BLOCK]
    cdef double acci[BLOCK]
    cdef double logscale[BLOCK]
    inv_sqrt_arr = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] inv_sqrt = inv_sqrt_arr
    out = np.empty(m, dtype=np.complex128)
    cdef double complex[::1] res = out
    with nogil:
        for k in range(1, n):
            inv_sqrt[k] = 1.0 / sqrt(<double>k)
        start = 0
        while start < m:
            stop = min(start + BLOCK, m)
            for i in range(stop - start):
                gr[i] = gammas[start + i].real
                gi[i] = -gammas[start + i].imag
                tr[i] = 1.0
                ti[i] = 0.0
                accr[i] = amps[0].real
                acci[i] = amps[0].imag
                logscale[i] = 0.0
            for k in range(1, n):
                inv = inv_sqrt[k]
                ar = amps[k].real
                ai = amps[k].imag
                for i in range(stop - start):
                    tmp = (tr[i] * gr[i] - ti[i] * gi[i]) * inv
                    ti[i] = (tr[i] * gi[i] + ti[i] * gr[i]) * inv
                    tr[i] = tmp
                    accr[i] = accr[i] + tr[i] * ar - ti[i] * ai
                    acci[i] = acci[i] + tr[i] * ai + ti[i] * ar
                if k % RESCALE_EVERY == 0:
                    for i in range(stop - start):
                        if tr[i] * tr[i] + ti[i] * ti[i] > BIG:
                            tr[i] = tr[i] * SHRINK
                            ti[i] = ti[i] * SHRINK
                            accr[i] = accr[i] * SHRINK
                            acci[i] = acci[i] * SHRINK
                            logscale[i] = logscale[i] + ln_big
            for i in range(stop - start):
                scale = exp(logscale[i] - 0.5 * (gr[i] * gr[i] + gi[i] * gi[i]))
                res[start + i] = (accr[i] * scale) + 1j * (acci[i] * scale)
            start = stop
    return out
