"""Pure numpy fallback for the compiled kernels; same signatures and results."""
from __future__ import annotations

import math

import numpy as np

_BIG = 1e100
_LN_BIG = math.log(_BIG)
_RESCALE_EVERY = 16


def coherent_overlaps(gammas: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """``<gamma_i|psi>`` vectorized over the labels, looping over the number index."""
    gc = np.conj(gammas)
    term = np.ones(gammas.shape[0], dtype=complex)
    acc = np.full(gammas.shape[0], amps[0], dtype=complex)
    logscale = np.zeros(gammas.shape[0])
    for k in range(1, amps.shape[0]):
        term *= gc / math.sqrt(k)
        acc += amps[k] * term
        if k % _RESCALE_EVERY == 0:
            big = np.abs(term) > _BIG
            if big.any():
                term[big] /= _BIG
                acc[big] /= _BIG
                logscale[big] += _LN_BIG
    return acc * np.exp(logscale - 0.5 * np.abs(gammas) ** 2)
