"""Compiled inner kernels for the density hot path.

The multivariate-normal quadratic form runs once or twice per sampler step,
so it is the one place where interpreter overhead would distort the
runtime-per-iteration measurements the engine exists to take.  Kernels are
compiled with strict (non-fastmath) float semantics so chains stay
bit-reproducible for a fixed seed.
"""

import numpy as np
from numba import njit

LOG_2PI = 1.8378770664093453


@njit(cache=True)
def mvn_logpdf(value, mean, precision, half_logdet):
    """Log density of N(mean, cov) at `value`, with cov's inverse precomputed.

    `half_logdet` is 0.5*log|cov|.  The quadratic form is evaluated fresh on
    every call; factor-dependent quantities (precision, half_logdet) are
    cached by the caller and rebuilt only when the covariance changes.
    """
    d = value.shape[0]
    q = 0.0
    for i in range(d):
        row = precision[i]
        s = 0.0
        for j in range(d):
            s += row[j] * (value[j] - mean[j])
        q += (value[i] - mean[i]) * s
    return -0.5 * q - half_logdet - 0.5 * d * LOG_2PI


_warmed = False


def warmup():
    """Force JIT compilation outside of any timed region."""
    global _warmed
    if _warmed:
        return
    one = np.ones(1)
    mvn_logpdf(one, np.zeros(1), np.eye(1), 0.0)
    _warmed = True
