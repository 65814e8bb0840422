"""Seeded random streams and the sampling primitives used by the optimizer.

Every stream is a numpy ``Generator`` driven by the PCG64 bit generator
(128-bit state, permuted congruential output).  A stream is identified by a
``(seed, stream_id)`` pair which is hashed through ``numpy.random.SeedSequence``,
so streams with different ids are statistically independent while the mapping
from the pair to the output sequence is fixed across runs and platforms.

Normal variates come from numpy's ziggurat sampler.  ``normal_cdf`` is
evaluated through ``math.erfc``; its absolute error is below 1e-15 on the
whole real line (erfc is accurate to a few ulp and the result is in [0, 1]).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError

MAX_SEED = 2**64 - 1

RngStream = np.random.Generator


def make_rng(seed: int, stream: int = 0) -> RngStream:
    """Return a PCG64 stream for ``(seed, stream)``."""
    if not 0 <= int(seed) <= MAX_SEED:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if int(stream) < 0:
        raise ParameterError(f"stream id must be nonnegative, got {stream}")
    ss = np.random.SeedSequence([int(seed), int(stream)])
    return np.random.Generator(np.random.PCG64(ss))


def standard_normal(rng: RngStream, n: int) -> np.ndarray:
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return rng.standard_normal(n)


def geometric(rng: RngStream, p: float, size=None):
    """Number of failures before the first success, support {0, 1, 2, ...}.

    ``P(j) = p (1 - p)**j``.  numpy counts trials (support starting at 1),
    hence the shift.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"success probability must lie in (0, 1), got {p}")
    return rng.geometric(p, size=size) - 1


def uniform_vector(rng: RngStream, n: int, lo: float, hi: float) -> np.ndarray:
    if not lo < hi:
        raise ParameterError(f"need lo < hi, got lo={lo}, hi={hi}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return rng.uniform(lo, hi, size=n)


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))
