"""Paired-test adaptation of the mutation strength.

Consecutive generations are compared rank by rank.  The weighted fraction of
ranks that improved, ``L``, is centred and normalised so that under random
selection it is approximately standard normal; ``W`` smooths it over
generations and a one-sided z-test on ``W`` drives the step size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .rand import normal_cdf


@dataclass(frozen=True)
class RecombinationWeights:
    mu: int
    omega: np.ndarray
    mu_eff: float

    @classmethod
    def log_decreasing(cls, mu: int) -> "RecombinationWeights":
        """Weights proportional to ``ln(mu + 0.5) - ln(i)``, i = 1..mu."""
        if mu < 1:
            raise ParameterError(f"mu must be >= 1, got {mu}")
        raw = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        omega = raw / raw.sum()
        omega.setflags(write=False)
        return cls(mu, omega, float(1.0 / np.sum(omega ** 2)))


@dataclass
class PtaState:
    W: float = 0.0
    c_sigma: float = 0.3
    d_sigma: float = 1.0
    alpha_z: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.c_sigma < 1.0:
            raise ParameterError(f"c_sigma must lie in (0, 1), got {self.c_sigma}")
        if self.d_sigma <= 0.0:
            raise ParameterError(f"d_sigma must be positive, got {self.d_sigma}")
        if not 0.0 < self.alpha_z < 1.0:
            raise ParameterError(f"alpha_z must lie in (0, 1), got {self.alpha_z}")


def _check_sorted(f: np.ndarray, name: str) -> None:
    if np.any(f[1:] < f[:-1]):
        raise ParameterError(f"{name} must be sorted ascending")


def success_metric(prev_f, cur_f, w: RecombinationWeights) -> float:
    """Weighted share of ranks ``i <= mu`` whose value strictly improved."""
    prev_f = np.asarray(prev_f, dtype=float)
    cur_f = np.asarray(cur_f, dtype=float)
    if len(prev_f) < w.mu or len(cur_f) < w.mu:
        raise ParameterError(f"need at least mu={w.mu} values per generation")
    _check_sorted(prev_f, "prev_f")
    _check_sorted(cur_f, "cur_f")
    improved = prev_f[:w.mu] > cur_f[:w.mu]
    return float(np.dot(w.omega, improved))


def update_w(s: PtaState, L: float, w: RecombinationWeights) -> float:
    """Exponential smoothing of ``2L - 1``; returns the previous ``W``."""
    old = s.W
    c = s.c_sigma
    s.W = (1.0 - c) * old + math.sqrt(c * (2.0 - c) * w.mu_eff) * (2.0 * L - 1.0)
    return old


def sigma_multiplier(W: float, s: PtaState) -> float:
    return math.exp((normal_cdf(W) - 1.0 + s.alpha_z) / s.d_sigma)


def multiplier_bounds(s: PtaState) -> tuple[float, float]:
    return math.exp((s.alpha_z - 1.0) / s.d_sigma), math.exp(s.alpha_z / s.d_sigma)


def update_sigma(sigma: float, s: PtaState, W: float | None = None) -> float:
    """Step size after a z-test at level ``alpha_z`` on ``W`` (defaults to ``s.W``)."""
    if not sigma > 0.0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return sigma * sigma_multiplier(s.W if W is None else W, s)
