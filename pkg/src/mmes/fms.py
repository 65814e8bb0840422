"""Fast mixture sampling of mutation vectors.

A mutation vector is

    z = sqrt(1 - gamma) * z0 + sqrt(gamma / l) * sum_k z_k * q[i_k]

with ``z0`` an isotropic base draw, ``z_k`` scalar standard normals and
``i_k`` archive slots picked by the archive's geometric rule.  With
``gamma = 1 - (1 - c_a)**m`` the samples have exactly the covariance

    C_a = (1 - c_a)**m I + c_a sum_j (1 - c_a)**(m - j) q_j q_j^T

for every ``l``; only the even moments of order >= 4 depend on ``l``.
The exact Gaussian N(0, C_a) is available through ``sample_target`` as a
reference sampler and runtime baseline.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .archive import DirectionArchive
from .errors import ParameterError
from .rand import RngStream

MAX_DENSE_DIM = 2048
STUDENT_T_DOF = 5


class BaseDistribution(enum.Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student-t"
    RADEMACHER = "rademacher"

    @classmethod
    def parse(cls, value) -> "BaseDistribution":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ParameterError(f"unknown base distribution {value!r}") from None


def draw_base(rng: RngStream, base: BaseDistribution, shape) -> np.ndarray:
    """Unit-variance isotropic draws used for the ``z0`` component."""
    if base is BaseDistribution.GAUSSIAN:
        return rng.standard_normal(shape)
    if base is BaseDistribution.STUDENT_T:
        dof = STUDENT_T_DOF
        return rng.standard_t(dof, shape) / math.sqrt(dof / (dof - 2))
    if base is BaseDistribution.RADEMACHER:
        return 2.0 * rng.integers(0, 2, size=shape).astype(float) - 1.0
    raise ParameterError(f"unsupported base distribution {base!r}")


@dataclass(frozen=True)
class MixtureParams:
    """Mixing strength ``l``, learning rate ``c_a`` and archive size ``m``."""

    l: int
    c_a: float
    m: int

    def __post_init__(self):
        if self.l < 1:
            raise ParameterError(f"mixing strength must be >= 1, got {self.l}")
        if not 0.0 < self.c_a < 1.0:
            raise ParameterError(f"c_a must lie in (0, 1), got {self.c_a}")
        if self.m < 1:
            raise ParameterError(f"archive size must be >= 1, got {self.m}")

    @property
    def gamma(self) -> float:
        return -math.expm1(self.m * math.log1p(-self.c_a))

    def alpha(self) -> np.ndarray:
        """Selection probability of logical positions 1..m (newest last)."""
        k = np.arange(1, self.m + 1)
        return self.c_a * (1.0 - self.c_a) ** (self.m - k) / self.gamma


def sample_mutations(params: MixtureParams, archive: DirectionArchive, rng: RngStream,
                     count: int, base: BaseDistribution = BaseDistribution.GAUSSIAN) -> np.ndarray:
    """``count`` mutation vectors as rows of a ``(count, n)`` array.

    Costs O(count * l * n); the archive size does not enter.
    """
    if archive.m != params.m:
        raise ParameterError(f"archive holds {archive.m} vectors, params expect m={params.m}")
    l = params.l
    gamma = params.gamma
    z = draw_base(rng, base, (count, archive.n))
    z *= math.sqrt(1.0 - gamma)
    coeffs = rng.standard_normal((count, l)) * math.sqrt(gamma / l)
    slots = archive.select_physical_index(rng, params.c_a, size=(count, l))
    for k in range(l):
        z += coeffs[:, k:k + 1] * archive.q[slots[:, k]]
    return z


def sample_mutation(params: MixtureParams, archive: DirectionArchive, rng: RngStream,
                    base: BaseDistribution = BaseDistribution.GAUSSIAN) -> np.ndarray:
    return sample_mutations(params, archive, rng, 1, base)[0]


def _logical_q(params: MixtureParams, q) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if q.shape[0] != params.m:
        raise ParameterError(f"expected {params.m} direction vectors, got {q.shape[0]}")
    return q


def target_covariance(params: MixtureParams, q) -> np.ndarray:
    """Dense ``C_a`` for direction vectors ``q`` given in logical order (newest last)."""
    q = _logical_q(params, q)
    n = q.shape[1]
    if n > MAX_DENSE_DIM:
        raise ParameterError(f"refusing to materialise a {n}x{n} covariance (limit {MAX_DENSE_DIM})")
    w = params.gamma * params.alpha()
    c = (1.0 - params.gamma) * np.eye(n)
    c += (q.T * w) @ q
    return 0.5 * (c + c.T)


def target_diagonal(params: MixtureParams, q) -> np.ndarray:
    """Diagonal of ``C_a`` without forming the matrix."""
    q = _logical_q(params, q)
    w = params.gamma * params.alpha()
    return (1.0 - params.gamma) + w @ (q * q)


def sample_target(params: MixtureParams, q, rng: RngStream, count: int = 1) -> np.ndarray:
    """Exact draws from N(0, C_a) in O(n m) per sample, as rows."""
    q = _logical_q(params, q)
    scale = np.sqrt(params.gamma * params.alpha())
    z = math.sqrt(1.0 - params.gamma) * rng.standard_normal((count, q.shape[1]))
    z += rng.standard_normal((count, params.m)) @ (scale[:, None] * q)
    return z
