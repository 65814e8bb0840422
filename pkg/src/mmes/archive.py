"""Archive of direction vectors with timestamps and a logical ordering.

Physical slot ``v[i]`` holds the direction vector at logical position ``i``
(0-based here; position ``m - 1`` is the most recent).  Replacing a vector
only rotates the index array, the stored vectors never move.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .rand import RngStream, geometric


class DirectionArchive:
    """``m`` stored evolution paths of length ``n``.

    Attributes
    ----------
    q : ndarray (m, n)
        Physical storage of the direction vectors.
    t : ndarray (m,)
        Generation stamp of each physical slot.
    v : ndarray (m,)
        Logical order: ``v[i]`` is the physical slot at logical position i.
    T : int
        Minimum generation distance kept between consecutive paths.
    """

    def __init__(self, m: int, n: int, T: int):
        if m < 1 or n < 1:
            raise ParameterError(f"archive needs m >= 1 and n >= 1, got m={m}, n={n}")
        if T < 1:
            raise ParameterError(f"distance threshold T must be >= 1, got {T}")
        self.m = m
        self.n = n
        self.T = T
        self.q = np.zeros((m, n))
        self.t = np.zeros(m, dtype=np.int64)
        self.v = np.arange(m)

    @classmethod
    def from_vectors(cls, q, T: int = 1) -> "DirectionArchive":
        """Archive holding ``q[0], ..., q[m-1]`` in logical order (last = newest)."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        a = cls(q.shape[0], q.shape[1], T)
        a.q[:] = q
        a.t[:] = np.arange(1, a.m + 1)
        return a

    def logical_vectors(self) -> np.ndarray:
        """Direction vectors ordered by logical position."""
        return self.q[self.v]

    def logical_timestamps(self) -> np.ndarray:
        return self.t[self.v]

    def newest(self) -> np.ndarray:
        return self.q[self.v[-1]]

    def physical_index(self, j):
        """Map failure counts ``j`` (scalar or array) to physical slots ``v[m-1 - j % m]``."""
        return self.v[self.m - 1 - np.mod(j, self.m)]

    def select_physical_index(self, rng: RngStream, c_a: float, size=None):
        """Draw slot indexes; newer paths are favoured geometrically with rate ``c_a``."""
        return self.physical_index(geometric(rng, c_a, size=size))

    def replacement_position(self) -> int:
        """Logical position evicted by the next update."""
        if self.m == 1:
            return 0
        ts = self.t[self.v]
        gaps = ts[1:] - ts[:-1]
        k = int(np.argmin(gaps))  # first minimum wins ties
        if gaps[k] >= self.T:
            return 0
        return k + 1

    def update(self, new_path: np.ndarray, g: int) -> None:
        """Store the evolution path produced at generation ``g``."""
        new_path = np.asarray(new_path, dtype=float)
        if new_path.shape != (self.n,):
            raise ParameterError(f"path must have shape ({self.n},), got {new_path.shape}")
        k = self.replacement_position()
        slot = self.v[k]
        self.v[k:-1] = self.v[k + 1:].copy()
        self.v[-1] = slot
        self.q[slot] = new_path
        self.t[slot] = g + 1
