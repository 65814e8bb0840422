"""Basic unimodal benchmark objectives and their rotated variants.

All objectives accept either a single point of shape ``(n,)`` or a batch of
points of shape ``(k, n)`` (one point per row) and have global minimum 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericalError, ParameterError
from .rand import RngStream


def _weights_exponent(n: int) -> np.ndarray:
    # (i - 1) / (n - 1) for i = 1..n
    if n == 1:
        return np.zeros(1)
    return np.arange(n) / (n - 1)


def sphere(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


def ellipsoid(x: np.ndarray, alpha: float = 6.0) -> np.ndarray:
    w = 10.0 ** (alpha * _weights_exponent(x.shape[-1]))
    return np.sum(w * x * x, axis=-1)


def rosenbrock(x: np.ndarray) -> np.ndarray:
    a, b = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=-1)


def discus(x: np.ndarray) -> np.ndarray:
    return 1e6 * x[..., 0] ** 2 + np.sum(x[..., 1:] ** 2, axis=-1)


def cigar(x: np.ndarray) -> np.ndarray:
    return x[..., 0] ** 2 + 1e6 * np.sum(x[..., 1:] ** 2, axis=-1)


def different_powers(x: np.ndarray) -> np.ndarray:
    p = 2.0 + 4.0 * _weights_exponent(x.shape[-1])
    return np.sum(np.abs(x) ** p, axis=-1)


KINDS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sphere": sphere,
    "elli": ellipsoid,
    "rosen": rosenbrock,
    "discus": discus,
    "cigar": cigar,
    "diffpow": different_powers,
}

ALIASES = {
    "ellipsoid": "elli",
    "rosenbrock": "rosen",
    "differentpowers": "diffpow",
    "different_powers": "diffpow",
}


def gram_schmidt_rotation(rng: RngStream, n: int, max_retries: int = 3) -> np.ndarray:
    """Random orthogonal matrix from modified Gram-Schmidt on a Gaussian matrix.

    The columns of an ``n x n`` matrix with i.i.d. standard normal entries are
    orthonormalised left to right.  Each new unit column is projected out of
    all remaining columns immediately (the "modified" ordering), which keeps
    the loss of orthogonality at O(eps * cond) instead of O(eps * cond**2).
    """
    if n < 2:
        raise ParameterError(f"rotation dimension must be >= 2, got {n}")
    for _ in range(max_retries + 1):
        a = rng.standard_normal((n, n))
        scale = np.linalg.norm(a, axis=0)
        ok = True
        for k in range(n):
            norm = np.linalg.norm(a[:, k])
            if norm <= 1e-10 * scale[k]:
                ok = False
                break
            a[:, k] /= norm
            if k + 1 < n:
                a[:, k + 1:] -= np.outer(a[:, k], a[:, k] @ a[:, k + 1:])
        if ok:
            return a
    raise NumericalError(f"Gram-Schmidt hit a rank-deficient draw {max_retries + 1} times")


@dataclass(frozen=True, eq=False)
class Problem:
    """A benchmark objective of dimension ``dim``, optionally rotated.

    With a rotation matrix ``R`` the objective is ``f_base(R @ x)``.
    """

    kind: str
    dim: int
    alpha: float = 6.0
    rotation: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        kind = ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in KINDS:
            raise ParameterError(f"unknown problem kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.dim < 2:
            raise ParameterError(f"dim must be >= 2, got {self.dim}")
        if self.rotation is not None:
            r = np.asarray(self.rotation, dtype=float)
            if r.shape != (self.dim, self.dim):
                raise ParameterError(f"rotation must be {self.dim}x{self.dim}, got {r.shape}")
            r.setflags(write=False)
            object.__setattr__(self, "rotation", r)

    @property
    def rotated(self) -> bool:
        return self.rotation is not None

    @property
    def name(self) -> str:
        base = self.kind + (f"(alpha={self.alpha:g})" if self.kind == "elli" else "")
        return ("rot-" if self.rotated else "") + base

    @property
    def eval_cost(self) -> int:
        """Multiply-add count of one evaluation (the rotation dominates when present)."""
        return self.dim + (self.dim * self.dim if self.rotated else 0)

    def base_value(self, y: np.ndarray) -> np.ndarray:
        if self.kind == "elli":
            return ellipsoid(y, self.alpha)
        return KINDS[self.kind](y)

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim or x.ndim not in (1, 2):
            raise ParameterError(f"expected points of length {self.dim}, got shape {x.shape}")
        if self.rotation is not None:
            x = x @ self.rotation.T
        out = self.base_value(x)
        return float(out) if out.ndim == 0 else out

    def optimum(self) -> np.ndarray:
        """A global minimiser."""
        y = np.ones(self.dim) if self.kind == "rosen" else np.zeros(self.dim)
        return y if self.rotation is None else self.rotation.T @ y


def parse_problem(text: str, dim: Optional[int] = None, rng: Optional[RngStream] = None,
                  max_rotation_dim: int = 4096) -> Problem:
    """Build a problem from ``kind[:key=value]...``, e.g. ``elli:alpha=6:rot=1:dim=1000``.

    ``dim`` is used when the string carries no ``dim`` field.  A rotation needs
    ``rng``; dimensions above ``max_rotation_dim`` are refused because the
    dense matrix would not fit comfortably in memory.
    """
    kind, *fields = text.strip().split(":")
    opts: dict[str, str] = {}
    for f in fields:
        if "=" not in f:
            raise ParameterError(f"malformed problem field {f!r} in {text!r}")
        key, value = f.split("=", 1)
        opts[key.strip().lower()] = value.strip()
    unknown = set(opts) - {"alpha", "rot", "dim"}
    if unknown:
        raise ParameterError(f"unknown problem fields {sorted(unknown)} in {text!r}")
    if "dim" in opts:
        dim = int(opts["dim"])
    if dim is None:
        raise ParameterError(f"no dimension given for problem {text!r}")
    alpha = float(opts.get("alpha", 6.0))
    rot = opts.get("rot", "0").lower() in ("1", "true", "yes", "on")
    rotation = None
    if rot:
        if dim > max_rotation_dim:
            raise ParameterError(
                f"rotated problem with dim={dim} exceeds max rotation dim {max_rotation_dim}")
        if rng is None:
            raise ParameterError("a rotated problem needs a random stream")
        rotation = gram_schmidt_rotation(rng, dim)
    return Problem(kind, dim, alpha=alpha, rotation=rotation)
