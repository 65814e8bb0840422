"""The mixture-model evolution strategy.

A (mu, lambda) evolution strategy whose mutation vectors come from the fast
mixture sampler, whose direction vectors are the archived evolution paths,
and whose step size follows the paired-test rule.  ``run_with_restarts`` adds
the stagnation-triggered restarts with doubled population and damping.
"""
from __future__ import annotations

import enum
import math
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .archive import DirectionArchive
from .errors import NumericalError, ObjectiveError, ParameterError
from .fms import BaseDistribution, MixtureParams, sample_mutations, sample_target
from .pta import PtaState, RecombinationWeights, success_metric, update_sigma, update_w
from .rand import RngStream, uniform_vector

STAGNATION_TOL = 1e-8


class Status(enum.Enum):
    TARGET_REACHED = "TargetReached"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    STAGNATED = "Stagnated"


@dataclass(frozen=True)
class MmesConfig:
    n: int
    lam: int
    mu: int
    m: int
    c_a: float
    c_c: float
    T: int
    l: int = 4
    c_sigma: float = 0.3
    d_sigma: float = 1.0
    alpha_z: float = 0.05
    base: BaseDistribution = BaseDistribution.GAUSSIAN
    max_fes: int = 10**8
    target_f: float = 1e-8
    sigma0: float = 3.0
    init_lo: float = -5.0
    init_hi: float = 5.0
    # step-size update reads W before (False) or after (True) this generation's smoothing
    sigma_uses_new_w: bool = False
    # "fms" mixture sampling, or "target" for exact N(0, C_a) draws (O(nm) per sample)
    sampler: str = "fms"
    stagnation_window: Optional[int] = None

    def __post_init__(self):
        if self.lam < 2 or not 1 <= self.mu <= self.lam:
            raise ParameterError(f"need lam >= 2 and 1 <= mu <= lam, got lam={self.lam}, mu={self.mu}")
        if self.sampler not in ("fms", "target"):
            raise ParameterError(f"sampler must be 'fms' or 'target', got {self.sampler!r}")
        if self.max_fes <= 0:
            raise ParameterError(f"max_fes must be positive, got {self.max_fes}")
        object.__setattr__(self, "base", BaseDistribution.parse(self.base))
        MixtureParams(self.l, self.c_a, self.m)

    @property
    def gamma(self) -> float:
        return self.mixture.gamma

    @property
    def mixture(self) -> MixtureParams:
        return MixtureParams(self.l, self.c_a, self.m)

    @property
    def weights(self) -> RecombinationWeights:
        return RecombinationWeights.log_decreasing(self.mu)

    @property
    def window(self) -> int:
        return self.n if self.stagnation_window is None else self.stagnation_window

    def with_population(self, lam: int) -> "MmesConfig":
        return replace(self, lam=lam, mu=lam // 2)

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["base"] = self.base.value
        d["gamma"] = self.gamma
        return d


def default_config(n: int, **overrides) -> MmesConfig:
    """Default parameter setting for dimension ``n``; keyword overrides win.

    Overriding ``lam`` without ``mu`` sets ``mu = lam // 2``.
    """
    if n < 4:
        raise ParameterError(f"dimension must be >= 4, got {n}")
    lam = overrides.pop("lam", 4 + int(math.floor(3 * math.log(n))))
    mu = overrides.pop("mu", lam // 2)
    c_c = overrides.pop("c_c", 0.4 / math.sqrt(n))
    return MmesConfig(
        n=n,
        lam=lam,
        mu=mu,
        m=overrides.pop("m", 2 * math.ceil(math.sqrt(n))),
        c_a=overrides.pop("c_a", 4.0 / n),
        c_c=c_c,
        T=overrides.pop("T", math.ceil(1.0 / c_c)),
        **overrides,
    )


@dataclass
class EsState:
    mean: np.ndarray
    sigma: float
    path: np.ndarray
    pta: PtaState
    archive: DirectionArchive
    g: int = 0
    fes: int = 0
    prev_sorted_f: Optional[np.ndarray] = None
    best_f: float = math.inf
    best_x: Optional[np.ndarray] = None
    eval_seconds: float = 0.0


def init_state(cfg: MmesConfig, rng: RngStream, init_mean=None) -> EsState:
    if init_mean is None:
        mean = uniform_vector(rng, cfg.n, cfg.init_lo, cfg.init_hi)
    else:
        mean = np.array(init_mean, dtype=float)
        if mean.shape != (cfg.n,):
            raise ParameterError(f"initial mean must have shape ({cfg.n},), got {mean.shape}")
    return EsState(
        mean=mean,
        sigma=float(cfg.sigma0),
        path=np.zeros(cfg.n),
        pta=PtaState(0.0, cfg.c_sigma, cfg.d_sigma, cfg.alpha_z),
        archive=DirectionArchive(cfg.m, cfg.n, cfg.T),
    )


@dataclass(frozen=True)
class GenerationSummary:
    g: int
    fes: int
    gen_best_f: float
    sigma: float
    W: float
    # 1-based position (sampling order) of the first offspring below the target
    hit_offset: Optional[int]


def _sample(cfg: MmesConfig, state: EsState, rng: RngStream) -> np.ndarray:
    mix = cfg.mixture
    if cfg.sampler == "target":
        return sample_target(mix, state.archive.logical_vectors(), rng, cfg.lam)
    return sample_mutations(mix, state.archive, rng, cfg.lam, cfg.base)


def step(state: EsState, cfg: MmesConfig, prob: Callable, rng: RngStream,
         weights: Optional[RecombinationWeights] = None) -> GenerationSummary:
    """One generation: sample, evaluate, recombine, cumulate, archive, adapt sigma."""
    w = cfg.weights if weights is None else weights
    z = _sample(cfg, state, rng)
    x = state.mean + state.sigma * z

    t0 = time.perf_counter()
    f = np.asarray(prob(x), dtype=float).reshape(cfg.lam)
    state.eval_seconds += time.perf_counter() - t0
    if not np.all(np.isfinite(f)):
        bad = int(np.flatnonzero(~np.isfinite(f))[0])
        raise ObjectiveError(
            f"objective returned {f[bad]!r} at generation {state.g}, offspring {bad}")

    order = np.argsort(f, kind="stable")
    f_sorted = f[order]
    if f_sorted[0] < state.best_f:
        state.best_f = float(f_sorted[0])
        state.best_x = x[order[0]].copy()

    hits = np.flatnonzero(f < cfg.target_f)
    hit_offset = int(hits[0]) + 1 if hits.size else None

    new_mean = w.omega @ x[order[:w.mu]]
    c_c = cfg.c_c
    state.path = (1.0 - c_c) * state.path + \
        math.sqrt(c_c * (2.0 - c_c) * w.mu_eff) * (new_mean - state.mean) / state.sigma
    state.mean = new_mean
    state.archive.update(state.path, state.g)

    if state.prev_sorted_f is not None:
        L = success_metric(state.prev_sorted_f, f_sorted, w)
        old_w = update_w(state.pta, L, w)
        state.sigma = update_sigma(state.sigma, state.pta,
                                   W=state.pta.W if cfg.sigma_uses_new_w else old_w)
        if not (state.sigma > 0.0 and math.isfinite(state.sigma)):
            raise NumericalError(f"mutation strength left (0, inf): {state.sigma!r}")
    state.prev_sorted_f = f_sorted

    state.g += 1
    state.fes += cfg.lam
    return GenerationSummary(state.g - 1, state.fes, float(f_sorted[0]), state.sigma,
                             state.pta.W, hit_offset)


@dataclass
class RunTrace:
    """Per-generation records ``(generation, fes, best_f, sigma, W)``.

    ``best_f`` is the best value seen so far over the whole run, including
    earlier restarts.
    """

    records: list = field(default_factory=list)
    status: Optional[Status] = None
    fes: int = 0
    fes_to_target: Optional[int] = None
    best_f: float = math.inf
    best_x: Optional[np.ndarray] = None
    restarts: int = 0
    # (generation, fes, lam, d_sigma) at the start of every instance
    instances: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        idx = ("generation", "fes", "best_f", "sigma", "W").index(name)
        return np.array([r[idx] for r in self.records])


def _drive(cfg: MmesConfig, prob: Callable, rng: RngStream, init_mean, restarts: bool,
           trace_every: int, stop_on_stagnation: bool) -> RunTrace:
    if trace_every < 1:
        raise ParameterError(f"trace_every must be >= 1, got {trace_every}")
    trace = RunTrace()
    inst_cfg = cfg
    g_total = 0
    mean0 = init_mean
    while True:
        state = init_state(inst_cfg, rng, mean0)
        mean0 = None  # restarts draw a fresh mean
        weights = inst_cfg.weights
        trace.instances.append((g_total, trace.fes, inst_cfg.lam, inst_cfg.d_sigma))
        history = deque(maxlen=inst_cfg.window + 1)
        stagnated = False
        while True:
            s = step(state, inst_cfg, prob, rng, weights)
            g_total += 1
            trace.fes += inst_cfg.lam
            if state.best_f < trace.best_f:
                trace.best_f = state.best_f
                trace.best_x = state.best_x
            done = False
            if s.hit_offset is not None:
                trace.fes_to_target = trace.fes - inst_cfg.lam + s.hit_offset
                trace.status = Status.TARGET_REACHED
                done = True
            elif trace.fes >= cfg.max_fes:
                trace.status = Status.BUDGET_EXHAUSTED
                done = True
            elif restarts or stop_on_stagnation:
                history.append(state.best_f)
                if len(history) == history.maxlen and history[0] - history[-1] < STAGNATION_TOL:
                    stagnated = True
            if done or stagnated or (g_total - 1) % trace_every == 0:
                trace.records.append((g_total - 1, trace.fes, trace.best_f, s.sigma, s.W))
            if done or stagnated:
                break
        if done:
            return trace
        if not restarts:
            trace.status = Status.STAGNATED
            return trace
        trace.restarts += 1
        inst_cfg = replace(inst_cfg.with_population(2 * inst_cfg.lam),
                           d_sigma=2.0 * inst_cfg.d_sigma)


def run(cfg: MmesConfig, prob: Callable, rng: RngStream, init_mean=None,
        trace_every: int = 1, stop_on_stagnation: bool = False) -> RunTrace:
    """Iterate ``step`` until the target is hit or the budget is spent.

    A generation is never split, so the final ``fes`` may exceed ``max_fes``
    by less than one population.
    """
    return _drive(cfg, prob, rng, init_mean, False, trace_every, stop_on_stagnation)


def run_with_restarts(cfg: MmesConfig, prob: Callable, rng: RngStream, init_mean=None,
                      trace_every: int = 1) -> RunTrace:
    """``run`` plus restarts whenever the instance's best value improved by less
    than 1e-8 over its last ``n`` generations.  Each restart starts a fresh
    state at a new uniform mean with ``lam``, ``mu`` and ``d_sigma`` doubled."""
    return _drive(cfg, prob, rng, init_mean, True, trace_every, False)
