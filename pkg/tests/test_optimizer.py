import math

import numpy as np
import pytest

from mmes.errors import ObjectiveError, ParameterError
from mmes.fms import sample_mutations
from mmes.optimizer import (Status, default_config, init_state, run, run_with_restarts, step)
from mmes.problems import Problem, parse_problem
from mmes.rand import make_rng


def constant(x):
    return np.ones(len(x))


def test_default_config_n1000():
    cfg = default_config(1000)
    assert (cfg.lam, cfg.mu, cfg.m, cfg.T, cfg.l) == (24, 12, 64, 80, 4)
    assert cfg.c_a == pytest.approx(0.004)
    assert cfg.c_c == pytest.approx(0.4 / math.sqrt(1000))
    assert (cfg.c_sigma, cfg.d_sigma, cfg.alpha_z, cfg.sigma0) == (0.3, 1.0, 0.05, 3.0)


def test_default_config_n100():
    cfg = default_config(100)
    assert (cfg.lam, cfg.mu, cfg.m, cfg.T) == (17, 8, 20, 25)


def test_default_config_overrides():
    cfg = default_config(64, lam=30, l=2)
    assert (cfg.lam, cfg.mu, cfg.l) == (30, 15, 2)
    with pytest.raises(ParameterError):
        default_config(3)
    with pytest.raises(ParameterError):
        default_config(64, sampler="exact")


def test_step_counts_evaluations_and_generations():
    cfg = default_config(20)
    prob = Problem("sphere", 20)
    rng = make_rng(0)
    state = init_state(cfg, rng)
    for g in range(5):
        s = step(state, cfg, prob, rng)
        assert s.g == g
        assert state.fes == (g + 1) * cfg.lam
    assert state.g == 5


def test_sigma_untouched_in_first_generation():
    cfg = default_config(10)
    rng = make_rng(1)
    state = init_state(cfg, rng)
    step(state, cfg, Problem("sphere", 10), rng)
    assert state.sigma == cfg.sigma0
    assert state.pta.W == 0.0


def test_initial_mean_uniform_box():
    cfg = default_config(500)
    state = init_state(cfg, make_rng(2))
    assert np.all(np.abs(state.mean) <= 5.0)
    assert abs(state.mean.var() - 100 / 12) < 1.5


def test_unreachable_target_spends_budget():
    cfg = default_config(10, target_f=-math.inf, max_fes=500)
    tr = run(cfg, Problem("sphere", 10), make_rng(0))
    assert tr.status is Status.BUDGET_EXHAUSTED
    assert tr.fes_to_target is None
    assert 500 <= tr.fes < 500 + cfg.lam


def test_budget_of_one_generation():
    cfg = default_config(10, max_fes=default_config(10).lam)
    tr = run(cfg, Problem("sphere", 10), make_rng(0))
    assert len(tr.records) == 1 and tr.fes == cfg.lam


def test_runs_are_deterministic():
    cfg = default_config(16, max_fes=3000)
    a = run(cfg, Problem("elli", 16), make_rng(5))
    b = run(cfg, Problem("elli", 16), make_rng(5))
    assert a.records == b.records
    np.testing.assert_array_equal(a.best_x, b.best_x)


def test_best_so_far_is_monotone():
    tr = run(default_config(16, max_fes=5000), Problem("rosen", 16), make_rng(3))
    best = tr.column("best_f")
    assert np.all(np.diff(best) <= 0)
    assert np.all(tr.column("sigma") > 0)


def test_sphere_reaches_target():
    tr = run(default_config(16), Problem("sphere", 16), make_rng(4))
    assert tr.status is Status.TARGET_REACHED
    assert tr.best_f < 1e-8
    assert tr.fes - tr.fes_to_target < default_config(16).lam


def test_fes_to_target_is_exact_offspring_index():
    target = 5.0
    cfg = default_config(8, target_f=target)
    prob = Problem("sphere", 8)
    tr = run(cfg, prob, make_rng(8))
    # replay the same stream and locate the first offspring below the target
    rng = make_rng(8)
    state = init_state(cfg, rng)
    count = 0
    while True:
        sigma, mean = state.sigma, state.mean.copy()
        snapshot = rng.bit_generator.state
        z = sample_mutations(cfg.mixture, state.archive, rng, cfg.lam)
        f = prob(mean + sigma * z)
        rng.bit_generator.state = snapshot
        step(state, cfg, prob, rng)
        hits = np.flatnonzero(f < target)
        if hits.size:
            assert tr.fes_to_target == count + hits[0] + 1
            break
        count += cfg.lam


def test_nonfinite_objective_raises():
    def bad(x):
        f = np.sum(x ** 2, axis=1)
        f[1] = np.nan
        return f

    with pytest.raises(ObjectiveError):
        run(default_config(8), bad, make_rng(0))


def test_mean_shift_unbiased_under_random_fitness():
    n = 10
    cfg = default_config(n)
    shifts = []
    for seed in range(2000):
        rng = make_rng(seed)
        state = init_state(cfg, rng, init_mean=np.zeros(n))
        noise = make_rng(seed, 9)
        step(state, cfg, lambda x: noise.random(len(x)), rng)
        shifts.append(state.mean)
    shifts = np.array(shifts)
    se = shifts.std(axis=0) / math.sqrt(len(shifts))
    assert np.all(np.abs(shifts.mean(axis=0)) < 4 * se)


def test_first_generation_improves_far_from_optimum():
    n = 30
    cfg = default_config(n)
    prob = Problem("sphere", n)
    wins = 0
    for seed in range(200):
        rng = make_rng(seed)
        mean0 = np.full(n, 100.0)
        state = init_state(cfg, rng, init_mean=mean0)
        step(state, cfg, prob, rng)
        wins += prob(state.mean) < prob(mean0)
    assert wins >= 190


def test_constant_objective_stagnates_after_window():
    n = 8
    cfg = default_config(n)
    tr = run(cfg, constant, make_rng(0), stop_on_stagnation=True)
    assert tr.status is Status.STAGNATED
    assert tr.fes == (n + 1) * cfg.lam


def test_restart_schedule_doubles_population_and_damping():
    n = 8
    cfg0 = default_config(n)
    lam0 = cfg0.lam
    g = n + 1
    budget = g * lam0 + g * 2 * lam0 + 1
    tr = run_with_restarts(default_config(n, max_fes=budget), constant, make_rng(0))
    assert tr.restarts == 2
    assert tr.instances == [(0, 0, lam0, 1.0), (g, g * lam0, 2 * lam0, 2.0),
                            (2 * g, 3 * g * lam0, 4 * lam0, 4.0)]
    assert tr.status is Status.BUDGET_EXHAUSTED


def test_restart_draws_fresh_mean():
    n = 8
    seen = []

    def spy(x):
        seen.append(x.mean(axis=0))
        return np.ones(len(x))

    run_with_restarts(default_config(n, max_fes=(n + 2) * default_config(n).lam), spy, make_rng(1))
    assert not np.allclose(seen[0], seen[n + 1], atol=1.0)


def test_sphere_needs_no_restart():
    tr = run_with_restarts(default_config(32), Problem("sphere", 32), make_rng(2))
    assert tr.status is Status.TARGET_REACHED
    assert tr.restarts == 0


def test_restarts_on_multimodal_objective():
    # multimodal callable: restarts must terminate cleanly
    def rastrigin(x):
        return 10 * x.shape[1] + np.sum(x ** 2 - 10 * np.cos(2 * np.pi * x), axis=1)

    tr = run_with_restarts(default_config(8, max_fes=20000), rastrigin, make_rng(3))
    assert tr.status in (Status.TARGET_REACHED, Status.BUDGET_EXHAUSTED)
    assert np.all(np.diff(tr.column("best_f")) <= 0)


@pytest.mark.parametrize("base", ["gaussian", "student-t", "rademacher"])
def test_bases_solve_sphere(base):
    tr = run(default_config(16, base=base), Problem("sphere", 16), make_rng(6))
    assert tr.status is Status.TARGET_REACHED


def test_exact_target_sampler_solves_sphere():
    tr = run(default_config(16, sampler="target"), Problem("sphere", 16), make_rng(7))
    assert tr.status is Status.TARGET_REACHED


def test_new_w_variant_runs():
    tr = run(default_config(16, sigma_uses_new_w=True), Problem("sphere", 16), make_rng(7))
    assert tr.status is Status.TARGET_REACHED


def test_rotated_problem_solved():
    prob = parse_problem("elli:rot=1", dim=16, rng=make_rng(0, 1))
    tr = run(default_config(16), prob, make_rng(0))
    assert tr.status is Status.TARGET_REACHED


def test_trace_every_thins_records():
    cfg = default_config(16, max_fes=2000)
    full = run(cfg, Problem("sphere", 16), make_rng(0))
    thin = run(cfg, Problem("sphere", 16), make_rng(0), trace_every=10)
    assert thin.records[0] == full.records[0]
    assert thin.records[-1] == full.records[-1]
    assert set(thin.records) <= set(full.records)
    with pytest.raises(ParameterError):
        run(cfg, Problem("sphere", 16), make_rng(0), trace_every=0)
