from dataclasses import replace

import numpy as np
import pytest

from gangs.game import PayoffMatrix, StrategyProfile, epsilon_of_profile
from gangs.gang import GangSpec, RbbrConfig, payoff_on_samples
from gangs.lp import solve_zero_sum
from gangs.pnm import (
    DETERMINISTIC_STOP, FIXED_ITERATIONS, MatrixOracle, PnmConfig, PnmError, _start, _step,
    pnm_init, pnm_iterate, pnm_on_matrix, rb_ne_certificate, run_pnm, solve_with_exact_oracles)
from gangs.rng import make_rng
from gangs.tasks import make_task

RPS = [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]


def tiny_setup(mode=FIXED_ITERATIONS, iterations=4, seed=0, jobs=1):
    spec = GangSpec.for_task(make_task("grid9"), latent_dim=4, gen_hidden=(8,), clf_hidden=(8,))
    rb = RbbrConfig(steps=20, batch_size=32)
    cfg = PnmConfig(mode, iterations, rb, rb, eval_samples=400, master_seed=seed, jobs=jobs)
    return spec, cfg


@pytest.fixture(scope="module")
def tiny_run():
    spec, cfg = tiny_setup()
    snapshots = []
    state = run_pnm(spec, cfg, callback=lambda s: snapshots.append(s.matrix.entries.copy()))
    return spec, cfg, state, snapshots


def test_config_validation():
    with pytest.raises(PnmError):
        PnmConfig(mode="forever")
    with pytest.raises(PnmError):
        PnmConfig(iterations=0)
    with pytest.raises(PnmError):
        PnmConfig(rb_ne_tolerance=-1.0)


def test_saddle_start_terminates_immediately():
    state = solve_with_exact_oracles([[2.0, 3.0], [0.0, 1.0]])
    assert state.terminated and state.iteration == 1
    assert not state.history[0].accepted
    assert state.history[0].u_brs <= 0
    assert state.g_strats == [0] and state.c_strats == [0]
    assert state.ne.value == 2.0


def test_rock_paper_scissors():
    sol = pnm_on_matrix(RPS)
    assert abs(sol.value) < 1e-8
    assert epsilon_of_profile(PayoffMatrix(RPS), StrategyProfile(sol.row_strategy, sol.col_strategy)) <= 1e-8


@pytest.mark.parametrize("seed", range(20))
def test_random_games_match_full_lp(seed):
    U = np.random.default_rng(seed).normal(size=(12, 12))
    state = solve_with_exact_oracles(U)
    assert state.terminated and state.iteration <= 24
    full = solve_zero_sum(U)
    assert abs(state.ne.value - full.value) < 1e-8
    # a terminated exact-oracle run certifies an equilibrium of the full game
    lifted = pnm_on_matrix(U)
    assert epsilon_of_profile(PayoffMatrix(U), StrategyProfile(lifted.row_strategy, lifted.col_strategy)) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_dominant_row_visits_at_most_two_rows(seed):
    U = np.random.default_rng(seed).normal(size=(8, 6))
    k = 5
    U[k] = U.max(axis=0) + 1.0
    state = solve_with_exact_oracles(U)
    assert len(state.g_strats) <= 2 and k in state.g_strats
    assert abs(state.ne.value - U[k].min()) < 1e-12


def test_subgame_security_every_iteration():
    U = np.random.default_rng(3).normal(size=(10, 10))
    oracle = MatrixOracle(U)
    state = _start(oracle)
    while not state.terminated:
        _step(state, oracle, DETERMINISTIC_STOP)
        m = state.matrix
        assert epsilon_of_profile(m, StrategyProfile(state.ne.row_strategy, state.ne.col_strategy)) <= 1e-8
        assert m.entries.shape == (len(state.g_strats), len(state.c_strats))


def test_fixed_mode_discards_rejected_tests():
    cfg = PnmConfig(mode=FIXED_ITERATIONS, iterations=3)
    saddle = PayoffMatrix([[2.0, 3.0], [0.0, 1.0]])
    state = pnm_init(saddle, cfg)
    for _ in range(3):
        state = pnm_iterate(state, saddle, cfg)
    assert not state.terminated and state.iteration == 3
    assert [h.accepted for h in state.history] == [False] * 3
    assert state.matrix.entries.shape == (1, 1)


def test_pnm_init_shape_and_determinism():
    spec, cfg = tiny_setup()
    a = pnm_init(spec, cfg)
    b = pnm_init(spec, cfg)
    assert len(a.g_strats) == len(a.c_strats) == 1
    assert a.matrix.entries.shape == (1, 1)
    assert list(a.ne.row_strategy.probs) == [1.0] and list(a.ne.col_strategy.probs) == [1.0]
    assert a.g_strats[0].params.tobytes() == b.g_strats[0].params.tobytes()
    assert a.c_strats[0].params.tobytes() == b.c_strats[0].params.tobytes()
    assert a.matrix.entries.tobytes() == b.matrix.entries.tobytes()


def test_initial_entry_recomputed_independently():
    spec, cfg = tiny_setup()
    state = pnm_init(spec, cfg)
    rng = make_rng(cfg.master_seed, "matrix_samples")
    real = spec.sample_real(cfg.eval_samples, rng)
    fake = state.g_strats[0](spec.sample_latent(cfg.eval_samples, rng))
    expected = -payoff_on_samples(state.c_strats[0], real, fake, spec.phi)
    assert abs(state.matrix.entries[0, 0] - expected) < 1e-12


def test_append_only_growth(tiny_run):
    _, _, state, snapshots = tiny_run
    for rec, before, after in zip(state.history, snapshots[:-1], snapshots[1:]):
        if rec.accepted:
            assert after.shape == (before.shape[0] + 1, before.shape[1] + 1)
            assert after[:before.shape[0], :before.shape[1]].tobytes() == before.tobytes()
        else:
            assert after.tobytes() == before.tobytes()


def test_history_consistent(tiny_run):
    _, cfg, state, _ = tiny_run
    assert len(state.history) == cfg.iterations
    for h in state.history:
        assert h.u_brs == h.u_brs_g + h.u_brs_c
        assert h.accepted == (h.u_brs > 0)
    m = state.matrix
    assert epsilon_of_profile(m, StrategyProfile(state.ne.row_strategy, state.ne.col_strategy)) <= 1e-8


def test_runs_are_bitwise_reproducible(tiny_run):
    spec, cfg, state, _ = tiny_run
    again = run_pnm(spec, cfg)
    assert again.matrix.entries.tobytes() == state.matrix.entries.tobytes()
    assert [(h.u_brs_g, h.u_brs_c) for h in again.history] == \
        [(h.u_brs_g, h.u_brs_c) for h in state.history]


def test_parallel_jobs_do_not_change_results(tiny_run):
    spec, cfg, state, _ = tiny_run
    par = run_pnm(spec, replace(cfg, jobs=2))
    assert par.matrix.entries.tobytes() == state.matrix.entries.tobytes()


def test_deterministic_stop_respects_cap():
    spec, cfg = tiny_setup(mode=DETERMINISTIC_STOP, iterations=3)
    state = run_pnm(spec, cfg)
    assert state.iteration <= 3
    if state.terminated:
        assert not state.history[-1].accepted


def test_certificate_at_exact_equilibrium():
    cfg = PnmConfig(rb_ne_tolerance=1e-12)  # absorbs float round-off only
    state = solve_with_exact_oracles(RPS)
    u, ok = rb_ne_certificate(state, PayoffMatrix(RPS), cfg, 123)
    assert u <= 1e-12 and ok


def test_certificate_matches_sign_and_is_monotone(tiny_run):
    spec, cfg, state, _ = tiny_run
    results = {}
    for tol in (0.0, 0.05, 1.0, 100.0):
        u, ok = rb_ne_certificate(state, spec, replace(cfg, rb_ne_tolerance=tol), 77)
        assert ok == (u <= tol)
        results[tol] = (u, ok)
    us = {u for u, _ in results.values()}
    assert len(us) == 1  # the attack does not depend on the tolerance
    oks = [results[t][1] for t in sorted(results)]
    assert oks == sorted(oks)
    assert results[100.0][1]
