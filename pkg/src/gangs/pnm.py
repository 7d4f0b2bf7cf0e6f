"""Parallel Nash Memory.

Each iteration asks both players for a best response against the other's
current equilibrium mixture of the subgame, tests whether the pair improves
on that mixture (``u_brs = u_G(g_new, mu_C) + u_C(mu_G, c_new) > 0``), and if
so appends both strategies, extends the payoff matrix by one row and one
column, and re-solves the subgame by linear programming.  Strategies are never
removed.

The same loop runs with two kinds of oracles: :class:`GangOracle` trains
resource-bounded best responses for the generator/classifier game, and
:class:`MatrixOracle` returns exact pure best responses of a known finite
matrix game, which turns PNM into the double oracle method.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from gangs.game import COL, ROW, MixedStrategy, PayoffMatrix, best_pure_response
from gangs.gang import (
    GangSpec, MixtureStrategy, RbbrConfig, mixture_uc_on_samples, mixture_ug_on_samples,
    rbbr_classifier, rbbr_generator)
from gangs.lp import GameSolution, solve_zero_sum
from gangs.neural import forward_cached, init_random
from gangs.rng import derive_seed, make_rng

DETERMINISTIC_STOP = "deterministic_stop"
FIXED_ITERATIONS = "fixed_iterations"


class PnmError(RuntimeError):
    pass


@dataclass(frozen=True)
class PnmConfig:
    """``iterations`` is N in fixed-iteration mode and the safety cap otherwise."""

    mode: str = FIXED_ITERATIONS
    iterations: int = 30
    rbbr_g: RbbrConfig = field(default_factory=RbbrConfig)
    rbbr_c: RbbrConfig = field(default_factory=RbbrConfig)
    eval_samples: int = 10_000
    master_seed: int = 0
    rb_ne_tolerance: float = 0.05
    jobs: int = 1

    def __post_init__(self):
        if self.mode not in (DETERMINISTIC_STOP, FIXED_ITERATIONS):
            raise PnmError(f"unknown mode {self.mode!r}")
        if self.iterations < 1:
            raise PnmError("iterations must be >= 1")
        if self.rb_ne_tolerance < 0:
            raise PnmError("rb_ne_tolerance must be >= 0")
        if self.eval_samples < 1:
            raise PnmError("eval_samples must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    u_brs_g: float
    u_brs_c: float
    u_brs: float
    accepted: bool
    value: float
    seconds: float = 0.0


@dataclass
class PnmState:
    g_strats: list
    c_strats: list
    matrix: PayoffMatrix
    ne: GameSolution
    history: list = field(default_factory=list)
    iteration: int = 0
    terminated: bool = False
    # per-strategy evaluation caches, kept aligned with the strategy lists
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def mu_g(self) -> MixtureStrategy:
        return MixtureStrategy(self.g_strats, self.ne.row_strategy)

    @property
    def mu_c(self) -> MixtureStrategy:
        return MixtureStrategy(self.c_strats, self.ne.col_strategy)


class GangOracle:
    """RBBR oracles and Monte Carlo payoff estimates for a GANG.

    Matrix entries use common random numbers: one real sample set and one
    latent set, both derived from the master seed, shared by every entry so
    that entries are directly comparable and never need re-estimation.
    Acceptance tests use fresh samples for every iteration.
    """

    def __init__(self, spec: GangSpec, cfg: PnmConfig):
        self.spec = spec
        self.cfg = cfg
        rng = make_rng(cfg.master_seed, "matrix_samples")
        self.real = spec.sample_real(cfg.eval_samples, rng)
        self.latents = spec.sample_latent(cfg.eval_samples, rng)

    def initial(self):
        ms = self.cfg.master_seed
        g0 = init_random(self.spec.gen_arch, derive_seed(ms, "init_g"))
        c0 = rbbr_classifier(g0, self.spec, self.cfg.rbbr_c.with_seed(derive_seed(ms, "rbbr_c", 0)))
        return g0, c0

    def respond(self, state: PnmState, it: int, seeds=None):
        ms = self.cfg.master_seed
        seed_g, seed_c = seeds or (derive_seed(ms, "rbbr_g", it), derive_seed(ms, "rbbr_c", it))
        mu_g, mu_c = state.mu_g, state.mu_c
        if self.cfg.jobs > 1:
            with ThreadPoolExecutor(2) as pool:
                fg = pool.submit(rbbr_generator, mu_c, self.spec, self.cfg.rbbr_g.with_seed(seed_g))
                fc = pool.submit(rbbr_classifier, mu_g, self.spec, self.cfg.rbbr_c.with_seed(seed_c))
                return fg.result(), fc.result()
        g_new = rbbr_generator(mu_c, self.spec, self.cfg.rbbr_g.with_seed(seed_g))
        c_new = rbbr_classifier(mu_g, self.spec, self.cfg.rbbr_c.with_seed(seed_c))
        return g_new, c_new

    def test(self, state: PnmState, g_new, c_new, it: int, seed=None):
        rng = np.random.default_rng(
            derive_seed(self.cfg.master_seed, "test", it) if seed is None else seed)
        real = self.spec.sample_real(self.cfg.eval_samples, rng)
        latents = self.spec.sample_latent(self.cfg.eval_samples, rng)
        phi = self.spec.phi
        u_g = mixture_ug_on_samples(g_new, state.mu_c, real, latents, phi)
        u_c = mixture_uc_on_samples(state.mu_g, c_new, real, latents, phi)
        return u_g, u_c

    def is_new(self, strats, candidate):
        return True

    def _fake(self, state, i):
        fakes = state.cache.setdefault("fake", [])
        while len(fakes) <= i:
            fakes.append(forward_cached(state.g_strats[len(fakes)], self.latents)[0])
        return fakes[i]

    def _real_score(self, state, j):
        scores = state.cache.setdefault("real_score", [])
        while len(scores) <= j:
            c = state.c_strats[len(scores)]
            scores.append(self.spec.phi(forward_cached(c, self.real)[0][:, 0]).mean())
        return scores[j]

    def entries(self, state: PnmState, cells):
        """u_G estimates for the ``(row, col)`` cells of the current strategy lists."""
        # populate caches serially; the per-cell work below is read-only
        for i, j in cells:
            self._fake(state, i)
            self._real_score(state, j)

        def one(cell):
            i, j = cell
            c = state.c_strats[j]
            fake_score = self.spec.phi(forward_cached(c, state.cache["fake"][i])[0][:, 0]).mean()
            return -(state.cache["real_score"][j] - fake_score)

        if self.cfg.jobs > 1 and len(cells) > 1:
            with ThreadPoolExecutor(self.cfg.jobs) as pool:
                return list(pool.map(one, cells))
        return [one(cell) for cell in cells]


class MatrixOracle:
    """Exact best responses over the pure strategies of a known matrix game."""

    def __init__(self, full: PayoffMatrix):
        self.full = full if isinstance(full, PayoffMatrix) else PayoffMatrix(full)

    def lift(self, state: PnmState) -> GameSolution:
        row = np.zeros(self.full.rows)
        col = np.zeros(self.full.cols)
        np.add.at(row, state.g_strats, state.ne.row_strategy.probs)
        np.add.at(col, state.c_strats, state.ne.col_strategy.probs)
        return GameSolution(MixedStrategy(row), MixedStrategy(col), state.ne.value)

    def initial(self):
        col, _ = best_pure_response(self.full, MixedStrategy.pure(self.full.rows, 0), COL)
        return 0, col

    def respond(self, state, it, seeds=None):
        lifted = self.lift(state)
        g_new, _ = best_pure_response(self.full, lifted.col_strategy, ROW)
        c_new, _ = best_pure_response(self.full, lifted.row_strategy, COL)
        return g_new, c_new

    def test(self, state, g_new, c_new, it, seed=None):
        lifted = self.lift(state)
        u_g = float(self.full.entries[g_new] @ lifted.col_strategy.probs)
        u_c = -float(lifted.row_strategy.probs @ self.full.entries[:, c_new])
        return u_g, u_c

    def is_new(self, strats, candidate):
        return candidate not in strats

    def entries(self, state, cells):
        return [float(self.full.entries[state.g_strats[i], state.c_strats[j]]) for i, j in cells]


def _oracle_for(spec, cfg):
    if isinstance(spec, GangSpec):
        return GangOracle(spec, cfg)
    if isinstance(spec, (PayoffMatrix, MatrixOracle)):
        return spec if isinstance(spec, MatrixOracle) else MatrixOracle(spec)
    raise PnmError(f"cannot build an oracle for {type(spec).__name__}")


def _start(oracle) -> PnmState:
    g0, c0 = oracle.initial()
    state = PnmState([g0], [c0], PayoffMatrix([[0.0]]),
                     GameSolution(MixedStrategy([1.0]), MixedStrategy([1.0]), 0.0))
    entry = oracle.entries(state, [(0, 0)])[0]
    state.matrix = PayoffMatrix([[entry]])
    state.ne = solve_zero_sum(state.matrix)
    return state


def _step(state: PnmState, oracle, mode: str, accept_tol: float = 0.0) -> PnmState:
    started = time.perf_counter()
    it = state.iteration + 1
    g_new, c_new = oracle.respond(state, it)
    u_g, u_c = oracle.test(state, g_new, c_new, it)
    u_brs = u_g + u_c
    add_g = oracle.is_new(state.g_strats, g_new)
    add_c = oracle.is_new(state.c_strats, c_new)
    accepted = u_brs > accept_tol and (add_g or add_c)

    if accepted:
        old = state.matrix.entries
        n_rows, n_cols = old.shape
        if add_c:
            state.c_strats.append(c_new)
        if add_g:
            state.g_strats.append(g_new)
        rows, cols = len(state.g_strats), len(state.c_strats)
        cells = [(i, j) for i in range(rows) for j in range(cols) if i >= n_rows or j >= n_cols]
        values = oracle.entries(state, cells)
        grown = np.empty((rows, cols))
        grown[:n_rows, :n_cols] = old
        for (i, j), v in zip(cells, values):
            grown[i, j] = v
        state.matrix = PayoffMatrix(grown)
        state.ne = solve_zero_sum(state.matrix)
    elif mode == DETERMINISTIC_STOP:
        state.terminated = True

    state.iteration = it
    state.history.append(IterationRecord(
        it, float(u_g), float(u_c), float(u_brs), bool(accepted), float(state.ne.value),
        time.perf_counter() - started))
    return state


def pnm_init(spec, cfg: PnmConfig) -> PnmState:
    """One random generator, the classifier RBBR against it, and the 1x1 subgame."""
    return _start(_oracle_for(spec, cfg))


def pnm_iterate(state: PnmState, spec, cfg: PnmConfig, oracle=None) -> PnmState:
    """Run one PNM iteration in place and return the state."""
    if state.terminated:
        return state
    return _step(state, oracle or _oracle_for(spec, cfg), cfg.mode)


def run_pnm(spec: GangSpec, cfg: PnmConfig, callback=None) -> PnmState:
    """Initialize and iterate until termination or ``cfg.iterations`` iterations.

    ``callback(state)`` is invoked after initialization and after every
    iteration, e.g. to write checkpoints.
    """
    oracle = _oracle_for(spec, cfg)
    state = _start(oracle)
    if callback:
        callback(state)
    while not state.terminated and state.iteration < cfg.iterations:
        _step(state, oracle, cfg.mode)
        if callback:
            callback(state)
    return state


def solve_with_exact_oracles(full, tolerance: float = 1e-10, max_iterations=None) -> PnmState:
    """PNM on a known matrix game with exact pure best responses (double oracle)."""
    oracle = MatrixOracle(full)
    limit = max_iterations or (oracle.full.rows + oracle.full.cols)
    state = _start(oracle)
    while not state.terminated and state.iteration < limit:
        _step(state, oracle, DETERMINISTIC_STOP, accept_tol=tolerance)
    return state


def pnm_on_matrix(full, tolerance: float = 1e-10) -> GameSolution:
    """Final subgame solution of exact-oracle PNM, lifted to the full game."""
    oracle = MatrixOracle(full)
    return oracle.lift(solve_with_exact_oracles(oracle.full, tolerance))


def rb_ne_certificate(state: PnmState, spec, cfg: PnmConfig, fresh_attack_seeds):
    """Train one fresh best-response pair against the final mixtures.

    ``fresh_attack_seeds`` is a ``(generator_seed, classifier_seed)`` pair or a
    single integer from which both are derived; the test samples are derived
    from it as well.  Returns ``(u_brs_fresh, certified)`` with certification
    iff ``u_brs_fresh <= cfg.rb_ne_tolerance``.
    """
    oracle = _oracle_for(spec, cfg)
    if isinstance(fresh_attack_seeds, (tuple, list)):
        seed_g, seed_c = fresh_attack_seeds
    else:
        seed_g = derive_seed(fresh_attack_seeds, "certificate_g")
        seed_c = derive_seed(fresh_attack_seeds, "certificate_c")
    g_new, c_new = oracle.respond(state, state.iteration + 1, seeds=(seed_g, seed_c))
    u_g, u_c = oracle.test(state, g_new, c_new, state.iteration + 1,
                           seed=derive_seed(seed_g ^ seed_c, "certificate_test"))
    u = float(u_g + u_c)
    return u, u <= cfg.rb_ne_tolerance
