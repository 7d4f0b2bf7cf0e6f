"""Measuring solution quality: exploitability, classifier indifference, mode coverage.

Also hosts the single-GAN baseline (one generator and one classifier trained
by alternating gradient steps) that PNM solutions are compared against.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from gangs.game import COL, ROW, MixedStrategy, PayoffMatrix, best_pure_response
from gangs.gang import (
    GangSpec, MixtureStrategy, RbbrConfig, _uniform_box, classifier_objective,
    generator_objective, mixture_uc_on_samples, mixture_ug_on_samples, rbbr_classifier,
    rbbr_generator)
from gangs.neural import Architecture, MlpNet, init_random, param_count
from gangs.rng import derive_seed, make_rng
from gangs.tasks import GaussianMixtureTask, mode_coverage, sample_real

INDIFFERENCE_BAND = (0.4, 0.6)


@dataclass(frozen=True)
class AttackConfig:
    attacker_gen_arch: Architecture
    attacker_clf_arch: Architecture
    rbbr: RbbrConfig = field(default_factory=RbbrConfig)
    n_restarts: int = 3
    eval_samples: int = 10_000

    def __post_init__(self):
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")

    @classmethod
    def matching(cls, spec: GangSpec, rbbr: RbbrConfig | None = None, n_restarts=3):
        """Attackers with the defender's architectures."""
        return cls(spec.gen_arch, spec.clf_arch, rbbr or RbbrConfig(), n_restarts)

    @property
    def param_counts(self):
        return param_count(self.attacker_gen_arch), param_count(self.attacker_clf_arch)


def mixture_param_count(mix: MixtureStrategy) -> int:
    """Parameters of all networks in the support of ``mix``."""
    return sum(param_count(net.arch) for _, _, net in mix.active())


def exploitability(mu_g: MixtureStrategy, mu_c: MixtureStrategy, spec: GangSpec,
                   atk: AttackConfig, seed):
    """Payoff fixed-budget attackers extract from the profile ``(mu_g, mu_c)``.

    Returns ``(expl, g_term, c_term)`` where ``g_term`` is the best u_G any of
    the generator attacks obtains against ``mu_c`` and ``c_term`` the best u_C
    of the classifier attacks against ``mu_g``.  Restart ``r`` always uses the
    same seeds, so adding restarts can only raise the terms.  The result is
    not floored at zero.
    """
    attack_spec = replace(spec, gen_arch=atk.attacker_gen_arch, clf_arch=atk.attacker_clf_arch)
    rng = make_rng(seed, "exploit_eval")
    real = spec.sample_real(atk.eval_samples, rng)
    latents = spec.sample_latent(atk.eval_samples, rng)
    g_term = c_term = -np.inf
    for r in range(atk.n_restarts):
        g_att = rbbr_generator(mu_c, attack_spec, atk.rbbr.with_seed(derive_seed(seed, "attack_g", r)))
        c_att = rbbr_classifier(mu_g, attack_spec, atk.rbbr.with_seed(derive_seed(seed, "attack_c", r)))
        g_term = max(g_term, mixture_ug_on_samples(g_att, mu_c, real, latents, spec.phi))
        c_term = max(c_term, mixture_uc_on_samples(mu_g, c_att, real, latents, spec.phi))
    return float(g_term + c_term), float(g_term), float(c_term)


def matrix_exploitability(U: PayoffMatrix, row: MixedStrategy, col: MixedStrategy):
    """Exact-oracle analogue of :func:`exploitability` on a finite matrix game."""
    _, g_term = best_pure_response(U, col, ROW)
    _, c_term = best_pure_response(U, row, COL)
    return g_term + c_term, g_term, c_term


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 200
    ny: int = 200

    @classmethod
    def around(cls, task: GaussianMixtureTask, inflate=0.2, nx=200, ny=200):
        lo, hi = task.bounds(inflate)
        return cls(lo[0], hi[0], lo[1], hi[1], nx, ny)

    def axes(self):
        return np.linspace(self.x_min, self.x_max, self.nx), np.linspace(self.y_min, self.y_max, self.ny)

    def points(self):
        xs, ys = self.axes()
        X, Y = np.meshgrid(xs, ys)
        return np.column_stack([X.ravel(), Y.ravel()])


def classifier_response_surface(mu_c: MixtureStrategy, grid: GridSpec) -> np.ndarray:
    """Mixture output on the lattice; row ``i`` is the ``i``-th y value."""
    values = mu_c.classify(grid.points()).reshape(grid.ny, grid.nx)
    return np.clip(values, 0.0, 1.0)


def indifference_stat(mu_c: MixtureStrategy, task: GaussianMixtureTask, n: int, seed,
                      band=INDIFFERENCE_BAND):
    """Mean mixture output on ``n`` real samples and the fraction inside ``band``."""
    out = mu_c.classify(sample_real(task, n, seed))
    lo, hi = band
    return float(out.mean()), float(np.mean((out >= lo) & (out <= hi)))


def generator_coverage(mu_g: MixtureStrategy, spec: GangSpec, task: GaussianMixtureTask,
                       n=10_000, seed=0, **kwargs):
    rng = make_rng(seed, "coverage")
    fake = mu_g.generate(spec.sample_latent(n, rng), rng)
    return mode_coverage(task, fake, **kwargs)


def train_gan_baseline(spec: GangSpec, cfg_g: RbbrConfig, cfg_c: RbbrConfig,
                       steps_g: int, steps_c: int, seed):
    """A single generator/classifier pair trained by alternating steps.

    Uses the same payoff, optimizers, batch sizes and uniform fake data as the
    PNM best responses.  Classifier and generator steps are interleaved as
    evenly as the two budgets allow, classifier first.
    """
    G = init_random(spec.gen_arch, derive_seed(seed, "baseline_init_g")).params.copy()
    C = init_random(spec.clf_arch, derive_seed(seed, "baseline_init_c")).params.copy()
    opt_g, opt_c = cfg_g.make_optimizer(), cfg_c.make_optimizer()
    rng = make_rng(seed, "baseline_batches")
    total = steps_g + steps_c
    done_g = done_c = 0
    for _ in range(total):
        # keep done_c / steps_c ahead of done_g / steps_g
        if done_c < steps_c and (done_g >= steps_g or done_c * steps_g <= done_g * steps_c):
            real = spec.sample_real(cfg_c.batch_size, rng)
            gen = MlpNet(spec.gen_arch, G)
            fake = gen(spec.sample_latent(cfg_c.batch_size, rng))
            if cfg_c.uniform_fake:
                fake = np.vstack([fake, _uniform_box(np.vstack([real, fake]), cfg_c.batch_size, rng)])
            _, grad = classifier_objective(C, spec.clf_arch, real, fake, spec.phi)
            C = opt_c.step(C, -grad)
            done_c += 1
        else:
            clf = MixtureStrategy.single(MlpNet(spec.clf_arch, C))
            z = spec.sample_latent(cfg_g.batch_size, rng)
            _, grad = generator_objective(G, spec.gen_arch, z, clf, spec.phi)
            G = opt_g.step(G, -grad)
            done_g += 1
    return MlpNet(spec.gen_arch, G), MlpNet(spec.clf_arch, C)


def baseline_budget(pnm_iterations: int, steps_g: int, steps_c: int):
    """Generator and classifier step totals spent by a fixed-iteration PNM run.

    PNM trains one classifier during initialization and one best response per
    player in every iteration.
    """
    return pnm_iterations * steps_g, (pnm_iterations + 1) * steps_c


def baseline_spec(spec: GangSpec, task: GaussianMixtureTask, target_params: int) -> GangSpec:
    """``spec`` with both players' hidden layers widened until G and C together
    have at least ``target_params`` parameters (depth is kept)."""
    depth_g = len(spec.gen_arch.layer_sizes) - 2
    depth_c = len(spec.clf_arch.layer_sizes) - 2
    width = max(spec.gen_arch.layer_sizes[1], spec.clf_arch.layer_sizes[1])
    while True:
        wide = GangSpec.for_task(task, spec.latent_dim, (width,) * depth_g, (width,) * depth_c, spec.phi)
        if param_count(wide.gen_arch) + param_count(wide.clf_arch) >= target_params:
            return wide
        width += 1


def write_surface_csv(path, grid: GridSpec, values):
    xs, ys = grid.axes()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "value"])
        for i, y in enumerate(ys):
            for j, x in enumerate(xs):
                w.writerow([f"{x:.6g}", f"{y:.6g}", f"{values[i, j]:.6g}"])


def read_surface_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    grid = GridSpec(xs[0], xs[-1], ys[0], ys[-1], len(xs), len(ys))
    values = np.empty((len(ys), len(xs)))
    values[np.searchsorted(ys, data[:, 1]), np.searchsorted(xs, data[:, 0])] = data[:, 2]
    return grid, values


def write_scatter_csv(path, real, fake):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "label"])
        for label, pts in (("real", real), ("fake", fake)):
            for x, y in pts:
                w.writerow([f"{x:.6g}", f"{y:.6g}", label])


def read_scatter_csv(path):
    real, fake = [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            (real if row["label"] == "real" else fake).append((float(row["x"]), float(row["y"])))
    return np.array(real).reshape(-1, 2), np.array(fake).reshape(-1, 2)


def write_history_csv(path, history):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "u_brs_g", "u_brs_c", "u_brs", "accepted", "value"])
        for h in history:
            w.writerow([h.iteration, repr(h.u_brs_g), repr(h.u_brs_c), repr(h.u_brs),
                        int(h.accepted), repr(h.value)])
