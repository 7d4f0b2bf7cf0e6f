"""Generative adversarial network games: payoffs and resource-bounded best responses.

The classifier's payoff against a generator is

    u_C(G, C) = E_{x ~ p_d}[phi(C(x))] - E_{z ~ p_z}[phi(C(G(z)))]

and the generator receives exactly ``-u_C``.  A resource-bounded best
response (RBBR) is a network trained from a seeded random initialization for
a fixed number of optimizer steps against the opponent's mixture; the step
budget is the resource bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from gangs.game import MixedStrategy
from gangs.neural import (
    Adam, Architecture, MlpNet, Sgd, backward_cached, forward_cached, init_random, param_count)
from gangs.rng import derive_seed
from gangs.tasks import GaussianMixtureTask, sample_real


class GangError(ValueError):
    pass


@dataclass(frozen=True)
class MeasuringFn:
    """``log`` clamps its argument to ``[clamp_eps, 1 - clamp_eps]`` first."""

    tag: str = "log"
    clamp_eps: float = 1e-7

    def __post_init__(self):
        if self.tag not in ("log", "identity"):
            raise GangError(f"unknown measuring function {self.tag!r}")
        if not 0.0 < self.clamp_eps < 0.5:
            raise GangError("clamp_eps must lie in (0, 0.5)")

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if self.tag == "identity":
            return p
        return np.log(np.clip(p, self.clamp_eps, 1.0 - self.clamp_eps))

    def grad(self, p):
        p = np.asarray(p, dtype=float)
        if self.tag == "identity":
            return np.ones_like(p)
        inside = (p >= self.clamp_eps) & (p <= 1.0 - self.clamp_eps)
        return np.where(inside, 1.0 / np.clip(p, self.clamp_eps, None), 0.0)


def standard_normal_latent(n, dim, rng):
    return rng.standard_normal((n, dim))


@dataclass(frozen=True, eq=False)
class GangSpec:
    real_sampler: Callable[[int, np.random.Generator], np.ndarray]
    data_dim: int
    latent_dim: int
    gen_arch: Architecture
    clf_arch: Architecture
    phi: MeasuringFn = field(default_factory=MeasuringFn)
    latent_sampler: Callable = standard_normal_latent

    def __post_init__(self):
        g, c = self.gen_arch, self.clf_arch
        if g.n_in != self.latent_dim or g.n_out != self.data_dim:
            raise GangError(f"generator must map {self.latent_dim} -> {self.data_dim}, "
                            f"got {g.n_in} -> {g.n_out}")
        if c.n_in != self.data_dim or c.n_out != 1 or c.activations[-1] != "sigmoid":
            raise GangError("classifier must map data_dim -> 1 through a sigmoid")

    @classmethod
    def for_task(cls, task: GaussianMixtureTask, latent_dim=8, gen_hidden=(32, 32),
                 clf_hidden=(32, 32), phi: MeasuringFn | None = None):
        return cls(
            real_sampler=lambda n, rng: sample_real(task, n, rng),
            data_dim=2,
            latent_dim=latent_dim,
            gen_arch=Architecture.mlp(latent_dim, gen_hidden, 2, "relu", "linear"),
            clf_arch=Architecture.mlp(2, clf_hidden, 1, "relu", "sigmoid"),
            phi=phi or MeasuringFn(),
        )

    def sample_real(self, n, rng):
        return self.real_sampler(n, rng)

    def sample_latent(self, n, rng):
        return self.latent_sampler(n, self.latent_dim, rng)


@dataclass(frozen=True, eq=False)
class MixtureStrategy:
    components: Sequence[MlpNet]
    weights: MixedStrategy

    def __post_init__(self):
        comps = tuple(self.components)
        weights = self.weights if isinstance(self.weights, MixedStrategy) else MixedStrategy(self.weights)
        if len(comps) != len(weights):
            raise GangError(f"{len(comps)} components but {len(weights)} weights")
        if len({c.arch for c in comps}) > 1:
            raise GangError("mixture components must share one architecture")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def single(cls, net: MlpNet) -> "MixtureStrategy":
        return cls([net], MixedStrategy([1.0]))

    def active(self):
        """``(index, weight, net)`` for every component with positive weight."""
        return [(i, float(w), self.components[i]) for i, w in enumerate(self.weights.probs) if w > 0]

    def classify(self, X) -> np.ndarray:
        """Mixture output ``sum_k w_k C_k(x)`` for a batch of points."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0])
        for _, w, net in self.active():
            out += w * forward_cached(net, X)[0][:, 0]
        return out

    def generate(self, latents, rng) -> np.ndarray:
        """Push ``latents`` through components drawn per point from the weights."""
        comps = rng.choice(len(self.components), size=latents.shape[0], p=self.weights.probs)
        out = None
        for k in np.unique(comps):
            rows = comps == k
            y = forward_cached(self.components[k], latents[rows])[0]
            if out is None:
                out = np.empty((latents.shape[0], y.shape[1]))
            out[rows] = y
        return out


def _as_mixture(s):
    return s if isinstance(s, MixtureStrategy) else MixtureStrategy.single(s)


def sample_fake(g, spec: GangSpec, n, rng) -> np.ndarray:
    """Fake data from a generator or generator mixture."""
    z = spec.sample_latent(n, rng)
    if isinstance(g, MlpNet):
        return forward_cached(g, z)[0]
    return g.generate(z, rng)


def payoff_on_samples(c: MlpNet, real, fake, phi: MeasuringFn) -> float:
    """u_C on explicit real and fake sample sets."""
    real_score = phi(forward_cached(c, np.asarray(real, float))[0][:, 0]).mean()
    fake_score = phi(forward_cached(c, np.asarray(fake, float))[0][:, 0]).mean()
    return float(real_score - fake_score)


def payoff_uc(g, c: MlpNet, spec: GangSpec, n_samples: int, seed) -> float:
    """Monte Carlo estimate of the classifier payoff ``u_C(g, c)``.

    ``g`` is a generator or a generator mixture; mixture fake points are drawn
    by first picking a component per point.  Real points come first from the
    seeded stream, then the fake ones.
    """
    if n_samples < 1:
        raise GangError("n_samples must be positive")
    if c.arch.n_in != spec.data_dim:
        raise GangError("classifier input does not match data dimension")
    rng = np.random.default_rng(seed)
    real = spec.sample_real(n_samples, rng)
    fake = sample_fake(g, spec, n_samples, rng)
    return payoff_on_samples(c, real, fake, spec.phi)


def payoff_ug(g, c: MlpNet, spec: GangSpec, n_samples: int, seed) -> float:
    return -payoff_uc(g, c, spec, n_samples, seed)


@dataclass(frozen=True)
class RbbrConfig:
    steps: int = 1000
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    uniform_fake: bool = True

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1 or not self.learning_rate > 0:
            raise GangError("steps >= 0, batch_size >= 1 and learning_rate > 0 required")
        if self.optimizer not in ("adam", "sgd"):
            raise GangError(f"unknown optimizer {self.optimizer!r}")

    def with_seed(self, seed):
        return replace(self, seed=seed)

    def make_optimizer(self):
        if self.optimizer == "sgd":
            return Sgd(self.learning_rate)
        return Adam(self.learning_rate, self.beta1, self.beta2, self.adam_eps)


def classifier_objective(params, arch: Architecture, real, fake, phi: MeasuringFn):
    """Batch estimate of u_C for classifier parameters ``params`` and its gradient."""
    net = _shell(arch)
    X = np.vstack([real, fake])
    out, cache = forward_cached(net, X, params)
    p = out[:, 0]
    n_real = len(real)
    value = phi(p[:n_real]).mean() - phi(p[n_real:]).mean()
    scale = np.empty_like(p)
    scale[:n_real] = 1.0 / n_real
    scale[n_real:] = -1.0 / (len(p) - n_real)
    grad, _ = backward_cached(net, cache, (scale * phi.grad(p))[:, None], params)
    return float(value), grad


def generator_objective(params, arch: Architecture, latents, mu_c: MixtureStrategy, phi: MeasuringFn):
    """Batch estimate of the z-dependent part of u_G against ``mu_c``, and its gradient.

    ``u_G = -E_x[phi(mu_c(x))] + E_z[sum_k w_k phi(C_k(G(z)))]``; only the
    second term depends on the generator.  Each classifier component is
    evaluated and backpropagated on its own and the weighted input gradients
    are summed before the pass through the generator.
    """
    gen = _shell(arch)
    x, gcache = forward_cached(gen, latents, params)
    n = latents.shape[0]
    value = 0.0
    dx = np.zeros_like(x)
    for _, w, c in mu_c.active():
        out, ccache = forward_cached(c, x)
        p = out[:, 0]
        value += w * phi(p).mean()
        _, d_in = backward_cached(c, ccache, (w / n) * phi.grad(p)[:, None])
        dx += d_in
    grad, _ = backward_cached(gen, gcache, dx, params)
    return float(value), grad


_shells: dict = {}


def _shell(arch):
    # a zero network carrying the architecture; parameters are passed explicitly
    net = _shells.get(arch)
    if net is None:
        net = _shells[arch] = MlpNet(arch, np.zeros(param_count(arch)))
    return net


def _uniform_box(points, n, rng):
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    return lo + (hi - lo) * rng.random((n, points.shape[1]))


def rbbr_classifier(mu_g, spec: GangSpec, cfg: RbbrConfig) -> MlpNet:
    """Classifier trained for exactly ``cfg.steps`` steps to maximize u_C against ``mu_g``.

    With ``cfg.uniform_fake`` each step adds ``batch_size`` points drawn
    uniformly from the bounding box of that step's real and fake batches,
    labelled fake: the fake expectation is then taken over the union, i.e.
    over an equal mixture of generated and uniform points.
    """
    mu_g = _as_mixture(mu_g)
    if mu_g.components[0].arch.n_out != spec.data_dim:
        raise GangError("generator output does not match data dimension")
    net = init_random(spec.clf_arch, cfg.seed)
    if cfg.steps == 0:
        return net
    rng = np.random.default_rng(derive_seed(cfg.seed, "rbbr_batches"))
    params = net.params.copy()
    opt = cfg.make_optimizer()
    B = cfg.batch_size
    for _ in range(cfg.steps):
        real = spec.sample_real(B, rng)
        fake = mu_g.generate(spec.sample_latent(B, rng), rng)
        if cfg.uniform_fake:
            fake = np.vstack([fake, _uniform_box(np.vstack([real, fake]), B, rng)])
        _, grad = classifier_objective(params, spec.clf_arch, real, fake, spec.phi)
        params = opt.step(params, -grad)
    return MlpNet(spec.clf_arch, params)


def rbbr_generator(mu_c, spec: GangSpec, cfg: RbbrConfig) -> MlpNet:
    """Generator trained for exactly ``cfg.steps`` steps to maximize u_G against ``mu_c``."""
    mu_c = _as_mixture(mu_c)
    if mu_c.components[0].arch.n_in != spec.data_dim:
        raise GangError("classifier input does not match data dimension")
    net = init_random(spec.gen_arch, cfg.seed)
    if cfg.steps == 0:
        return net
    rng = np.random.default_rng(derive_seed(cfg.seed, "rbbr_batches"))
    params = net.params.copy()
    opt = cfg.make_optimizer()
    for _ in range(cfg.steps):
        z = spec.sample_latent(cfg.batch_size, rng)
        _, grad = generator_objective(params, spec.gen_arch, z, mu_c, spec.phi)
        params = opt.step(params, -grad)
    return MlpNet(spec.gen_arch, params)


def mixture_ug_on_samples(g: MlpNet, mu_c: MixtureStrategy, real, latents, phi: MeasuringFn) -> float:
    """u_G of one generator against a classifier mixture, weighting components exactly."""
    fake = forward_cached(g, latents)[0]
    return -sum(w * payoff_on_samples(c, real, fake, phi) for _, w, c in mu_c.active())


def mixture_uc_on_samples(mu_g: MixtureStrategy, c: MlpNet, real, latents, phi: MeasuringFn) -> float:
    """u_C of one classifier against a generator mixture; every component sees ``latents``."""
    real_score = phi(forward_cached(c, real)[0][:, 0]).mean()
    fake_score = 0.0
    for _, w, g in mu_g.active():
        fake = forward_cached(g, latents)[0]
        fake_score += w * phi(forward_cached(c, fake)[0][:, 0]).mean()
    return float(real_score - fake_score)
