"""Two-dimensional mixture-of-Gaussians benchmark tasks."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

TASK_NAMES = ("grid9", "grid16", "annulus9", "annulus16", "random9", "random16")

MODE_SIGMA = 0.05
EXTENT = 1.0
RANDOM_COV_JITTER = 0.0025
RANDOM_COV_SCALE = 0.05

COVERAGE_RADIUS_MULT = 3.0
COVERAGE_THRESHOLD = 0.01


class TaskError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GaussianMixtureTask:
    name: str
    means: np.ndarray
    covs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        k = means.shape[0]
        if means.shape != (k, 2) or covs.shape != (k, 2, 2) or weights.shape != (k,):
            raise TaskError("inconsistent mode table shapes")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise TaskError("mode weights must lie on the simplex")
        if not np.allclose(covs, covs.transpose(0, 2, 1)):
            raise TaskError("covariances must be symmetric")
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError:
            raise TaskError("covariances must be positive definite") from None
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "weights", weights / weights.sum())
        object.__setattr__(self, "_chol", chol)

    @property
    def n_modes(self) -> int:
        return self.means.shape[0]

    @property
    def modes(self):
        return [(self.means[i], self.covs[i], float(self.weights[i])) for i in range(self.n_modes)]

    def mode_radius(self, i, radius_mult=COVERAGE_RADIUS_MULT) -> float:
        return radius_mult * float(np.sqrt(np.linalg.eigvalsh(self.covs[i]).max()))

    def bounds(self, inflate=0.0):
        """Axis-aligned box around the means padded by three standard deviations, then inflated."""
        pad = np.array([self.mode_radius(i) for i in range(self.n_modes)]).max()
        lo = self.means.min(axis=0) - pad
        hi = self.means.max(axis=0) + pad
        centre, half = (lo + hi) / 2, (hi - lo) / 2 * (1 + inflate)
        return centre - half, centre + half

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["mean_x", "mean_y", "cov_xx", "cov_xy", "cov_yy", "weight"])
            for m, c, wt in self.modes:
                w.writerow([repr(float(v)) for v in (m[0], m[1], c[0, 0], c[0, 1], c[1, 1], wt)])

    @classmethod
    def from_csv(cls, path, name="custom"):
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        means = [[float(r["mean_x"]), float(r["mean_y"])] for r in rows]
        covs = [[[float(r["cov_xx"]), float(r["cov_xy"])],
                 [float(r["cov_xy"]), float(r["cov_yy"])]] for r in rows]
        return cls(name, np.array(means), np.array(covs), np.array([float(r["weight"]) for r in rows]))


def _isotropic(k, sigma):
    return np.repeat((sigma ** 2 * np.eye(2))[None], k, axis=0)


def make_task(name: str, seed: int = 0, sigma: float = MODE_SIGMA) -> GaussianMixtureTask:
    """Build one of the named benchmark mixtures.

    Grid tasks put the means on a regular lattice spanning [-1, 1]^2, annulus
    tasks space them evenly on the unit circle; both use isotropic modes.
    Random tasks draw means uniformly in [-1, 1]^2 with covariance
    ``A A^T + 0.0025 I``, ``A`` uniform in [-0.05, 0.05].  Only the random
    tasks consume ``seed``.
    """
    if name not in TASK_NAMES:
        raise TaskError(f"unknown task {name!r}; expected one of {', '.join(TASK_NAMES)}")
    k = int(name[-2:] if name.endswith("16") else name[-1])
    weights = np.full(k, 1.0 / k)
    if name.startswith("grid"):
        side = int(round(np.sqrt(k)))
        ticks = np.linspace(-EXTENT, EXTENT, side)
        means = np.array([(x, y) for x in ticks for y in ticks])
        covs = _isotropic(k, sigma)
    elif name.startswith("annulus"):
        angles = 2 * np.pi * np.arange(k) / k
        means = EXTENT * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        covs = _isotropic(k, sigma)
    else:
        rng = np.random.default_rng(seed)
        means = rng.uniform(-EXTENT, EXTENT, size=(k, 2))
        A = rng.uniform(-RANDOM_COV_SCALE, RANDOM_COV_SCALE, size=(k, 2, 2))
        covs = A @ A.transpose(0, 2, 1) + RANDOM_COV_JITTER * np.eye(2)
    return GaussianMixtureTask(name, means, covs, weights)


def sample_real(task: GaussianMixtureTask, n: int, seed) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n < 1:
        raise TaskError("n must be positive")
    comps = rng.choice(task.n_modes, size=n, p=task.weights)
    z = rng.standard_normal((n, 2))
    return task.means[comps] + np.einsum("nij,nj->ni", task._chol[comps], z)


def mode_coverage(task: GaussianMixtureTask, fake_points, radius_mult=COVERAGE_RADIUS_MULT,
                  threshold=COVERAGE_THRESHOLD):
    """Count modes that receive at least ``threshold`` of the fake points.

    A point counts for a mode when it lies within ``radius_mult`` times the
    square root of the mode's largest covariance eigenvalue of its mean.
    Returns ``(covered_count, per_mode_fractions)``.
    """
    pts = np.asarray(fake_points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise TaskError("need a non-empty (n, 2) array of points")
    fractions = np.empty(task.n_modes)
    for i in range(task.n_modes):
        d = np.linalg.norm(pts - task.means[i], axis=1)
        fractions[i] = np.mean(d <= task.mode_radius(i, radius_mult))
    return int(np.sum(fractions >= threshold)), fractions
