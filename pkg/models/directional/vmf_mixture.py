"""
DirSeg — Mixture of von Mises–Fisher Distributions
===================================================
Soft-assignment EM for a mixture of vMF distributions on the unit
hypersphere, plus a rejection sampler used to build test data.

Data is laid out column-wise (dim × N), matching ``SuperFrameMatrix``.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from sklearn.cluster import kmeans_plusplus

from models.directional.bessel import log_norm_const
from models.errors import (
    AllDegenerate, DegenerateComponent, DimensionMismatch, InputError,
    InvalidSpec, NotUnitNorm, TooFewPoints,
)

logger = logging.getLogger(__name__)

# ─── Configuration ────────────────────────────────────────────────────────────

UNIT_TOL = 1e-9
DATA_UNIT_TOL = 1e-6
RESULTANT_EPS = 1e-12
INIT_KAPPA = 1.0


@dataclass(frozen=True)
class EmConfig:
    """EM settings; the default Z = 15 components are later pruned to 10."""

    num_components: int = 15
    max_iters: int = 100
    rel_tol: float = 1e-6
    seed: int = 42
    kappa_max: float = 1e5
    min_resp_mass: float = 1.0

    def __post_init__(self):
        if self.num_components < 1:
            raise InvalidSpec(f"num_components must be >= 1, got {self.num_components}")
        if self.max_iters < 1:
            raise InvalidSpec(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol <= 0:
            raise InvalidSpec(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.kappa_max <= 0:
            raise InvalidSpec(f"kappa_max must be > 0, got {self.kappa_max}")
        if self.min_resp_mass < 0:
            raise InvalidSpec(f"min_resp_mass must be >= 0, got {self.min_resp_mass}")


@dataclass(frozen=True)
class VmfComponent:
    mean: np.ndarray
    kappa: float
    weight: float

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        if mean.size < 2:
            raise DimensionMismatch("a vMF mean needs dimension >= 2")
        if abs(np.linalg.norm(mean) - 1.0) > UNIT_TOL:
            raise NotUnitNorm(f"mean has norm {np.linalg.norm(mean):.12f}")
        if not self.kappa >= 0:
            raise InputError(f"kappa must be >= 0, got {self.kappa}")
        if not 0.0 <= self.weight <= 1.0:
            raise InputError(f"weight must be in [0, 1], got {self.weight}")
        mean.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def dim(self):
        return self.mean.size

    @property
    def log_norm(self):
        return log_norm_const(self.dim, self.kappa)


@dataclass(frozen=True)
class VmfMixture:
    components: tuple

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise InputError("a mixture needs at least one component")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise DimensionMismatch(f"components disagree on dimension: {sorted(dims)}")
        total = sum(c.weight for c in components)
        if abs(total - 1.0) > UNIT_TOL:
            raise InputError(f"weights sum to {total:.12f}, expected 1")
        object.__setattr__(self, "components", components)

    @classmethod
    def from_arrays(cls, means, kappas, weights):
        """Build from a dim × Z mean matrix and length-Z κ / π vectors."""
        means = np.asarray(means, dtype=np.float64)
        return cls(tuple(
            VmfComponent(means[:, z], kappas[z], weights[z]) for z in range(means.shape[1])
        ))

    @property
    def dim(self):
        return self.components[0].dim

    @property
    def n_components(self):
        return len(self.components)

    @property
    def means(self):
        return np.column_stack([c.mean for c in self.components])

    @property
    def kappas(self):
        return np.array([c.kappa for c in self.components])

    @property
    def weights(self):
        return np.array([c.weight for c in self.components])


@dataclass(frozen=True)
class Responsibilities:
    """Posterior γ_iz, N × Z, rows summing to one."""

    gamma: np.ndarray

    @property
    def mass(self):
        return self.gamma.sum(axis=0)


# ─── Densities ────────────────────────────────────────────────────────────────

def _check_data(data, dim):
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] != dim:
        raise DimensionMismatch(f"data has dimension {data.shape[0]}, model has {dim}")
    norms = np.linalg.norm(data, axis=0)
    if norms.size and np.max(np.abs(norms - 1.0)) > DATA_UNIT_TOL:
        raise NotUnitNorm("every data column must have unit norm")
    return data


def log_density(x, comp):
    """log ρ(x; μ, κ) = log C_p(κ) + κ·⟨μ, x⟩."""
    x = _check_data(x, comp.dim)[:, 0]
    return comp.log_norm + comp.kappa * float(comp.mean @ x)


def _joint_log_terms(data, mixture):
    """log π_z + log ρ(x_i; μ_z, κ_z), N × Z."""
    log_norms = np.array([c.log_norm for c in mixture.components])
    with np.errstate(divide="ignore"):
        log_weights = np.log(mixture.weights)
    return (data.T @ mixture.means) * mixture.kappas + log_norms + log_weights


def _e_step(data, mixture):
    terms = _joint_log_terms(data, mixture)
    per_point = logsumexp(terms, axis=1)
    gamma = np.exp(terms - per_point[:, None])
    return gamma, per_point


def e_step(data, mixture):
    """Responsibilities and total log-likelihood Σ_i log Σ_z π_z ρ(x_i)."""
    data = _check_data(data, mixture.dim)
    gamma, per_point = _e_step(data, mixture)
    return Responsibilities(gamma), float(per_point.sum())


def mixture_log_likelihood(data, mixture):
    return e_step(data, mixture)[1]


def predict_components(data, mixture):
    """Index of the most responsible component for each column."""
    resp, _ = e_step(data, mixture)
    return np.argmax(resp.gamma, axis=1)


# ─── M-step ───────────────────────────────────────────────────────────────────

def banerjee_kappa(r_bar, dim, kappa_max):
    """κ ≈ r̄(p − r̄²)/(1 − r̄²), clamped to [0, kappa_max]."""
    r_bar = float(np.clip(r_bar, 0.0, 1.0))
    denom = 1.0 - r_bar * r_bar
    if denom <= 0.0:
        return float(kappa_max)
    return float(np.clip(r_bar * (dim - r_bar * r_bar) / denom, 0.0, kappa_max))


def _expected_complete_ll(dim, kappa, mass, resultant_norm):
    """Q_z(κ) = N_z·log C_p(κ) + κ·||r_z|| with μ_z aligned to r_z."""
    return mass * log_norm_const(dim, kappa) + kappa * resultant_norm


def _update(data, gamma, kappa_max, previous=None):
    """
    One M-step. Returns (means, kappas, weights, masses, degenerate).

    Components whose resultant vanishes keep their previous mean (or a zero
    placeholder when there is none) and are reported in ``degenerate``.
    With ``previous`` set, a new κ is accepted only if it does not lower
    the component's expected complete-data log-likelihood.
    """
    dim, n_points = data.shape
    masses = gamma.sum(axis=0)
    resultants = data @ gamma
    norms = np.linalg.norm(resultants, axis=0)

    n_components = gamma.shape[1]
    means = np.zeros((dim, n_components))
    kappas = np.zeros(n_components)
    degenerate = []

    for z in range(n_components):
        if norms[z] < RESULTANT_EPS or masses[z] <= 0:
            degenerate.append(z)
            if previous is not None:
                means[:, z] = previous.components[z].mean
            kappas[z] = 0.0
            continue

        means[:, z] = resultants[:, z] / norms[z]
        candidate = banerjee_kappa(norms[z] / masses[z], dim, kappa_max)
        if previous is not None:
            old = min(previous.components[z].kappa, kappa_max)
            q_new = _expected_complete_ll(dim, candidate, masses[z], norms[z])
            q_old = _expected_complete_ll(dim, old, masses[z], norms[z])
            if q_new < q_old:
                candidate = old
        kappas[z] = candidate

    weights = masses / n_points
    weights = weights / weights.sum()
    return means, kappas, weights, masses, degenerate


def m_step(data, resp, kappa_max=1e5):
    """
    Closed-form parameter updates from responsibilities.

    π_z = N_z/N, μ_z = r_z/||r_z|| and κ_z from the Banerjee approximation
    with r̄ = ||r_z|| / N_z. Raises ``DegenerateComponent`` when any
    resultant vanishes.
    """
    gamma = np.asarray(resp.gamma, dtype=np.float64)
    data = np.asarray(data, dtype=np.float64)
    if data.shape[1] != gamma.shape[0]:
        raise DimensionMismatch(
            f"{data.shape[1]} data columns but {gamma.shape[0]} responsibility rows"
        )
    means, kappas, weights, _, degenerate = _update(data, gamma, kappa_max)
    if degenerate:
        raise DegenerateComponent(degenerate)
    return VmfMixture.from_arrays(means, kappas, weights)


# ─── Fitting ──────────────────────────────────────────────────────────────────

def initial_mixture(data, n_components, seed, init_means=None):
    """k-means++ seeding on the sphere, κ = 1, uniform weights."""
    if init_means is None:
        # On unit vectors squared Euclidean distance is 2(1 − cos).
        centers, _ = kmeans_plusplus(data.T, n_components, random_state=seed)
        init_means = centers.T
    init_means = np.asarray(init_means, dtype=np.float64)
    init_means = init_means / np.linalg.norm(init_means, axis=0)
    kappas = np.full(n_components, INIT_KAPPA)
    weights = np.full(n_components, 1.0 / n_components)
    return VmfMixture.from_arrays(init_means, kappas, weights)


def _reseed_dead(data, mixture, gamma, per_point, masses, degenerate, config):
    """Move starved components onto the worst-explained points if that helps."""
    dead = sorted(set(degenerate) | {
        z for z in range(mixture.n_components) if masses[z] < config.min_resp_mass
    })
    if not dead:
        return mixture, gamma, per_point

    worst = np.argsort(per_point, kind="stable")[:len(dead)]
    means, kappas, weights = mixture.means, mixture.kappas, mixture.weights
    for z, i in zip(dead, worst):
        means[:, z] = data[:, i]
        kappas[z] = INIT_KAPPA
    candidate = VmfMixture.from_arrays(means, kappas, weights)
    candidate_gamma, candidate_points = _e_step(data, candidate)

    if candidate_points.sum() >= per_point.sum():
        logger.debug("re-seeded components %s", dead)
        return candidate, candidate_gamma, candidate_points
    logger.debug("kept starved components %s; re-seed lowered the likelihood", dead)
    return mixture, gamma, per_point


def fit(data, config=None, init_means=None):
    """
    Fit a vMF mixture by EM. Returns ``(mixture, loglik_trace)``.

    Stops when the relative log-likelihood improvement drops below
    ``rel_tol`` or after ``max_iters`` updates. The trace never decreases.
    """
    config = config or EmConfig()
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionMismatch("data must be a dim × N matrix")
    data = _check_data(data, data.shape[0])
    n_points = data.shape[1]
    if n_points < config.num_components:
        raise TooFewPoints(
            f"{n_points} points cannot support {config.num_components} components"
        )

    mixture = initial_mixture(data, config.num_components, config.seed, init_means)
    gamma, per_point = _e_step(data, mixture)
    log_lik = float(per_point.sum())
    trace = [log_lik]

    for iteration in range(config.max_iters):
        means, kappas, weights, masses, degenerate = _update(
            data, gamma, config.kappa_max, previous=mixture
        )
        if len(degenerate) == mixture.n_components:
            raise AllDegenerate("every component lost its resultant")

        updated = VmfMixture.from_arrays(means, kappas, weights)
        gamma_new, per_point_new = _e_step(data, updated)
        updated, gamma_new, per_point_new = _reseed_dead(
            data, updated, gamma_new, per_point_new, masses, degenerate, config
        )

        new_log_lik = float(per_point_new.sum())
        trace.append(new_log_lik)
        mixture, gamma, per_point = updated, gamma_new, per_point_new

        improvement = (new_log_lik - log_lik) / max(abs(log_lik), 1e-300)
        logger.debug("EM iteration %d: log-likelihood %.6f", iteration + 1, new_log_lik)
        log_lik = new_log_lik
        if improvement < config.rel_tol:
            break

    logger.info(
        "EM finished after %d iterations, log-likelihood %.6f", len(trace) - 1, log_lik
    )
    return mixture, trace


# ─── Sampling ─────────────────────────────────────────────────────────────────

def sample_vmf(comp, n, seed=None):
    """
    Draw ``n`` unit vectors from vMF(μ, κ) as a dim × n matrix.

    Wood's rejection scheme for the component along μ, combined with a
    uniform direction in the tangent space of μ.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    dim, kappa, mu = comp.dim, comp.kappa, comp.mean
    p1 = dim - 1.0

    b = p1 / (2.0 * kappa + np.sqrt(4.0 * kappa ** 2 + p1 ** 2))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + p1 * np.log(1.0 - x0 ** 2)

    accepted = []
    remaining = n
    while remaining > 0:
        batch = max(2 * remaining, 16)
        z = rng.beta(p1 / 2.0, p1 / 2.0, size=batch)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=batch)
        with np.errstate(divide="ignore", invalid="ignore"):
            keep = kappa * w + p1 * np.log(1.0 - x0 * w) - c >= np.log(u)
        accepted.append(w[keep][:remaining])
        remaining -= accepted[-1].size
    w = np.concatenate(accepted)

    v = rng.standard_normal((dim, n))
    v -= np.outer(mu, mu @ v)
    v /= np.linalg.norm(v, axis=0)

    x = np.outer(mu, w) + np.sqrt(np.clip(1.0 - w ** 2, 0.0, None)) * v
    return x / np.linalg.norm(x, axis=0)


def sample_mixture(mixture, n, seed=None):
    """Draw ``n`` points from a mixture. Returns (dim × n data, component labels)."""
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, mixture.weights)
    blocks, labels = [], []
    for z, (comp, count) in enumerate(zip(mixture.components, counts)):
        if count:
            blocks.append(sample_vmf(comp, int(count), seed=rng.integers(2 ** 32)))
            labels.append(np.full(count, z))
    return np.hstack(blocks), np.concatenate(labels)
