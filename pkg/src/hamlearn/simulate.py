"""Both sides of the learning loop's hardware.

The untrusted system is played by `sample_outcome`, which draws real data at
the hidden true couplings.  The trusted simulator is played by
`LikelihoodEvaluator`, which scores hypotheses either exactly, through
finite-sample frequency estimates, or through an exact value blurred by
Gaussian noise (a cheap stand-in for finite-sample estimation).  The module
also carries the sample-count sufficiency formulas used for cost reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import LIKELIHOOD_FLOOR, ExperimentSpec, LikelihoodModel, noisy_likelihood

EXACT = "exact"
SAMPLED = "sampled"
NOISY_EXACT = "noisy_exact"
EVALUATOR_MODES = (EXACT, SAMPLED, NOISY_EXACT)


@dataclass(frozen=True)
class LikelihoodEvaluator:
    """Trusted-simulator front end for likelihood evaluation.

    Modes: `exact` returns the model likelihood; `sampled` replaces it with
    the frequency of the target outcome among `n_samp` simulated shots;
    `noisy_exact` adds zero-mean Gaussian noise of s.d. `noise` and clips.
    Presents the same `likelihood_many` surface as a model, so it can be
    passed straight to `bayes_update`.
    """

    model: LikelihoodModel
    mode: str = EXACT
    n_samp: int = 1
    noise: float = 0.0

    def __post_init__(self):
        if self.mode not in EVALUATOR_MODES:
            raise ValueError(f"unknown evaluator mode {self.mode!r}")
        if self.mode == SAMPLED and self.n_samp < 1:
            raise ValueError("sampled mode needs n_samp >= 1")
        if self.mode == NOISY_EXACT and self.noise < 0:
            raise ValueError("noise standard deviation must be nonnegative")

    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    def box(self) -> np.ndarray:
        return self.model.box

    def likelihood_many(
        self,
        outcome: int,
        xs,
        exp: ExperimentSpec,
        rng: Optional[np.random.Generator] = None,
    ) -> np.ndarray:
        exact = np.asarray(self.model.likelihood_many(outcome, xs, exp), dtype=float)
        if self.mode == EXACT:
            return exact
        if rng is None:
            raise ValueError(f"{self.mode} evaluation requires an explicit rng")
        if self.mode == SAMPLED:
            counts = rng.binomial(self.n_samp, np.clip(exact, 0.0, 1.0))
            return np.clip(counts / self.n_samp, LIKELIHOOD_FLOOR, 1.0)
        return np.asarray(noisy_likelihood(exact, self.noise, rng))

    def calls_per_update(self, n_particles: int) -> int:
        """Simulator invocations consumed by one weight update."""
        if self.mode == SAMPLED:
            return n_particles * self.n_samp
        return n_particles


def sample_outcome(
    model: LikelihoodModel,
    truth,
    exp: ExperimentSpec,
    rng: np.random.Generator,
) -> int:
    """Draw one measurement outcome at the hidden true couplings."""
    dist = np.asarray(model.outcome_distribution(truth, exp), dtype=float)
    dist = np.clip(dist, 0.0, None)
    return int(rng.choice(dist.shape[0], p=dist / dist.sum()))


def estimate_likelihood_sampled(
    model: LikelihoodModel,
    x,
    exp: ExperimentSpec,
    target: int,
    n_samp: int,
    rng: np.random.Generator,
) -> float:
    """Frequency of `target` among `n_samp` simulated shots, floored.

    The count of a fixed outcome among n_samp independent shots is binomial
    in the exact outcome probability, so it is drawn in one step rather than
    by enumerating shots.  Unbiased before flooring.
    """
    if n_samp < 1:
        raise ValueError("n_samp must be at least 1")
    p = min(max(model.likelihood(target, x, exp), 0.0), 1.0)
    count = int(rng.binomial(n_samp, p))
    return max(count / n_samp, LIKELIHOOD_FLOOR)


def required_samples(max_like: float, expected_like: float, epsilon: float) -> int:
    """Shots per particle sufficient for a 1-norm update error of epsilon.

    Evaluates ceil(max_like (1 - max_like) / (epsilon * expected_like)^2),
    the asymptotic sufficiency bound with its constant set to 1.  Advisory:
    used for cost reporting, never enforced.
    """
    if not 0.0 <= max_like <= 1.0:
        raise ValueError("max_like must lie in [0, 1]")
    if not 0.0 < expected_like <= 1.0:
        raise ValueError("expected_like must lie in (0, 1]")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    variance = max_like * (1.0 - max_like)
    if variance == 0.0:
        return 0
    return int(math.ceil(variance / (epsilon * expected_like) ** 2))


@dataclass(frozen=True)
class SampleBudget:
    """Per-update sampling plan: shots per particle and total simulations."""

    epsilon: float
    n_samp_per_particle: int
    n_sim_total: int

    def __post_init__(self):
        if self.epsilon <= 0 or self.n_samp_per_particle <= 0 or self.n_sim_total <= 0:
            raise ValueError("budget entries must be positive")


def plan_budget(
    max_like: float, expected_like: float, epsilon: float, n_particles: int
) -> SampleBudget:
    """Sampling budget for one update over `n_particles` hypotheses.

    At least one shot per particle is always planned, even when the
    sufficiency bound is zero (deterministic outcome).
    """
    if n_particles < 1:
        raise ValueError("n_particles must be at least 1")
    per_particle = max(1, required_samples(max_like, expected_like, epsilon))
    return SampleBudget(epsilon, per_particle, per_particle * n_particles)
