"""Analytic and Monte Carlo expected-loss analysis for echo experiments.

For the one-coupling model with a Gaussian prior, the posterior mean has a
closed form and the expected posterior variance (the average-case loss of
the optimal estimator) can be computed by adaptive quadrature.  The risk as
a function of evolution time is pinched between sigma^2 and the envelope
sigma^2 (1 - 4 sigma^2 t^2 exp(-4 sigma^2 t^2)), whose minimum sits at
t = 1/(2 sigma) with value (1 - 1/e) sigma^2.  Small multi-coupling problems
are handled by Monte Carlo over a particle-cloud prior.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure, ZeroTotalWeight
from .models import (
    IQLE,
    TWO_OUTCOME,
    ExperimentSpec,
    LikelihoodModel,
    bitflip_wrap,
    single_param_likelihood,
)
from .smc import ParticleCloud, bayes_update, posterior_covariance, posterior_mean

# Quadrature covers mu +/- 10 sigma; the Gaussian tail beyond that is ~1e-23.
_QUAD_HALF_WIDTH = 10.0
_QUAD_EPSREL = 1e-10
_QUAD_LIMIT = 200
# Below this posterior mass a datum counts as impossible: the update is
# rejected and the posterior keeps the prior moments.
_MASS_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianPrior1D:
    """Normal prior over a single coupling with mean mu and s.d. sigma."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def pdf(self, x: float) -> float:
        z = (x - self.mu) / self.sigma
        return math.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))


@dataclass(frozen=True)
class RiskPoint:
    """One scan sample: inversion coupling, time, bit-flip rate, risk."""

    x_inv: float
    t: float
    alpha: float
    risk: float
    stderr: float = 0.0

    def __post_init__(self):
        if self.risk < 0:
            raise ValueError("risk must be nonnegative")


def posterior_mean_1d(d: int, prior: GaussianPrior1D, x_inv: float, t: float) -> float:
    """Closed-form posterior mean after observing outcome d in {0, 1}.

    Evaluated in complex arithmetic; the imaginary residue is discarded once
    it is confirmed to be rounding-level.  Overflow of the exp terms at very
    large t is benign: the ratio underflows to 0 and the prior mean returns.
    """
    if d not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    mu, sigma = prior.mu, prior.sigma
    sign = 1 - 2 * d
    with np.errstate(over="ignore", invalid="ignore"):
        oscillation = np.exp(4j * mu * t) - np.exp(4j * x_inv * t)
        numerator = 2j * sign * sigma**2 * t * oscillation
        denominator = 2.0 * np.exp(2.0 * t * (1j * (mu + x_inv) + sigma**2 * t)) + sign * (
            np.exp(4j * mu * t) + np.exp(4j * x_inv * t)
        )
        ratio = numerator / denominator
    if not np.isfinite(ratio):
        return mu
    value = complex(mu + ratio)
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"posterior mean came out complex: {value}")
    return value.real


def _quad(f: Callable[[float], float], lo: float, hi: float) -> float:
    with warnings.catch_warnings():
        # non-convergence is reported through QuadratureFailure instead
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=_QUAD_EPSREL,
                                    limit=_QUAD_LIMIT)
    if err > max(1e-12, 1e-6 * abs(value)):
        raise QuadratureFailure(
            f"quadrature error estimate {err:.3e} too large for value {value:.6e}"
        )
    return value


def _outcome0_moments(prior: GaussianPrior1D, x_inv: float, t: float):
    """Quadrature moments (mass, E[x * L], E[x^2 * L]) for outcome 0."""
    lo = prior.mu - _QUAD_HALF_WIDTH * prior.sigma
    hi = prior.mu + _QUAD_HALF_WIDTH * prior.sigma

    def weighted(x: float) -> float:
        return single_param_likelihood(0, x, x_inv, t) * prior.pdf(x)

    mass = _quad(weighted, lo, hi)
    first = _quad(lambda x: x * weighted(x), lo, hi)
    second = _quad(lambda x: x * x * weighted(x), lo, hi)
    return mass, first, second


def _posterior_moments(prior: GaussianPrior1D, x_inv: float, t: float):
    """Per-outcome (mass, posterior mean, posterior variance), by quadrature.

    Only the outcome-0 integrals are computed; outcome 1 follows from the
    exact complements mass_1 = 1 - mass_0, etc., because the two likelihoods
    sum to one pointwise.  A datum whose mass falls below the floor is
    treated as rejected: the posterior keeps the prior mean and variance.
    """
    mass0, first0, second0 = _outcome0_moments(prior, x_inv, t)
    prior_second = prior.mu**2 + prior.sigma**2
    results = []
    for mass, first, second in (
        (mass0, first0, second0),
        (1.0 - mass0, prior.mu - first0, prior_second - second0),
    ):
        if mass <= _MASS_FLOOR:
            results.append((max(mass, 0.0), prior.mu, prior.sigma**2))
            continue
        mean = first / mass
        variance = max(second / mass - mean * mean, 0.0)
        results.append((mass, mean, variance))
    return results


def quadrature_posterior_mean_1d(
    d: int, prior: GaussianPrior1D, x_inv: float, t: float
) -> float:
    """Posterior mean by adaptive quadrature; reference for the closed form."""
    if d not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    moments = _posterior_moments(prior, x_inv, t)
    return moments[d][1]


def bayes_risk_1d(
    prior: GaussianPrior1D, x_inv: float, t: float, alpha: float = 0.0
) -> float:
    """Expected posterior variance after one experiment.

    The posterior is always computed with the noiseless model; when alpha > 0
    the outcome probabilities are taken from the bit-flipped data
    distribution instead, modeling an inference engine blind to the noise.
    """
    if not 0.0 <= alpha <= 0.5:
        raise ValueError("bit-flip rate must lie in [0, 0.5]")
    moments = _posterior_moments(prior, x_inv, t)
    risk = 0.0
    for mass, _, variance in moments:
        risk += bitflip_wrap(alpha, mass) * variance
    return risk


def risk_envelope(t, sigma: float):
    """Lower and upper bounds on the noiseless risk at evolution time t."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    u = 4.0 * sigma**2 * t**2
    lower = sigma**2 * (1.0 - u * np.exp(-u))
    upper = np.full_like(lower, sigma**2)
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def optimal_time(sigma: float) -> float:
    """Evolution time minimizing the risk envelope's lower bound."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return 1.0 / (2.0 * sigma)


def risk_scan(
    prior: GaussianPrior1D,
    strategy: Union[str, float],
    t_grid: Sequence[float],
    alpha: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    pgh_draws: int = 1000,
) -> List[RiskPoint]:
    """Evaluate the risk across a time grid for one inversion strategy.

    Strategies: "none" (inversion coupling 0, i.e. plain forward evolution),
    "mean_plus_sigma" / "mean_minus_sigma" (offset from the prior mean), a
    float (fixed inversion coupling), or "pgh" (inversion drawn from the
    prior; the reported risk is the average over `pgh_draws` draws with its
    standard error).
    """
    t_grid = list(t_grid)
    if not t_grid:
        raise ValueError("t_grid must be nonempty")
    if strategy == "pgh" and rng is None:
        raise ValueError("the pgh strategy requires an rng")

    points: List[RiskPoint] = []
    for t in t_grid:
        t = float(t)
        if strategy == "pgh":
            draws = rng.normal(prior.mu, prior.sigma, size=pgh_draws)
            risks = np.array([bayes_risk_1d(prior, float(x), t, alpha) for x in draws])
            points.append(
                RiskPoint(
                    x_inv=float("nan"),
                    t=t,
                    alpha=alpha,
                    risk=float(np.mean(risks)),
                    stderr=float(np.std(risks, ddof=1) / math.sqrt(pgh_draws)),
                )
            )
            continue
        if strategy == "none":
            x_inv = 0.0
        elif strategy == "mean_plus_sigma":
            x_inv = prior.mu + prior.sigma
        elif strategy == "mean_minus_sigma":
            x_inv = prior.mu - prior.sigma
        elif isinstance(strategy, (int, float)):
            x_inv = float(strategy)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        points.append(RiskPoint(x_inv, t, alpha, bayes_risk_1d(prior, x_inv, t, alpha)))
    return points


@dataclass(frozen=True)
class MonteCarloRisk:
    """Monte Carlo risk estimate with its standard error and rejection count."""

    mean: float
    stderr: float
    n_used: int
    n_rejected: int


def trace_radius_inversion(
    cloud: ParticleCloud,
    time: float,
    rng: np.random.Generator,
    measurement: str = TWO_OUTCOME,
) -> ExperimentSpec:
    """Inversion offset from the cloud mean by sqrt(trace covariance).

    The offset direction is drawn uniformly at random on the sphere, since
    only the offset's length is pinned down by the strategy.
    """
    mean = posterior_mean(cloud)
    radius = math.sqrt(max(float(np.trace(posterior_covariance(cloud))), 0.0))
    direction = rng.standard_normal(cloud.dimension)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        direction = np.zeros(cloud.dimension)
        direction[0] = 1.0
        norm = 1.0
    return ExperimentSpec(IQLE, time, mean + radius * direction / norm, measurement)


def bayes_risk_nd(
    model: LikelihoodModel,
    cloud: ParticleCloud,
    exp: Union[ExperimentSpec, Callable[[np.random.Generator], ExperimentSpec]],
    alpha: float,
    n_mc: int,
    rng: np.random.Generator,
) -> MonteCarloRisk:
    """Monte Carlo expected posterior trace-covariance after one experiment.

    Each draw samples a true coupling vector from the cloud, draws a datum
    from the (optionally bit-flipped) data distribution, updates a copy of
    the cloud with the noiseless model, and records the posterior covariance
    trace.  `exp` may be a fixed experiment or a callable producing one per
    draw (for randomized inversion strategies).  Updates rejected for zero
    total weight are counted and excluded from the mean.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    if not 0.0 <= alpha <= 0.5:
        raise ValueError("bit-flip rate must lie in [0, 0.5]")
    traces = []
    rejected = 0
    for _ in range(n_mc):
        spec = exp(rng) if callable(exp) else exp
        if alpha > 0 and spec.measurement != TWO_OUTCOME:
            raise ValueError("bit-flip noise is defined for two-outcome experiments")
        truth = cloud.positions[rng.choice(cloud.size, p=cloud.weights)]
        dist = np.asarray(model.outcome_distribution(truth, spec), dtype=float)
        datum = int(rng.choice(dist.shape[0], p=np.clip(dist, 0, None) / dist.sum()))
        if alpha > 0 and rng.random() < alpha:
            datum = 1 - datum
        try:
            update = bayes_update(cloud, datum, spec, model)
        except ZeroTotalWeight:
            rejected += 1
            continue
        traces.append(float(np.trace(posterior_covariance(update.cloud))))
    if not traces:
        raise ZeroTotalWeight("every Monte Carlo update was rejected")
    traces = np.asarray(traces)
    stderr = float(np.std(traces, ddof=1) / math.sqrt(traces.size)) if traces.size > 1 else 0.0
    return MonteCarloRisk(float(np.mean(traces)), stderr, traces.size, rejected)
