"""Batch orchestration of learning trials.

One trial runs the full loop: design an experiment from the posterior, draw
an outcome at the hidden true couplings, reweight the cloud, resample when
the effective sample size sags, and record the quadratic loss.  Ensembles
run many trials on independent RNG streams and aggregate loss percentiles;
decay-exponent fits summarize how fast the loss shrinks.
"""

from __future__ import annotations

import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .config import ModelConfig, RunConfig
from .design import PghConfig, pgh
from .errors import DegenerateCloud, InsufficientData, ZeroTotalWeight
from .models import (
    TWO_OUTCOME,
    InteractionGraph,
    IsingModel,
    LikelihoodModel,
    SingleParameterModel,
)
from .simulate import LikelihoodEvaluator, sample_outcome
from .smc import (
    ParticleCloud,
    bayes_update,
    effective_sample_size,
    liu_west_resample,
    posterior_mean,
    quadratic_loss,
    uniform_cloud,
)


@dataclass(frozen=True)
class ExperimentRecord:
    """One completed experiment inside a trial."""

    index: int
    loss: float
    ess: float
    resampled: bool
    time: float
    sim_calls: int
    wall_clock: float
    skipped: bool = False


@dataclass(frozen=True)
class LossTrajectory:
    """Per-experiment records for one trial, plus trial-level outcome flags."""

    records: Tuple[ExperimentRecord, ...]
    truth: np.ndarray
    converged: bool = False
    zero_weight_skips: int = 0

    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of loss ~ amplitude * exp(-gamma * index)."""

    amplitude: float
    gamma: float
    r2: float
    window: Tuple[int, int]


@dataclass(frozen=True)
class TwoSegmentFit:
    """Piecewise log-linear fit with a single break point."""

    left: DecayFit
    right: DecayFit
    break_index: int
    r2_combined: float
    r2_single: float


@dataclass(frozen=True)
class EnsembleResult:
    trajectories: Tuple[LossTrajectory, ...]
    summary: np.ndarray  # columns: index, p25, p50, p75
    fits: Tuple[Optional[DecayFit], ...]
    config: RunConfig
    trial_seeds: Tuple[int, ...]


def build_model(model_config: ModelConfig) -> LikelihoodModel:
    """Instantiate the likelihood model described by a config block."""
    if model_config.kind == "single":
        return SingleParameterModel(box=model_config.box)
    if isinstance(model_config.graph, str):
        maker = getattr(InteractionGraph, model_config.graph)
        graph = maker(model_config.n)
    else:
        graph = InteractionGraph(model_config.n, tuple(model_config.graph))
    return IsingModel(graph, box=model_config.box)


def build_evaluator(config: RunConfig, model: Optional[LikelihoodModel] = None) -> LikelihoodEvaluator:
    model = model if model is not None else build_model(config.model)
    return LikelihoodEvaluator(
        model,
        mode=config.evaluator.mode,
        n_samp=config.evaluator.n_samp,
        noise=config.evaluator.noise,
    )


# Per-edge jitter applied to near-degenerate truth draws (variance 1e-4).
DEGENERATE_JITTER_STD = 1e-2


def draw_truth(config: RunConfig, model: LikelihoodModel, rng: np.random.Generator) -> np.ndarray:
    """Sample a true coupling vector per the config's conventions.

    Fixed-truth mode returns the configured vector.  Degenerate mode draws a
    single shared value uniformly on the box and adds small Gaussian jitter
    per edge (clipped back into the box); otherwise every coupling is drawn
    uniformly on the box.
    """
    if config.truth is not None:
        truth = np.asarray(config.truth, dtype=float)
        if truth.shape[0] != model.dimension:
            raise ValueError(
                f"configured truth has {truth.shape[0]} couplings, model needs {model.dimension}"
            )
        return truth
    box = model.box
    if config.model.degenerate_couplings:
        shared = rng.uniform(box[0, 0], box[0, 1])
        truth = shared + rng.normal(0.0, DEGENERATE_JITTER_STD, size=model.dimension)
        return np.clip(truth, box[:, 0], box[:, 1])
    return rng.uniform(box[:, 0], box[:, 1], size=model.dimension)


def draw_prior_cloud(
    config: RunConfig, model: LikelihoodModel, rng: np.random.Generator
) -> ParticleCloud:
    """Initial particle cloud matching the config's truth-generating prior.

    Plain runs start i.i.d. uniform over the parameter box.  Near-degenerate
    runs start with the same structure used to draw their truths: one shared
    value uniform on the box per particle, plus small per-edge jitter, so the
    learning problem is effectively one-dimensional until the shared value is
    pinned down.
    """
    if not config.model.degenerate_couplings:
        return uniform_cloud(model.box, config.particles, rng)
    box = model.box
    shared = rng.uniform(box[0, 0], box[0, 1], size=config.particles)
    positions = shared[:, None] + rng.normal(
        0.0, DEGENERATE_JITTER_STD, size=(config.particles, model.dimension)
    )
    return ParticleCloud(positions, np.full(config.particles, 1.0 / config.particles))


def _pgh_config(config: RunConfig) -> PghConfig:
    return PghConfig(
        kind=config.experiment.kind,
        t_max=config.pgh.t_max,
        min_separation=config.pgh.min_separation,
        max_redraws=config.pgh.max_redraws,
        measurement=config.experiment.measurement,
    )


def run_trial(
    config: RunConfig,
    truth,
    rng: np.random.Generator,
    model: Optional[LikelihoodModel] = None,
    designer: Optional[Callable] = None,
) -> LossTrajectory:
    """Run one learning trial of `config.n_experiments` experiments.

    `designer(cloud, rng) -> ExperimentSpec` defaults to the particle guess
    heuristic.  A zero-total-weight update is logged and skipped (the
    experiment still consumes an index); a collapsed cloud ends the trial
    early with the trajectory marked converged.
    """
    model = model if model is not None else build_model(config.model)
    evaluator = build_evaluator(config, model)
    truth = np.asarray(truth, dtype=float)
    if designer is None:
        pgh_cfg = _pgh_config(config)
        designer = lambda cloud, stream: pgh(cloud, pgh_cfg, stream)

    cloud = draw_prior_cloud(config, model, rng)
    records: List[ExperimentRecord] = []
    sim_calls = 0
    skips = 0
    converged = False

    for index in range(config.n_experiments):
        started = _time.perf_counter()
        try:
            spec = designer(cloud, rng)
        except DegenerateCloud:
            converged = True
            break
        datum = sample_outcome(model, truth, spec, rng)
        if config.bitflip_alpha > 0 and spec.measurement == TWO_OUTCOME:
            if rng.random() < config.bitflip_alpha:
                datum = 1 - datum
        skipped = False
        resampled = False
        try:
            update = bayes_update(
                cloud, datum, spec, evaluator, rng=rng,
                resample_threshold=config.resample.threshold,
            )
            sim_calls += evaluator.calls_per_update(cloud.size)
            cloud = update.cloud
            if update.resample_due:
                cloud = liu_west_resample(cloud, config.resample.a, rng)
                resampled = True
        except ZeroTotalWeight:
            sim_calls += evaluator.calls_per_update(cloud.size)
            skips += 1
            skipped = True
        records.append(
            ExperimentRecord(
                index=index,
                loss=quadratic_loss(posterior_mean(cloud), truth),
                ess=effective_sample_size(cloud),
                resampled=resampled,
                time=spec.time,
                sim_calls=sim_calls,
                wall_clock=_time.perf_counter() - started,
                skipped=skipped,
            )
        )
    return LossTrajectory(tuple(records), truth, converged, skips)


def _run_one_seeded_trial(args) -> LossTrajectory:
    config, seed = args
    rng = np.random.default_rng(seed)
    model = build_model(config.model)
    truth = draw_truth(config, model, rng)
    return run_trial(config, truth, rng, model=model)


def trial_seeds_for(config: RunConfig) -> Tuple[int, ...]:
    """Per-trial integer seeds derived deterministically from the master seed."""
    words = np.random.SeedSequence(config.seed).generate_state(config.trials, dtype=np.uint64)
    return tuple(int(w) for w in words)


def run_ensemble(
    config: RunConfig,
    threads: int = 1,
    trial_seeds: Optional[Sequence[int]] = None,
) -> EnsembleResult:
    """Run `config.trials` independent trials and aggregate loss percentiles.

    Each trial owns one integer seed; its truth draw and every random choice
    inside the trial come from that seed's stream, so a trajectory is a pure
    function of (config, seed) and permuting seeds permutes trajectories.
    `threads` counts worker processes (0 means one per CPU, 1 means inline).
    """
    if trial_seeds is None:
        trial_seeds = trial_seeds_for(config)
    if len(trial_seeds) != config.trials:
        raise ValueError(f"need {config.trials} trial seeds, got {len(trial_seeds)}")
    jobs = [(config, seed) for seed in trial_seeds]
    if threads == 1 or config.trials == 1:
        trajectories = [_run_one_seeded_trial(job) for job in jobs]
    else:
        workers = threads if threads > 0 else None
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(_run_one_seeded_trial, jobs))

    summary = summarize_losses(trajectories)
    fits = []
    for trajectory in trajectories:
        series = [(r.index, r.loss) for r in trajectory.records]
        try:
            fits.append(fit_decay(series, window=config.fit_window))
        except InsufficientData:
            fits.append(None)
    return EnsembleResult(
        tuple(trajectories), summary, tuple(fits), config, tuple(trial_seeds)
    )


def summarize_losses(trajectories: Sequence[LossTrajectory]) -> np.ndarray:
    """Rows (index, p25, p50, p75) across trials, linear-interpolated."""
    length = max((len(t) for t in trajectories), default=0)
    rows = np.empty((length, 4))
    for index in range(length):
        values = [t.records[index].loss for t in trajectories if len(t) > index]
        rows[index, 0] = index
        rows[index, 1:] = np.percentile(values, [25.0, 50.0, 75.0])
    return rows


def _window_points(series, window: float):
    points = [(int(i), float(loss)) for i, loss in series]
    start = int(math.floor(window * len(points)))
    usable = [(i, loss) for i, loss in points[start:] if loss > 0]
    if len(usable) < 5:
        raise InsufficientData(
            f"{len(usable)} positive points after the transient window; need 5"
        )
    indices = np.array([i for i, _ in usable], dtype=float)
    logs = np.log(np.array([loss for _, loss in usable]))
    return indices, logs


def _line_fit(indices: np.ndarray, logs: np.ndarray):
    slope, intercept = np.polyfit(indices, logs, 1)
    predicted = slope * indices + intercept
    residual = float(np.sum((logs - predicted) ** 2))
    total = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if total == 0.0 else 1.0 - residual / total
    return slope, intercept, r2, residual


def fit_decay(series, window: float = 0.1) -> DecayFit:
    """Fit ln(loss) vs experiment index with the leading transient dropped.

    `window` is the fraction of leading experiments excluded before the
    least-squares line fit; at least 5 positive-loss points must remain.
    """
    indices, logs = _window_points(series, window)
    slope, intercept, r2, _ = _line_fit(indices, logs)
    return DecayFit(
        amplitude=float(np.exp(intercept)),
        gamma=float(-slope),
        r2=float(r2),
        window=(int(indices[0]), int(indices[-1])),
    )


def fit_two_segment(series, window: float = 0.0, min_points: int = 5) -> TwoSegmentFit:
    """Best single-break piecewise log-linear fit of a loss series.

    Scans every break position leaving at least `min_points` on each side,
    refits both sides, and keeps the break with the highest combined r^2
    (computed against the pooled variance, so it is directly comparable to
    the single-line r^2 also returned).
    """
    indices, logs = _window_points(series, window)
    if indices.size < 2 * min_points:
        raise InsufficientData(
            f"{indices.size} points cannot support two segments of {min_points}"
        )
    _, _, r2_single, _ = _line_fit(indices, logs)
    total = float(np.sum((logs - logs.mean()) ** 2))

    best = None
    for cut in range(min_points, indices.size - min_points + 1):
        left = _line_fit(indices[:cut], logs[:cut])
        right = _line_fit(indices[cut:], logs[cut:])
        residual = left[3] + right[3]
        r2_combined = 1.0 if total == 0.0 else 1.0 - residual / total
        if best is None or r2_combined > best[0]:
            best = (r2_combined, cut, left, right)

    r2_combined, cut, left, right = best
    left_fit = DecayFit(
        amplitude=float(np.exp(left[1])),
        gamma=float(-left[0]),
        r2=float(left[2]),
        window=(int(indices[0]), int(indices[cut - 1])),
    )
    right_fit = DecayFit(
        amplitude=float(np.exp(right[1])),
        gamma=float(-right[0]),
        r2=float(right[2]),
        window=(int(indices[cut]), int(indices[-1])),
    )
    return TwoSegmentFit(
        left=left_fit,
        right=right_fit,
        break_index=int(indices[cut]),
        r2_combined=float(r2_combined),
        r2_single=float(r2_single),
    )


@dataclass(frozen=True)
class ScalingRow:
    n: int
    dimension: int
    median_gamma: float
    trials_fit: int


def scaling_study(
    base_config: RunConfig, n_values: Sequence[int], threads: int = 1
) -> Tuple[List[ScalingRow], List[EnsembleResult]]:
    """Median decay exponent versus model dimension across system sizes.

    Each size runs a full ensemble (with a size-specific sub-seed) and the
    per-trial decay exponents are reduced to their median.
    """
    if len(n_values) < 2:
        raise ValueError("need at least two system sizes")
    rows: List[ScalingRow] = []
    results: List[EnsembleResult] = []
    children = np.random.SeedSequence(base_config.seed).spawn(len(n_values))
    for child, n in zip(children, n_values):
        config = replace(
            base_config,
            model=replace(base_config.model, n=int(n)),
            seed=int(child.generate_state(1, dtype=np.uint64)[0]),
        )
        result = run_ensemble(config, threads=threads)
        gammas = [fit.gamma for fit in result.fits if fit is not None]
        if not gammas:
            raise InsufficientData(f"no usable decay fits at n={n}")
        rows.append(
            ScalingRow(
                n=int(n),
                dimension=build_model(config.model).dimension,
                median_gamma=float(np.median(gammas)),
                trials_fit=len(gammas),
            )
        )
        results.append(result)
    return rows, results
