"""Run configuration: schema, parsing, and emission.

Configs are JSON text with a fixed field set; unknown fields are rejected so
typos fail loudly.  `parse_config(emit_config(cfg))` round-trips exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple, Union

from .errors import SchemaError
from .models import EXPERIMENT_KINDS, FULL_BASIS, IQLE, MEASUREMENT_MODES
from .simulate import EVALUATOR_MODES, EXACT

GRAPH_FAMILIES = ("complete", "line")
MODEL_KINDS = ("ising", "single")


@dataclass(frozen=True)
class ModelConfig:
    """System under study: model family, graph, and parameter box.

    `graph` is a family name or an explicit edge list; `degenerate_couplings`
    switches the per-trial truth draw to one shared value on the box plus
    small Gaussian jitter (s.d. 0.01 per edge).
    """

    kind: str = "ising"
    graph: Union[str, Tuple[Tuple[int, int], ...]] = "complete"
    n: int = 3
    box: Tuple[float, float] = (-0.5, 0.5)
    degenerate_couplings: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = IQLE
    measurement: str = FULL_BASIS


@dataclass(frozen=True)
class ResampleConfig:
    a: float = 0.9
    threshold: float = 0.5


@dataclass(frozen=True)
class EvaluatorConfig:
    mode: str = EXACT
    n_samp: int = 100
    noise: float = 0.0


@dataclass(frozen=True)
class PghSettings:
    t_max: float = 1e6
    min_separation: float = 1e-12
    max_redraws: int = 100


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    particles: int = 2000
    resample: ResampleConfig = field(default_factory=ResampleConfig)
    evaluator: EvaluatorConfig = field(default_factory=EvaluatorConfig)
    bitflip_alpha: float = 0.0
    n_experiments: int = 100
    trials: int = 10
    seed: int = 0
    out: Optional[str] = None
    pgh: PghSettings = field(default_factory=PghSettings)
    fit_window: float = 0.1
    truth: Optional[Tuple[float, ...]] = None


def _fail(path: str, message: str) -> "SchemaError":
    return SchemaError(f"{path}: {message}")


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise _fail(path, f"expected an object, got {type(value).__name__}")
    return value


def _expect_int(value, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise _fail(path, f"must be at least {minimum}, got {value}")
    return value


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _expect_choice(value, path: str, choices) -> str:
    if value not in choices:
        raise _fail(path, f"expected one of {sorted(choices)}, got {value!r}")
    return value


def _expect_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise _fail(path, f"expected a boolean, got {value!r}")
    return value


def _check_unknown(data: dict, known, path: str) -> None:
    for key in data:
        if key not in known:
            raise _fail(f"{path}.{key}" if path else key, "unknown field")


def _parse_model(data: dict) -> ModelConfig:
    _check_unknown(data, {"kind", "graph", "n", "box", "degenerate_couplings"}, "model")
    kind = _expect_choice(data.get("kind", "ising"), "model.kind", MODEL_KINDS)
    graph = data.get("graph", "complete")
    if isinstance(graph, str):
        _expect_choice(graph, "model.graph", GRAPH_FAMILIES)
    elif isinstance(graph, (list, tuple)):
        try:
            graph = tuple((int(i), int(j)) for i, j in graph)
        except (TypeError, ValueError):
            raise _fail("model.graph", "edge list must contain [i, j] pairs")
    else:
        raise _fail("model.graph", f"expected a family name or edge list, got {graph!r}")
    n = _expect_int(data.get("n", 3), "model.n", minimum=2)
    box = data.get("box", (-0.5, 0.5))
    if not isinstance(box, (list, tuple)) or len(box) != 2:
        raise _fail("model.box", "expected [low, high]")
    low = _expect_number(box[0], "model.box[0]")
    high = _expect_number(box[1], "model.box[1]")
    if not low < high:
        raise _fail("model.box", f"low must be below high, got [{low}, {high}]")
    degenerate = _expect_bool(
        data.get("degenerate_couplings", False), "model.degenerate_couplings"
    )
    return ModelConfig(kind, graph, n, (low, high), degenerate)


def _parse_experiment(data: dict) -> ExperimentConfig:
    _check_unknown(data, {"kind", "measurement"}, "experiment")
    return ExperimentConfig(
        _expect_choice(data.get("kind", IQLE), "experiment.kind", EXPERIMENT_KINDS),
        _expect_choice(
            data.get("measurement", FULL_BASIS), "experiment.measurement", MEASUREMENT_MODES
        ),
    )


def _parse_resample(data: dict) -> ResampleConfig:
    _check_unknown(data, {"a", "threshold"}, "resample")
    a = _expect_number(data.get("a", 0.9), "resample.a")
    threshold = _expect_number(data.get("threshold", 0.5), "resample.threshold")
    if not 0.0 <= a <= 1.0:
        raise _fail("resample.a", f"must lie in [0, 1], got {a}")
    if not 0.0 < threshold <= 1.0:
        raise _fail("resample.threshold", f"must lie in (0, 1], got {threshold}")
    return ResampleConfig(a, threshold)


def _parse_evaluator(data: dict) -> EvaluatorConfig:
    _check_unknown(data, {"mode", "n_samp", "noise"}, "evaluator")
    mode = _expect_choice(data.get("mode", EXACT), "evaluator.mode", EVALUATOR_MODES)
    n_samp = _expect_int(data.get("n_samp", 100), "evaluator.n_samp", minimum=1)
    noise = _expect_number(data.get("noise", 0.0), "evaluator.noise")
    if noise < 0:
        raise _fail("evaluator.noise", f"must be nonnegative, got {noise}")
    return EvaluatorConfig(mode, n_samp, noise)


def _parse_pgh(data: dict) -> PghSettings:
    _check_unknown(data, {"t_max", "min_separation", "max_redraws"}, "pgh")
    t_max = _expect_number(data.get("t_max", 1e6), "pgh.t_max")
    min_sep = _expect_number(data.get("min_separation", 1e-12), "pgh.min_separation")
    redraws = _expect_int(data.get("max_redraws", 100), "pgh.max_redraws", minimum=1)
    if not t_max > 0:
        raise _fail("pgh.t_max", "must be positive")
    if not min_sep > 0:
        raise _fail("pgh.min_separation", "must be positive")
    return PghSettings(t_max, min_sep, redraws)


_TOP_FIELDS = {
    "model", "experiment", "particles", "resample", "evaluator", "bitflip_alpha",
    "n_experiments", "trials", "seed", "out", "pgh", "fit_window", "truth",
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate JSON configuration text into a RunConfig."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    data = _expect_mapping(data, "<config>")
    _check_unknown(data, _TOP_FIELDS, "")

    model = _parse_model(_expect_mapping(data.get("model", {}), "model"))
    experiment = _parse_experiment(_expect_mapping(data.get("experiment", {}), "experiment"))
    particles = _expect_int(data.get("particles", 2000), "particles", minimum=2)
    resample = _parse_resample(_expect_mapping(data.get("resample", {}), "resample"))
    evaluator = _parse_evaluator(_expect_mapping(data.get("evaluator", {}), "evaluator"))
    alpha = _expect_number(data.get("bitflip_alpha", 0.0), "bitflip_alpha")
    if not 0.0 <= alpha <= 0.5:
        raise _fail("bitflip_alpha", f"must lie in [0, 0.5], got {alpha}")
    n_experiments = _expect_int(data.get("n_experiments", 100), "n_experiments", minimum=1)
    trials = _expect_int(data.get("trials", 10), "trials", minimum=1)
    seed = _expect_int(data.get("seed", 0), "seed", minimum=0)
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise _fail("out", f"expected a path string or null, got {out!r}")
    pgh = _parse_pgh(_expect_mapping(data.get("pgh", {}), "pgh"))
    fit_window = _expect_number(data.get("fit_window", 0.1), "fit_window")
    if not 0.0 <= fit_window < 1.0:
        raise _fail("fit_window", f"must lie in [0, 1), got {fit_window}")
    truth = data.get("truth")
    if truth is not None:
        if not isinstance(truth, (list, tuple)):
            raise _fail("truth", "expected a list of couplings or null")
        truth = tuple(_expect_number(v, f"truth[{i}]") for i, v in enumerate(truth))

    return RunConfig(
        model=model,
        experiment=experiment,
        particles=particles,
        resample=resample,
        evaluator=evaluator,
        bitflip_alpha=alpha,
        n_experiments=n_experiments,
        trials=trials,
        seed=seed,
        out=out,
        pgh=pgh,
        fit_window=fit_window,
        truth=truth,
    )


def parse_config_file(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def config_to_dict(config: RunConfig) -> dict:
    """Plain-JSON view of a config (tuples become lists)."""
    data = asdict(config)
    data["model"]["box"] = list(config.model.box)
    if not isinstance(config.model.graph, str):
        data["model"]["graph"] = [list(edge) for edge in config.model.graph]
    if config.truth is not None:
        data["truth"] = list(config.truth)
    return data


def emit_config(config: RunConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2) + "\n"
