"""Machine-readable result export.

Four files per run: trajectories.jsonl (one record per experiment per
trial), summary.csv (loss percentiles per experiment index), fits.csv
(per-trial decay fits), and meta.json (config echo, versions, seed).  All
floating-point numbers are written as decimals with 17 significant digits,
which round-trips IEEE doubles exactly and keeps reruns byte-comparable.
"""

from __future__ import annotations

import os
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .config import RunConfig, config_to_dict
from .harness import DecayFit, EnsembleResult, LossTrajectory


def format_float(value: float) -> str:
    return f"{value:.17g}"


def _json_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if value is None:
        return "null"
    escaped = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def dumps17(obj, indent: int = 0) -> str:
    """JSON text with floats rendered at 17 significant digits."""
    pad = " " * indent
    child = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{child}"{key}": {dumps17(value, indent + 2)}' for key, value in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ", ".join(dumps17(value, indent) for value in obj)
        return "[" + items + "]"
    return _json_scalar(obj)


def write_trajectories_jsonl(path, trajectories: Sequence[LossTrajectory]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for trial, trajectory in enumerate(trajectories):
            for record in trajectory.records:
                fields = {
                    "trial": trial,
                    "index": record.index,
                    "loss": record.loss,
                    "ess": record.ess,
                    "resampled": record.resampled,
                    "t": record.time,
                    "sim_calls": record.sim_calls,
                    "wall_clock": record.wall_clock,
                    "skipped": record.skipped,
                }
                pairs = ", ".join(
                    f'"{key}": {_json_scalar(value)}' for key, value in fields.items()
                )
                handle.write("{" + pairs + "}\n")


def write_summary_csv(path, summary: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("experiment_index,p25,p50,p75\n")
        for row in summary:
            handle.write(
                f"{int(row[0])},{format_float(row[1])},"
                f"{format_float(row[2])},{format_float(row[3])}\n"
            )


def write_fits_csv(path, fits: Sequence[Optional[DecayFit]]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("trial,A,gamma,r2\n")
        for trial, fit in enumerate(fits):
            if fit is None:
                handle.write(f"{trial},nan,nan,nan\n")
            else:
                handle.write(
                    f"{trial},{format_float(fit.amplitude)},"
                    f"{format_float(fit.gamma)},{format_float(fit.r2)}\n"
                )


def write_meta_json(path, config: RunConfig, trial_seeds: Sequence[int]) -> None:
    meta = {
        "config": config_to_dict(config),
        "seed": config.seed,
        "trial_seeds": list(trial_seeds),
        "versions": {
            "hamlearn": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps17(meta) + "\n")


def emit_results(result: EnsembleResult, out_dir) -> dict:
    """Write the four result files into `out_dir`; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "trajectories": os.path.join(out_dir, "trajectories.jsonl"),
        "summary": os.path.join(out_dir, "summary.csv"),
        "fits": os.path.join(out_dir, "fits.csv"),
        "meta": os.path.join(out_dir, "meta.json"),
    }
    write_trajectories_jsonl(paths["trajectories"], result.trajectories)
    write_summary_csv(paths["summary"], result.summary)
    write_fits_csv(paths["fits"], result.fits)
    write_meta_json(paths["meta"], result.config, result.trial_seeds)
    return paths
