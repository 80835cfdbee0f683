"""Scenario runs: execute the experiment list, assemble and write the report.

Reports are reproducible: given the same config and seed, two runs produce
identical JSON except for the wall-time entries (their keys all end in
``_seconds`` and sit under ``timing`` blocks, so they are easy to strip).
Output files are written atomically (temp file + rename).  The process exit
contract is 0 iff every experiment marked ``assert`` passed.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .experiments import RunContext, run_experiment
from .fields import build_frame

SEED_ENV_VAR = "TORLINK_SEED"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json_atomic(path: Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def strip_timing(payload: dict) -> dict:
    """A copy of a report with every timing block removed (for comparisons)."""

    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items() if k != "timing"}
        if isinstance(obj, list):
            return [clean(v) for v in obj]
        return obj

    return clean(payload)


def run(
    config: ScenarioConfig,
    out_dir: Optional[Path] = None,
    jobs: int = 1,
) -> tuple[dict, int]:
    """Run every experiment of a scenario config; return (report, exit_code).

    Experiments may execute concurrently (``jobs > 1``); the report is always
    assembled in config order, so the output does not depend on scheduling.
    The seed recorded in the report is the config seed unless the TORLINK_SEED
    environment variable overrides it.
    """
    seed = config.seed
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        seed = int(env_seed)

    out_path = Path(out_dir) if out_dir is not None else None
    frame = build_frame(config.pair)
    ctx = RunContext(config=config, frame=frame, out_dir=out_path, base_seed=seed)

    t_start = time.perf_counter()
    results: list[dict] = [None] * len(config.experiments)  # type: ignore[list-item]

    def job(i_spec):
        i, spec = i_spec
        t0 = time.perf_counter()
        res = run_experiment(ctx, spec)
        res["timing"] = {"wall_seconds": time.perf_counter() - t0}
        return i, res

    if jobs > 1 and len(config.experiments) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for i, res in pool.map(job, enumerate(config.experiments)):
                results[i] = res
    else:
        for item in enumerate(config.experiments):
            i, res = job(item)
            results[i] = res

    asserted = [r for r in results if r["asserted"]]
    # measurements (passed = None) never fail a run; explicit False does
    overall = all(r.get("passed") is not False for r in asserted)
    report = {
        "toolkit": {"name": "torlink", "version": __version__},
        "scenario": config.name,
        "seed": seed,
        "config_echo": config.echo,
        "experiments": results,
        "overall_pass": overall,
        "timing": {"wall_seconds": time.perf_counter() - t_start},
    }
    if out_path is not None:
        write_json_atomic(out_path / f"{config.name}_report.json", report)
    return report, (0 if overall else 1)
