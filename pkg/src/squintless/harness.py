"""Experiment drivers: optimization runs, band sweeps, runtime benchmarks
and derivative audits, writing layout files, CSV and JSON summaries."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import trim_mean

from .alg_sgda import default_steps, run_alg2, sgda_inner
from .alg_sv import RunState, run_alg1, sv_sweep
from .baselines import fpa_layout, run_pso
from .channel import gain_sq_grid, layout_violations
from .config import ConfigError, ExperimentConfig
from .verify import AuditResult, run_all

LAYOUT_HEADER = "# squintless-layout v1"
TRACE_COLUMNS = ("iteration", "objective_min_gain_sq", "objective_min_gain", "wall_ms")
BENCH_COLUMNS = ("L", "alg1_ms_per_bcd_iter", "alg2_ms_per_bcd_iter")


class LayoutFormatError(ValueError):
    pass


# layout files

def format_layout(positions) -> str:
    lines = [LAYOUT_HEADER]
    lines += [f"{y:.17g} {z:.17g}" for y, z in np.asarray(positions, dtype=float)]
    return "\n".join(lines) + "\n"


def write_layout(path, positions) -> None:
    Path(path).write_text(format_layout(positions), encoding="ascii")


def parse_layout(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or lines[0] != LAYOUT_HEADER:
        raise LayoutFormatError(f"missing header line {LAYOUT_HEADER!r}")
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        if not ln:
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise LayoutFormatError(f"line {k}: expected 'y z', got {ln!r}")
        try:
            rows.append([float(parts[0]), float(parts[1])])
        except ValueError:
            raise LayoutFormatError(f"line {k}: non-numeric coordinate in {ln!r}") from None
    if not rows:
        raise LayoutFormatError("layout has no antennas")
    return np.array(rows)


def read_layout(path) -> np.ndarray:
    return parse_layout(Path(path).read_text(encoding="ascii"))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# optimize

@dataclass
class RunResult:
    algorithm: str
    positions: np.ndarray
    trace: list[tuple]
    iterations: int
    total_ms: float
    converged: bool

    @property
    def objective(self) -> float:
        return self.trace[-1][1]


def initial_layout(cfg: ExperimentConfig) -> np.ndarray:
    """Uniform grid used as the starting point for the iterative solvers."""
    return fpa_layout(cfg.array(), allow_rectangular=True)


def optimize(cfg: ExperimentConfig, algorithm: str | None = None, init=None) -> RunResult:
    """Run one algorithm and return its layout and trace rows."""
    alg = algorithm or cfg.algorithm
    if alg not in ("sv", "sgda", "pso", "fpa"):
        raise ConfigError("algorithm", f"unknown algorithm {alg!r}")
    geom, array, grid = cfg.geometry(), cfg.array(), cfg.grid()
    p0 = initial_layout(cfg) if init is None else np.asarray(init, dtype=float)
    if alg == "fpa":
        obj = float(gain_sq_grid(p0, geom, grid).min())
        return RunResult(alg, p0, [(0, obj, math.sqrt(obj), 0.0)], 0, 0.0, True)
    if alg == "pso":
        res = run_pso(geom, array, grid, cfg.pso_params())
        trace = [(n, o, math.sqrt(o) if o >= 0 else math.nan, ms)
                 for n, (o, ms) in enumerate(zip(res.objective_trace, res.wall_ms))]
        return RunResult(alg, res.positions, trace, len(trace) - 1, float(sum(res.wall_ms)), True)
    if alg == "sv":
        state: RunState = run_alg1(p0, geom, array, grid, cfg.stopping_rule(), backend=cfg.sv_backend)
    else:
        state = run_alg2(p0, geom, array, grid, cfg.sgda_params(), cfg.stopping_rule())
    return RunResult(alg, state.positions, list(state.records()), state.iteration,
                     float(sum(state.wall_ms)), state.converged)


def summary_record(cfg: ExperimentConfig, res: RunResult) -> dict:
    array = cfg.array()
    obj = res.objective
    return {
        "algorithm": res.algorithm,
        "final_objective_min_gain_sq": obj,
        "final_objective_min_gain": math.sqrt(obj),
        "final_normalized_min_gain": math.sqrt(obj) / array.m_count,
        "iterations": res.iterations,
        "total_ms": res.total_ms,
        "converged": res.converged,
        "feasible": not layout_violations(res.positions, array),
        "config": cfg.to_dict(),
        "config_ini": cfg.to_ini(),
    }


def cmd_optimize(cfg: ExperimentConfig, out_dir=None, algorithm: str | None = None) -> dict:
    """Run ``algorithm`` and write ``layout_<alg>.txt``, ``trace_<alg>.csv``
    and ``summary_<alg>.json`` into ``out_dir`` (default ``cfg.out``).

    Returns the summary record with the artifact paths added.
    """
    res = optimize(cfg, algorithm)
    problems = layout_violations(res.positions, cfg.array())
    if problems:
        raise RuntimeError(f"{res.algorithm} produced an infeasible layout: {'; '.join(problems)}")
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "layout": out / f"layout_{res.algorithm}.txt",
        "trace": out / f"trace_{res.algorithm}.csv",
        "summary": out / f"summary_{res.algorithm}.json",
    }
    write_layout(paths["layout"], res.positions)
    _write_csv(paths["trace"], TRACE_COLUMNS, res.trace)
    summary = summary_record(cfg, res)
    paths["summary"].write_text(json.dumps(summary, indent=2) + "\n", encoding="ascii")
    return {**summary, "paths": {k: str(v) for k, v in paths.items()}}


# sweep-gain

def sweep_gain(cfg: ExperimentConfig, layouts) -> tuple[list[str], list[list[float]]]:
    """Gain of each layout at every subcarrier, raw then normalized by ``M``."""
    geom, array, grid = cfg.geometry(), cfg.array(), cfg.grid()
    gains = []
    for k, p in enumerate(layouts, start=1):
        problems = layout_violations(p, array)
        if problems:
            raise ConfigError(f"layout_{k}", "infeasible: " + "; ".join(problems))
        gains.append(np.sqrt(gain_sq_grid(p, geom, grid)))
    n = len(gains)
    header = ["f_l"]
    header += [f"gain_layout_{k}" for k in range(1, n + 1)]
    header += [f"normalized_gain_layout_{k}" for k in range(1, n + 1)]
    rows = []
    for l, f in enumerate(grid.freqs):
        g = [gains[k][l] for k in range(n)]
        rows.append([f, *g, *(x / array.m_count for x in g)])
    return header, rows


def cmd_sweep_gain(cfg: ExperimentConfig, layout_files, out_path=None) -> Path:
    layouts = []
    for k, path in enumerate(layout_files, start=1):
        try:
            layouts.append(read_layout(path))
        except (OSError, LayoutFormatError) as exc:
            raise ConfigError(f"layout_{k}", f"{path}: {exc}") from None
    header, rows = sweep_gain(cfg, layouts)
    out = Path(out_path) if out_path is not None else Path(cfg.out) / "sweep_gain.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, header, rows)
    return out


# bench-runtime

def time_sweeps(cfg: ExperimentConfig, algorithm: str, timed: int = 5,
                trim: float = 0.2) -> float:
    """Trimmed-mean wall time (ms) of one BCD sweep after a warm-up sweep.

    Sweeps run back to back from the initial grid with no stopping test, so
    every algorithm does ``1 + timed`` sweeps regardless of convergence.
    """
    geom, array, grid = cfg.geometry(), cfg.array(), cfg.grid()
    p = initial_layout(cfg)
    if algorithm == "sv":
        def sweep():
            sv_sweep(p, geom, array, grid, cfg.sv_backend)
    elif algorithm == "sgda":
        params = cfg.sgda_params()
        rng = np.random.default_rng(params.seed)
        eta_t, eta_f = default_steps(p, geom, array, grid)
        eta_t = params.eta_t if params.eta_t is not None else eta_t
        eta_f = params.eta_f if params.eta_f is not None else eta_f

        def sweep():
            for m in range(array.m_count):
                p[m] = sgda_inner(m, p, geom, array, grid, params, rng, eta_t, eta_f).t
    else:
        raise ConfigError("algorithm", f"cannot benchmark {algorithm!r}")
    sweep()
    times = []
    for _ in range(timed):
        t0 = time.perf_counter()
        sweep()
        times.append(1e3 * (time.perf_counter() - t0))
    return float(trim_mean(times, trim))


def bench_runtime(cfg: ExperimentConfig, l_values, timed: int = 5) -> list[tuple]:
    l_values = [int(v) for v in l_values]
    if not l_values:
        raise ConfigError("l_values", "at least one L is required")
    if any(b <= a for a, b in zip(l_values, l_values[1:])):
        raise ConfigError("l_values", "must be strictly ascending")
    if timed < 5:
        raise ConfigError("timed", "at least 5 timed sweeps are required")
    rows = []
    for L in l_values:
        c = cfg.replace(l_count=L)
        rows.append((L, time_sweeps(c, "sv", timed), time_sweeps(c, "sgda", timed)))
    return rows


def cmd_bench_runtime(cfg: ExperimentConfig, l_values, out_path=None, timed: int = 5) -> Path:
    rows = bench_runtime(cfg, l_values, timed)
    out = Path(out_path) if out_path is not None else Path(cfg.out) / "bench_runtime.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, BENCH_COLUMNS, rows)
    return out


# check-derivatives

def cmd_check_derivatives(cfg: ExperimentConfig, trials: int = 100,
                          seed: int | None = None) -> list[AuditResult]:
    if trials < 1:
        raise ConfigError("trials", "must be >= 1")
    return run_all(cfg.geometry(), cfg.array(), cfg.grid(), trials=trials,
                   seed=cfg.seed if seed is None else seed)
