"""Experiment sweeps: horizon, potential-start count, recharge cap, and
algorithm comparison, emitting CSV tables and stacked-bar SVG charts."""

from __future__ import annotations

import dataclasses
import io
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from .errors import InfeasibleError, PlanningError, SolverTimeout
from .executor import efficiency
from .greedy import plan_greedy
from .oneshot import plan_oneshot
from .render import bar_chart_svg
from .scenario import Scenario
from .smt import SolverConfig
from .twoshot import plan_twoshot

SWEEP_KINDS = ("T", "P", "delta_max", "algo-compare")
DEFAULT_DELTA_MAX_VALUES = (4, 6, 8, 10, 14)


def _with(scenario: Scenario, **changes) -> Scenario:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return dataclasses.replace(scenario, **changes)


def _plan(algo: str, scenario: Scenario, config: SolverConfig):
    if algo == "greedy":
        return plan_greedy(scenario)
    if algo == "oneshot":
        return plan_oneshot(scenario, config)
    if algo == "twoshot":
        bundle, _p1 = plan_twoshot(scenario, config)
        return bundle
    raise ValueError(f"unknown algorithm {algo!r}")


def _cell(algo: str, scenario: Scenario, config: SolverConfig, label, x_key: str) -> dict:
    start = time.monotonic()
    status = "ok"
    row = {
        x_key: label,
        "algo": algo,
        "horizon": scenario.horizon,
        "extended_horizon": None,
        "efficiency": float("nan"),
        "work_pct": 0.0,
        "recharge_pct": 0.0,
        "total_wait": None,
        "recharger_cost": None,
    }
    try:
        bundle = _plan(algo, scenario, config)
        report = efficiency(bundle, scenario)
        row.update(
            extended_horizon=bundle.extended_horizon,
            efficiency=report.efficiency,
            work_pct=report.work_pct,
            recharge_pct=report.recharge_pct,
            total_wait=report.total_wait,
            recharger_cost=report.recharger_cost,
        )
    except SolverTimeout:
        status = "timeout"
    except (InfeasibleError, PlanningError):
        status = "infeasible"
    row["status"] = status
    row["runtime_secs"] = round(time.monotonic() - start, 2)
    return row


def run_sweep(
    kind: str,
    scenario: Scenario,
    values: Optional[list] = None,
    algo: str = "twoshot",
    config: SolverConfig = SolverConfig(),
    jobs: int = 1,
    seed: int = 0,
) -> list[dict]:
    """One row per sweep value (or per algorithm for kind 'algo-compare')."""
    if kind == "T":
        values = values or [20, 25, 30]
        cells = [(algo, _with(scenario, horizon=int(v)), int(v), "T") for v in values]
    elif kind == "P":
        values = values or [4, 8, 12, 16]
        cells = []
        for v in values:
            k = int(v)
            if k > len(scenario.potential_starts):
                k = len(scenario.potential_starts)
            cells.append(
                (algo, _with(scenario, potential_starts=scenario.potential_starts[:k]),
                 k, "P")
            )
    elif kind == "delta_max":
        values = values or list(DEFAULT_DELTA_MAX_VALUES)
        cells = [(algo, _with(scenario, delta_max=int(v)), int(v), "delta_max")
                 for v in values]
    elif kind == "algo-compare":
        algos = [str(v) for v in (values or ["greedy", "twoshot"])]
        cells = [(a, scenario, a, "algo") for a in algos]
    else:
        raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")

    x_key = cells[0][3]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(
                lambda c: _cell(c[0], c[1], config, c[2], c[3]), cells
            ))
    else:
        rows = [_cell(a, s, config, label, key) for a, s, label, key in cells]
    return rows


def rows_to_csv(rows: list[dict], scenario: Scenario, config: SolverConfig,
                seed: int) -> str:
    """CSV with a reproducibility header (scenario digest, config, seed)."""
    import csv

    buf = io.StringIO()
    cmd = " ".join(config.resolved_command())
    buf.write(f"# scenario_digest={scenario.digest()} "
              f"solver={cmd!r} timeout_secs={config.timeout_secs} seed={seed}\n")
    if not rows:
        return buf.getvalue()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_sweep_outputs(rows: list[dict], scenario: Scenario, config: SolverConfig,
                        seed: int, kind: str, out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"sweep_{kind.replace('-', '_')}.csv"
    csv_path.write_text(rows_to_csv(rows, scenario, config, seed))
    x_key = {"T": "T", "P": "P", "delta_max": "delta_max", "algo-compare": "algo"}[kind]
    svg_path = out_dir / f"sweep_{kind.replace('-', '_')}.svg"
    plotted = [r for r in rows if r["status"] == "ok"]
    svg_path.write_text(bar_chart_svg(plotted, x_key, f"efficiency vs {x_key}"))
    return csv_path, svg_path
