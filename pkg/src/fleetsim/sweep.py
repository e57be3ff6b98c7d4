"""Batch experiment driver: minimum-fleet search and scenario grids.

Both entry points hold the demand fixed across runs (same orders or the
same generator seed) so that fleet sizes and strategies are compared on
identical days, never on different demand draws.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path as FilePath
from typing import Optional, Sequence

from .data_files import bundled
from .engine import (
    Engine,
    MetricsReport,
    Mode,
    REPORT_SCALARS,
    ScenarioConfig,
    service_level_met,
)
from .errors import ConfigError, FleetSimError, MinFleetNotFound, SimulationStalled
from .impact import (
    BEV_BASELINE_KM_PER_DAY,
    BEV_RENEWABLE_BASELINE_G_PER_KM,
    BEV_US_BASELINE_G_PER_KM,
    GridMix,
    ICE_BASELINE_G_PER_KM,
    ICE_BASELINE_KM_PER_DAY,
    gco2_per_km,
    load_emission_model,
    reduction_vs_baseline,
)

LATE_WAIT_S = 2_400.0  # a delivery this old can no longer count as punctual

GRID_COLUMNS = (
    "scenario",
    "fleet_size",
    "range_km",
    "speed_kmh",
    "seed",
    *REPORT_SCALARS,
    "gco2_per_km",
    "red_vs_ice_pct",
    "red_vs_bev_renewable_pct",
    "error",
)


def _attempt(config: ScenarioConfig) -> Optional[MetricsReport]:
    """One batch run, abandoned as soon as the service level is out of reach.

    Punctuality needs at least 95% of orders under 40 minutes, so once more
    than 5% are already late (delivered late, or still waiting past the
    cutoff) the rest of the run cannot change the verdict.
    """
    engine = Engine(config)
    total = len(engine.orders)
    if total == 0:
        return engine.report()
    late_budget = int(0.05 * total)
    check_every = 120
    while engine.delivered_count < total:
        try:
            for _ in range(check_every):
                if engine.delivered_count >= total:
                    break
                engine.step()
        except SimulationStalled:
            return None  # this fleet cannot finish; a larger one may
        now = engine.clock_s
        late = sum(
            1
            for o in engine.orders
            if (
                o.delivered_at_s is not None
                and o.delivered_at_s - o.placed_at_s >= LATE_WAIT_S
            )
            or (o.delivered_at_s is None and now - o.placed_at_s >= LATE_WAIT_S)
        )
        if late > late_budget:
            return None
    return engine.report()


def find_min_fleet(
    base_config: ScenarioConfig,
    fleet_min: int,
    fleet_max: int,
    step: int = 10,
) -> int:
    """Smallest fleet size on the ascending grid that meets the service level.

    Every candidate runs the same demand and seed as base_config. The scan is
    linear because punctuality is not guaranteed monotone at fine grain.

    :raises MinFleetNotFound: fleet_max reached; carries the best result seen
    :raises ConfigError: empty or inverted scan grid
    """
    if fleet_min < 1 or fleet_min > fleet_max:
        raise ConfigError(f"need 1 <= fleet_min <= fleet_max, got [{fleet_min}, {fleet_max}]")
    if step < 1:
        raise ConfigError(f"step must be >= 1: {step}")
    best_pct = float("-inf")
    best_fleet: Optional[int] = None
    fleet = fleet_min
    while fleet <= fleet_max:
        report = _attempt(replace(base_config, fleet_size=fleet, mode=Mode.BATCH))
        if report is not None:
            if service_level_met(report):
                return fleet
            if report.pct_under_40min > best_pct:
                best_pct = report.pct_under_40min
                best_fleet = fleet
        fleet += step
    raise MinFleetNotFound(
        fleet_max,
        best_pct if best_fleet is not None else 0.0,
        best_fleet,
        detail=f"scanned {fleet_min}..{fleet_max} step {step}",
    )


# ----------------------------------------------------------------- grid runs


def _impact_cells(config: ScenarioConfig, report: MetricsReport) -> dict[str, str]:
    """gCO2/km for the run plus reductions against the two published anchors."""
    cells = {"gco2_per_km": "", "red_vs_ice_pct": "", "red_vs_bev_renewable_pct": ""}
    if report.total_km <= 0:
        return cells
    if config.scenario == "ICE":
        g = ICE_BASELINE_G_PER_KM
    elif config.scenario == "BEV":
        g = BEV_US_BASELINE_G_PER_KM
    else:
        model = load_emission_model(
            bundled("emission_coefficients.txt"),
            GridMix.US_MIX,
            battery_multiplier=2 if config.scenario == "FC" else 1,
        )
        g = gco2_per_km(
            model, config.fleet_size, config.vehicle_spec().range_km, report.total_km
        )
    cells["gco2_per_km"] = repr(g)
    cells["red_vs_ice_pct"] = repr(
        reduction_vs_baseline(
            g, report.total_km, ICE_BASELINE_G_PER_KM, ICE_BASELINE_KM_PER_DAY
        )
    )
    cells["red_vs_bev_renewable_pct"] = repr(
        reduction_vs_baseline(
            g,
            report.total_km,
            BEV_RENEWABLE_BASELINE_G_PER_KM,
            BEV_BASELINE_KM_PER_DAY,
        )
    )
    return cells


def _grid_row(indexed: tuple[int, ScenarioConfig]) -> tuple[int, dict[str, str]]:
    idx, config = indexed
    row = {name: "" for name in GRID_COLUMNS}
    row["scenario"] = config.scenario
    row["fleet_size"] = str(config.fleet_size)
    row["seed"] = str(config.seed)
    try:
        spec = config.vehicle_spec()
        row["range_km"] = repr(spec.range_km)
        row["speed_kmh"] = repr(spec.speed_kmh)
        report = Engine(replace(config, mode=Mode.BATCH)).run()
        for name in REPORT_SCALARS:
            row[name] = repr(getattr(report, name))
        row.update(_impact_cells(config, report))
    except FleetSimError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return idx, row


def run_grid(
    matrix: Sequence[ScenarioConfig], max_workers: Optional[int] = None
) -> list[dict[str, str]]:
    """Run every config and return one result row each, in input order.

    Failures land in the row's `error` column and leave the other rows
    untouched. Workers run in separate processes; the assembly order is
    fixed by the input index, so the parallelism degree never changes the
    output.
    """
    indexed = list(enumerate(matrix))
    if max_workers is not None and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_grid_row, indexed))
    else:
        results = [_grid_row(item) for item in indexed]
    results.sort(key=lambda pair: pair[0])
    return [row for _, row in results]


def grid_to_csv(rows: Sequence[dict[str, str]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=GRID_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_grid_csv(rows: Sequence[dict[str, str]], path: str | FilePath) -> None:
    FilePath(path).write_text(grid_to_csv(rows), encoding="utf-8")
