"""Command-line entry points.

Four subcommands: `simulate` runs one batch scenario and prints the report
as JSON, `minfleet` searches for the smallest fleet meeting the service
level, `grid` runs a scenario matrix into a CSV, and `serve` hosts a live
steering session. Scenario inputs come from a key-value config file, from
flags, or both (flags win). A config path that does not exist on disk is
looked up among the bundled data files, so the shipped desk scenario can
be addressed by bare name.

Exit codes: 0 on success, 2 when a fleet search exhausts its range, 1 on
any other error.
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path as FilePath
from typing import Optional

import click

from .data_files import bundled
from .dispatch import DispatchPolicy, PolicyKind
from .engine import (
    Engine,
    Mode,
    SCENARIO_NAMES,
    ScenarioConfig,
    report_csv_header,
    report_to_csv_row,
    report_to_json,
    write_trace_csv,
)
from .errors import ConfigError, FleetSimError, MinFleetNotFound
from .sweep import find_min_fleet, grid_to_csv, run_grid, write_grid_csv

_INT_KEYS = {"fleet_size", "seed", "candidate_count"}
_FLOAT_KEYS = {
    "speed_kmh",
    "range_km",
    "min_level_frac",
    "full_recharge_s",
    "swap_s",
    "tick_s",
    "live_drop_after_s",
    "battery_exponent",
}
_PATH_KEYS = {"network", "stations", "orders", "profile"}
_STR_KEYS = {"scenario", "mode", "policy_kind"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _PATH_KEYS | _STR_KEYS


def resolve_config_path(value: str) -> FilePath:
    """A real path wins; otherwise fall back to the bundled data files."""
    path = FilePath(value)
    if path.exists():
        return path
    try:
        return bundled(path.name)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {value} (not on disk, not bundled)")


def load_config_file(path: str | FilePath) -> ScenarioConfig:
    """Parse `key = value` lines into a ScenarioConfig.

    Comments start with '#'. Relative data paths are resolved against the
    config file's own directory, so a config can sit next to its data.

    :raises ConfigError: unknown key, bad value, or unreadable file
    """
    path = resolve_config_path(str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")

    raw: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{line_no}: expected key = value, got {body!r}")
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"{path}:{line_no}: empty value for {key!r}")
        raw[key] = value

    kwargs: dict = {}
    try:
        for key in _INT_KEYS & raw.keys() - {"candidate_count"}:
            kwargs[key] = int(raw[key])
        for key in _FLOAT_KEYS & raw.keys() - {"battery_exponent"}:
            kwargs[key] = float(raw[key])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")
    if "scenario" in raw:
        kwargs["scenario"] = raw["scenario"]
    if "mode" in raw:
        try:
            kwargs["mode"] = Mode(raw["mode"])
        except ValueError:
            raise ConfigError(f"{path}: mode must be Batch or Live, got {raw['mode']!r}")
    base_dir = path.parent
    for key in _PATH_KEYS & raw.keys():
        data_path = FilePath(raw[key])
        if not data_path.is_absolute():
            data_path = base_dir / data_path
        if key == "profile":
            from .demand import load_profile

            kwargs["profile"] = load_profile(data_path)
        else:
            kwargs[key] = data_path

    policy_keys = {"policy_kind", "candidate_count", "battery_exponent"} & raw.keys()
    if policy_keys:
        scenario = kwargs.get("scenario", "CC")
        default = ScenarioConfig(scenario=scenario).dispatch_policy()
        try:
            kind = (
                PolicyKind(raw["policy_kind"]) if "policy_kind" in raw else default.kind
            )
            kwargs["policy"] = DispatchPolicy(
                kind=kind,
                candidate_count=int(raw.get("candidate_count", default.candidate_count)),
                battery_exponent=float(
                    raw.get("battery_exponent", default.battery_exponent)
                ),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}")

    return ScenarioConfig(**kwargs)


def _apply_flag_overrides(
    config: Optional[ScenarioConfig],
    scenario: Optional[str],
    strategy: Optional[str],
    fleet: Optional[int],
    battery_km: Optional[float],
    speed_kmh: Optional[float],
    seed: Optional[int],
) -> ScenarioConfig:
    if scenario is not None and strategy is not None and scenario != strategy:
        raise ConfigError(
            f"--scenario {scenario} and --strategy {strategy} disagree; pass one"
        )
    picked = scenario if scenario is not None else strategy
    if config is None:
        if picked is None:
            raise ConfigError("no scenario given; pass --config or --scenario")
        config = ScenarioConfig(scenario=picked)
    elif picked is not None:
        config = replace(config, scenario=picked)
    if fleet is not None:
        config = replace(config, fleet_size=fleet)
    if battery_km is not None:
        config = replace(config, range_km=battery_km)
    if speed_kmh is not None:
        config = replace(config, speed_kmh=speed_kmh)
    if seed is not None:
        config = replace(config, seed=seed)
    return config


def _scenario_flags(fn):
    fn = click.option("--config", "config_path", type=str, default=None,
                      help="key = value scenario file")(fn)
    fn = click.option("--scenario", type=click.Choice(SCENARIO_NAMES), default=None)(fn)
    fn = click.option("--strategy", type=click.Choice(SCENARIO_NAMES), default=None,
                      help="alias for --scenario")(fn)
    fn = click.option("--fleet", type=int, default=None)(fn)
    fn = click.option("--battery-km", type=float, default=None)(fn)
    fn = click.option("--speed-kmh", type=float, default=None)(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    return fn


def _build_config(config_path, scenario, strategy, fleet, battery_km, speed_kmh, seed):
    base = load_config_file(config_path) if config_path else None
    return _apply_flag_overrides(base, scenario, strategy, fleet, battery_km, speed_kmh, seed)


class _ExitMappedGroup(click.Group):
    """Map every failure onto the documented exit codes."""

    def main(self, *args, standalone_mode=True, **kwargs):
        if not standalone_mode:
            return super().main(*args, standalone_mode=False, **kwargs)
        try:
            super().main(*args, standalone_mode=False, **kwargs)
            code = 0
        except click.exceptions.Exit as exc:
            code = exc.exit_code
        except click.ClickException as exc:
            exc.show()
            code = 1
        except click.Abort:
            click.echo("aborted", err=True)
            code = 1
        except MinFleetNotFound as exc:
            click.echo(f"error: {exc}", err=True)
            code = 2
        except FleetSimError as exc:
            click.echo(f"error: {exc}", err=True)
            code = 1
        sys.exit(code)


@click.group(cls=_ExitMappedGroup)
def main():
    """Delivery-fleet simulator: batch runs, fleet sizing, live sessions."""


@main.command()
@_scenario_flags
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="write the report as a one-row CSV")
@click.option("--trace", type=click.Path(dir_okay=False), default=None,
              help="write the full state-change trace as CSV")
def simulate(config_path, scenario, strategy, fleet, battery_km, speed_kmh, seed, out, trace):
    """Run one scenario to completion and print the report as JSON."""
    config = _build_config(config_path, scenario, strategy, fleet, battery_km, speed_kmh, seed)
    if config.mode is not Mode.BATCH:
        raise ConfigError("simulate runs Batch configs; use `serve` for live sessions")
    engine = Engine(config)
    report = engine.run()
    if out:
        FilePath(out).write_text(
            report_csv_header() + "\n" + report_to_csv_row(report) + "\n",
            encoding="utf-8",
        )
    if trace:
        write_trace_csv(engine.trace, trace)
    click.echo(report_to_json(report))


@main.command()
@_scenario_flags
@click.option("--fleet-min", type=int, default=10, show_default=True)
@click.option("--fleet-max", type=int, default=300, show_default=True)
@click.option("--step", type=int, default=10, show_default=True)
def minfleet(config_path, scenario, strategy, fleet, battery_km, speed_kmh, seed,
             fleet_min, fleet_max, step):
    """Print the smallest fleet size that meets the service level."""
    config = _build_config(config_path, scenario, strategy, fleet, battery_km, speed_kmh, seed)
    found = find_min_fleet(config, fleet_min=fleet_min, fleet_max=fleet_max, step=step)
    click.echo(str(found))


def _split(values: Optional[str], cast):
    if values is None:
        return [None]
    try:
        return [cast(v.strip()) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list value {values!r}: {exc}")


@main.command()
@click.option("--config", "config_path", type=str, default=None)
@click.option("--strategy", type=str, default=None, help="comma-separated scenario list")
@click.option("--scenario", type=str, default=None, help="alias for --strategy")
@click.option("--fleet", type=str, default=None, help="comma-separated fleet sizes")
@click.option("--battery-km", type=str, default=None, help="comma-separated pack sizes")
@click.option("--speed-kmh", type=str, default=None, help="comma-separated speeds")
@click.option("--seed", type=str, default=None, help="comma-separated seeds")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--workers", type=int, default=None, help="parallel worker processes")
def grid(config_path, strategy, scenario, fleet, battery_km, speed_kmh, seed, out, workers):
    """Run the cartesian product of the listed values; one CSV row per run."""
    if strategy is not None and scenario is not None:
        raise ConfigError("--scenario and --strategy are aliases here; pass one")
    base = load_config_file(config_path) if config_path else None
    matrix = []
    for scen in _split(strategy if strategy is not None else scenario, str):
        for rng in _split(battery_km, float):
            for spd in _split(speed_kmh, float):
                for flt in _split(fleet, int):
                    for sd in _split(seed, int):
                        matrix.append(
                            _apply_flag_overrides(base, scen, None, flt, rng, spd, sd)
                        )
    rows = run_grid(matrix, max_workers=workers)
    if out:
        write_grid_csv(rows, out)
    else:
        click.echo(grid_to_csv(rows), nl=False)


@main.command()
@click.option("--config", "config_path", type=str, default="desk_live.cfg", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option(
    "--ui",
    "ui_dir",
    type=click.Path(exists=True, file_okay=False),
    default=None,
    help="directory with a built dashboard, served at /",
)
def serve(config_path, port, ui_dir):
    """Host a live steering session over HTTP and WebSocket."""
    from .server import run_server

    run_server(load_config_file(config_path), port=port, static_dir=ui_dir)


if __name__ == "__main__":
    main()
