"""Life-cycle CO2 accounting for a delivery fleet.

The per-km intensity spreads the amortized manufacturing burden of the
vehicles and their batteries over the kilometres actually driven that day,
then adds the use-phase grams of the electricity (or fuel) itself:

    (fleet * (vehicle_g_day + multiplier * battery_g_day(range)) + use_g_km * km) / km

Swap-based fleets carry a battery multiplier of 2: each vehicle effectively
owns a second pack circulating through the swap stations. Coefficients are
config inputs; the bundled set is illustrative, fitted to published fleet
numbers, and clearly labeled as such.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path as FilePath
from typing import Iterable

from .errors import ConfigError, NonPositiveInput, ParseError, ZeroDistance

# Reference car fleets serving the same demand, used by the reduction
# columns: (grams CO2 per km, km driven per day by the whole fleet).
ICE_BASELINE_G_PER_KM = 161.97
ICE_BASELINE_KM_PER_DAY = 10_090.0
BEV_US_BASELINE_G_PER_KM = 107.53
BEV_RENEWABLE_BASELINE_G_PER_KM = 53.85
BEV_BASELINE_KM_PER_DAY = 8_682.0


class GridMix(Enum):
    US_MIX = "USMix"
    RENEWABLE = "Renewable"


@dataclass(frozen=True)
class EmissionModel:
    """Amortized + use-phase emission coefficients for one grid mix."""

    per_km_g: float
    per_vehicle_day_g: float
    per_battery_range_day_g: float  # grams per day, per km of battery range
    battery_multiplier: int = 1
    grid: GridMix = GridMix.US_MIX

    def __post_init__(self):
        for name in ("per_km_g", "per_vehicle_day_g", "per_battery_range_day_g"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.battery_multiplier not in (1, 2):
            raise ValueError(f"battery_multiplier must be 1 or 2: {self.battery_multiplier}")

    def per_battery_day_g(self, range_km: float) -> float:
        return self.per_battery_range_day_g * range_km


def gco2_per_km(
    model: EmissionModel, fleet_size: int, range_km: float, total_km: float
) -> float:
    """Grams of CO2 per km for one day of fleet operation."""
    if total_km <= 0.0:
        raise ZeroDistance(f"cannot amortize over {total_km} km")
    amortized = fleet_size * (
        model.per_vehicle_day_g
        + model.battery_multiplier * model.per_battery_day_g(range_km)
    )
    return (amortized + model.per_km_g * total_km) / total_km


def reduction_vs_baseline(
    g_scenario: float, km_scenario: float, g_base: float, km_base: float
) -> float:
    """Percent drop in total daily grams versus a baseline fleet.

    Positive means the scenario emits less in total than the baseline,
    comparing g/km weighted by the km each fleet actually drives.
    """
    for label, value in (
        ("g_scenario", g_scenario),
        ("km_scenario", km_scenario),
        ("g_base", g_base),
        ("km_base", km_base),
    ):
        if value <= 0.0:
            raise NonPositiveInput(f"{label} must be > 0: {value}")
    return 100.0 * (1.0 - (g_scenario * km_scenario) / (g_base * km_base))


def load_emission_model(
    source: str | FilePath | Iterable[str],
    grid: GridMix = GridMix.US_MIX,
    battery_multiplier: int = 1,
) -> EmissionModel:
    """Read a coefficient file and build the model for one grid mix.

    The file is `key = value` text with `#` comments. Keys are prefixed by
    the grid set they belong to, e.g. ``us_mix.use_phase_g_per_km``.
    """
    values = _parse_kv(source)
    prefix = {GridMix.US_MIX: "us_mix", GridMix.RENEWABLE: "renewable"}[grid]
    try:
        return EmissionModel(
            per_km_g=values[f"{prefix}.use_phase_g_per_km"],
            per_vehicle_day_g=values[f"{prefix}.vehicle_g_per_day"],
            per_battery_range_day_g=values[f"{prefix}.battery_g_per_range_km_day"],
            battery_multiplier=battery_multiplier,
            grid=grid,
        )
    except KeyError as missing:
        raise ConfigError(f"coefficient file is missing key {missing}") from None


def _parse_kv(source: str | FilePath | Iterable[str]) -> dict[str, float]:
    if isinstance(source, (str, FilePath)):
        raw = FilePath(source).read_text(encoding="utf-8").splitlines()
    else:
        raw = list(source)
    values: dict[str, float] = {}
    for line_no, line in enumerate(raw, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ParseError(f"expected key = value: {text!r}", line_no)
        key, _, rhs = text.partition("=")
        try:
            values[key.strip()] = float(rhs.strip())
        except ValueError:
            raise ParseError(f"non-numeric value for {key.strip()!r}: {rhs.strip()!r}", line_no) from None
    return values
