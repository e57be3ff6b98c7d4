"""Charging stations and the operational charging strategies.

Stations hold a fixed number of slots. A vehicle that arrives at a full
station waits in a FIFO queue at the station node. The strategy layer
decides *when* vehicles head to a charger: always on low battery, plus an
overnight top-up window for the night-based strategies.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path as FilePath
from typing import Iterable, Iterator, Sequence

from .errors import NoStations, NotAtStation, ParseError, UnknownNode
from .fleet import ChargeKind, Vehicle, VehicleSpec, VehicleState, start_charge
from .network import RoadNetwork

DAY_S = 86_400.0


class StrategyKind(Enum):
    CONVENTIONAL = "CC"
    NIGHT = "NC"
    STRATEGIC = "SD"
    FAST_SWAP = "FC"


@dataclass
class ChargingStrategy:
    kind: StrategyKind
    night_window_s: tuple[float, float] = (7_200.0, 18_000.0)
    night_trigger_frac: float = 0.90

    def __post_init__(self):
        start, end = self.night_window_s
        if not 0.0 <= start < end <= DAY_S:
            raise ValueError(f"night window must lie within one day: {self.night_window_s}")
        if not 0.0 < self.night_trigger_frac <= 1.0:
            raise ValueError(f"night trigger must be in (0, 1]: {self.night_trigger_frac}")

    @property
    def uses_night_window(self) -> bool:
        return self.kind in (StrategyKind.NIGHT, StrategyKind.STRATEGIC)


@dataclass
class Station:
    station_id: int
    node: int
    capacity: int
    kind: ChargeKind = ChargeKind.PLUG
    occupants: set[int] = field(default_factory=set)
    queue: deque[int] = field(default_factory=deque)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"station {self.station_id} needs at least one slot")

    @property
    def free_slots(self) -> int:
        return self.capacity - len(self.occupants)


def select_station(vehicle: Vehicle, stations: Sequence[Station], net: RoadNetwork) -> int:
    """Pick the nearest station with a free slot, else the nearest overall.

    Ties break toward the smaller station id. Distance is measured over the
    road network from the vehicle's current node.
    """
    if not stations:
        raise NoStations("no charging stations configured")

    def key(s: Station) -> tuple[float, int]:
        return (net.network_distance(vehicle.node, s.node), s.station_id)

    free = [s for s in stations if s.free_slots > 0]
    pool = free if free else list(stations)
    return min(pool, key=key).station_id


def arrive_at_station(
    vehicle: Vehicle, station: Station, spec: VehicleSpec, now_s: float
) -> Station:
    """Occupy a free slot and start charging, or join the queue."""
    if vehicle.node != station.node:
        raise NotAtStation(
            f"vehicle {vehicle.vehicle_id} is at node {vehicle.node}, "
            f"station {station.station_id} is at node {station.node}"
        )
    if station.free_slots > 0:
        station.occupants.add(vehicle.vehicle_id)
        start_charge(vehicle, spec, station.kind, now_s)
    else:
        station.queue.append(vehicle.vehicle_id)
    return station


def release_slot(station: Station, vehicle_id: int) -> None:
    station.occupants.discard(vehicle_id)


def admit_from_queue(
    station: Station, fleet_by_id: dict[int, Vehicle], spec: VehicleSpec, now_s: float
) -> list[int]:
    """Move queued vehicles into freed slots, FIFO. Returns admitted ids."""
    admitted = []
    while station.free_slots > 0 and station.queue:
        vid = station.queue.popleft()
        station.occupants.add(vid)
        start_charge(fleet_by_id[vid], spec, station.kind, now_s)
        admitted.append(vid)
    return admitted


def night_charge_sweep(
    clock_s: float,
    fleet: Iterable[Vehicle],
    spec: VehicleSpec,
    strategy: ChargingStrategy,
) -> list[Vehicle]:
    """Idle vehicles due for their nightly top-up at this tick.

    Inside the window, an idle vehicle below the trigger level goes once per
    day; a vehicle busy at window start goes when it next turns idle, if the
    window is still open. The caller performs the actual dispatch and stamps
    last_night_charge_day.
    """
    if not strategy.uses_night_window:
        return []
    start, end = strategy.night_window_s
    second_of_day = clock_s % DAY_S
    if not start <= second_of_day < end:
        return []
    day = int(clock_s // DAY_S)
    threshold = strategy.night_trigger_frac * spec.range_km
    due = [
        v
        for v in fleet
        if v.state is VehicleState.IDLE
        and v.battery_km < threshold
        and v.last_night_charge_day != day
    ]
    due.sort(key=lambda v: v.vehicle_id)
    return due


def load_stations(
    source: str | FilePath | Iterable[str], net: RoadNetwork | None = None
) -> list[Station]:
    """Parse the station list: ``S,<id>,<node>,<capacity>,<kind Plug|Swap>``.

    Blank lines and ``#`` comments are skipped. When a network is supplied,
    station nodes must exist on it.
    """
    stations: list[Station] = []
    seen: set[int] = set()
    for line_no, raw in _lines(source):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if parts[0] != "S" or len(parts) != 5:
            raise ParseError(f"expected S,<id>,<node>,<capacity>,<kind>: {line!r}", line_no)
        try:
            sid, node, capacity = int(parts[1]), int(parts[2]), int(parts[3])
        except ValueError:
            raise ParseError(f"non-integer station field: {line!r}", line_no) from None
        if sid in seen:
            raise ParseError(f"duplicate station id {sid}", line_no)
        try:
            kind = ChargeKind(parts[4])
        except ValueError:
            raise ParseError(f"station kind must be Plug or Swap: {parts[4]!r}", line_no) from None
        if capacity < 1:
            raise ParseError(f"station {sid} needs at least one slot", line_no)
        if net is not None and not net.has_node(node):
            raise UnknownNode(node, row=line_no)
        seen.add(sid)
        stations.append(Station(station_id=sid, node=node, capacity=capacity, kind=kind))
    if not stations:
        raise NoStations("station list is empty")
    stations.sort(key=lambda s: s.station_id)
    return stations


def _lines(source: str | FilePath | Iterable[str]) -> Iterator[tuple[int, str]]:
    if isinstance(source, (str, FilePath)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
    else:
        yield from enumerate(source, start=1)
