"""The simulation core: a fixed-phase tick loop over one urban day.

Each tick advances every vehicle, settles charging stations, runs the
strategy sweeps, dispatches waiting orders in placement order, and samples
fleet state. All iteration orders are fixed (vehicles by id, stations by id,
orders by placement time then id), so a run is a pure function of its
configuration and seed. Every state change lands in an append-only trace
from which the service metrics can be recomputed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path as FilePath
from typing import Iterable, Optional, Sequence

import numpy as np

from .charging import (
    ChargingStrategy,
    Station,
    StrategyKind,
    admit_from_queue,
    arrive_at_station,
    load_stations,
    night_charge_sweep,
    release_slot,
    select_station,
)
from .demand import DAY_S, DemandProfile, Order, OrderState, generate_synthetic, ingest_orders
from .dispatch import DispatchPolicy, PolicyKind, assign_nearest, assign_strategic
from .errors import ConfigError, SimulationStalled, UnknownNode
from .fleet import (
    ARRIVED,
    CHARGE_COMPLETE,
    ChargeKind,
    Vehicle,
    VehicleClass,
    VehicleSpec,
    VehicleState,
    advance,
    complete_charge,
    init_fleet,
    needs_charge,
)
from .network import RoadNetwork, load_network

TraceRecord = tuple[float, str, str, str]

SCENARIO_NAMES = ("ICE", "BEV", "CC", "NC", "SD", "FC")

# Per-scenario vehicle defaults: speed km/h, range km, low-battery fraction,
# full recharge seconds, vehicle class, strategy, dispatch policy.
_SCENARIO_TABLE = {
    "ICE": (30.0, 500.0, 0.15, 180.0, VehicleClass.ICE_CAR, StrategyKind.CONVENTIONAL, PolicyKind.NEAREST),
    "BEV": (30.0, 342.0, 0.15, 1_800.0, VehicleClass.BEV_CAR, StrategyKind.CONVENTIONAL, PolicyKind.NEAREST),
    "CC": (8.0, 35.0, 0.25, 16_200.0, VehicleClass.SLAV, StrategyKind.CONVENTIONAL, PolicyKind.NEAREST),
    "NC": (8.0, 35.0, 0.25, 16_200.0, VehicleClass.SLAV, StrategyKind.NIGHT, PolicyKind.NEAREST),
    "SD": (8.0, 35.0, 0.25, 16_200.0, VehicleClass.SLAV, StrategyKind.STRATEGIC, PolicyKind.STRATEGIC),
    "FC": (8.0, 35.0, 0.25, 16_200.0, VehicleClass.SLAV, StrategyKind.FAST_SWAP, PolicyKind.NEAREST),
}


class Mode(Enum):
    BATCH = "Batch"
    LIVE = "Live"


@dataclass
class ScenarioConfig:
    scenario: str = "CC"
    fleet_size: int = 20
    speed_kmh: Optional[float] = None
    range_km: Optional[float] = None
    min_level_frac: Optional[float] = None
    full_recharge_s: Optional[float] = None
    swap_s: Optional[float] = None
    policy: Optional[DispatchPolicy] = None
    network: RoadNetwork | str | FilePath | list[str] | None = None
    stations: Sequence[Station] | str | FilePath | list[str] | None = None
    orders: Sequence[Order] | str | FilePath | list[str] | None = None
    profile: Optional[DemandProfile] = None
    tick_s: float = 5.0
    seed: int = 0
    mode: Mode = Mode.BATCH
    live_drop_after_s: float = 2_400.0

    def __post_init__(self):
        if self.scenario not in SCENARIO_NAMES:
            raise ConfigError(f"unknown scenario {self.scenario!r}; pick one of {SCENARIO_NAMES}")
        if self.fleet_size < 1:
            raise ConfigError(f"fleet_size must be >= 1: {self.fleet_size}")
        if self.tick_s <= 0:
            raise ConfigError(f"tick_s must be > 0: {self.tick_s}")
        if self.live_drop_after_s <= 0:
            raise ConfigError(f"live_drop_after_s must be > 0: {self.live_drop_after_s}")

    def vehicle_spec(self) -> VehicleSpec:
        speed, rng, frac, recharge, vclass, _, _ = _SCENARIO_TABLE[self.scenario]
        charge_kind = ChargeKind.SWAP if self.scenario == "FC" else ChargeKind.PLUG
        return VehicleSpec(
            speed_kmh=self.speed_kmh if self.speed_kmh is not None else speed,
            range_km=self.range_km if self.range_km is not None else rng,
            min_level_frac=self.min_level_frac if self.min_level_frac is not None else frac,
            full_recharge_s=self.full_recharge_s if self.full_recharge_s is not None else recharge,
            swap_s=self.swap_s if self.swap_s is not None else 111.0,
            charge_kind=charge_kind,
            vehicle_class=vclass,
        )

    def strategy(self) -> ChargingStrategy:
        return ChargingStrategy(kind=_SCENARIO_TABLE[self.scenario][5])

    def dispatch_policy(self) -> DispatchPolicy:
        if self.policy is not None:
            return self.policy
        return DispatchPolicy(kind=_SCENARIO_TABLE[self.scenario][6])


@dataclass
class MetricsReport:
    num_vehicles: int
    demand_count: int
    avg_trip_time_min: float
    pct_under_40min: float
    avg_trips_per_vehicle: float
    total_charges: int
    total_km: float
    pct_km_pickup: float
    pct_km_delivery: float
    pct_km_recharge: float
    avg_km_per_vehicle: float
    unserved_count: int = 0
    state_timeseries: list[tuple[float, tuple[int, int, int, int, int]]] = field(default_factory=list)
    wait_timeseries: list[tuple[float, float]] = field(default_factory=list)


REPORT_SCALARS = (
    "num_vehicles",
    "demand_count",
    "avg_trip_time_min",
    "pct_under_40min",
    "avg_trips_per_vehicle",
    "total_charges",
    "total_km",
    "pct_km_pickup",
    "pct_km_delivery",
    "pct_km_recharge",
    "avg_km_per_vehicle",
    "unserved_count",
)

STATE_ORDER = (
    VehicleState.IDLE,
    VehicleState.TO_PICKUP,
    VehicleState.TO_DELIVERY,
    VehicleState.TO_CHARGE,
    VehicleState.CHARGING,
)


def service_level_met(report: MetricsReport) -> bool:
    """Every order served and at least 95% delivered inside 40 minutes."""
    return report.unserved_count == 0 and report.pct_under_40min >= 95.0


class Engine:
    """One scenario run. Construct, then run() or step() tick by tick."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.net = self._resolve_network(config)
        self.stations = self._resolve_stations(config, self.net)
        self.spec = config.vehicle_spec()
        self.strategy = config.strategy()
        self.policy = config.dispatch_policy()
        self._check_station_kinds()

        self.fleet: list[Vehicle] = init_fleet(config.fleet_size, self.spec, self.net, config.seed)
        self._by_id: dict[int, Vehicle] = {v.vehicle_id: v for v in self.fleet}
        self._stations_by_id: dict[int, Station] = {s.station_id: s for s in self.stations}

        self._all_orders: list[Order] = self._resolve_orders(config, self.net)
        self._next_place_idx = 0
        self._waiting: list[Order] = []
        self._delivered_count = 0
        self.unserved_count = 0

        self._tick_index = 0
        self.trace: list[TraceRecord] = []
        self._samples: list[tuple[float, tuple[int, int, int, int, int]]] = []
        self._pending_removal: set[int] = set()
        self._retired: list[Vehicle] = []
        self._next_vehicle_id = config.fleet_size + 1
        self._live_rng = np.random.default_rng((config.seed, 7919))
        self._demand_day = 1  # day 0 demand is materialized above

        for v in self.fleet:
            self._rec(0.0, f"v{v.vehicle_id}", "", VehicleState.IDLE.value)

    # ------------------------------------------------------------------ setup

    @staticmethod
    def _resolve_network(config: ScenarioConfig) -> RoadNetwork:
        if isinstance(config.network, RoadNetwork):
            return config.network
        if config.network is None:
            raise ConfigError("config.network is required")
        return load_network(config.network)

    @staticmethod
    def _resolve_stations(config: ScenarioConfig, net: RoadNetwork) -> list[Station]:
        src = config.stations
        if src is None:
            raise ConfigError("config.stations is required")
        if isinstance(src, (str, FilePath)) or (
            isinstance(src, list) and src and isinstance(src[0], str)
        ):
            return load_stations(src, net)
        # rebuild so runtime slot state never leaks between runs sharing a config
        stations = [
            Station(station_id=s.station_id, node=s.node, capacity=s.capacity, kind=s.kind)
            for s in sorted(src, key=lambda s: s.station_id)
        ]
        for s in stations:
            if not net.has_node(s.node):
                raise UnknownNode(s.node)
        return stations

    @staticmethod
    def _resolve_orders(config: ScenarioConfig, net: RoadNetwork) -> list[Order]:
        src = config.orders
        if src is None:
            if config.profile is None:
                return []
            return generate_synthetic(config.profile, seed=(config.seed, 0))
        if isinstance(src, (str, FilePath)) or (
            isinstance(src, list) and src and isinstance(src[0], str)
        ):
            return ingest_orders(src, net)
        # rebuild so order lifecycle state never leaks between runs sharing a config
        orders = [
            Order(
                order_id=o.order_id,
                placed_at_s=o.placed_at_s,
                restaurant_node=o.restaurant_node,
                destination_node=o.destination_node,
            )
            for o in sorted(src, key=lambda o: (o.placed_at_s, o.order_id))
        ]
        for o in orders:
            if not net.has_node(o.restaurant_node):
                raise UnknownNode(o.restaurant_node)
            if not net.has_node(o.destination_node):
                raise UnknownNode(o.destination_node)
        return orders

    def _check_station_kinds(self) -> None:
        kinds = {s.kind for s in self.stations}
        if self.strategy.kind is StrategyKind.FAST_SWAP:
            if kinds != {ChargeKind.SWAP}:
                raise ConfigError("the swap strategy needs swap stations only")
        elif ChargeKind.SWAP in kinds:
            raise ConfigError(
                f"swap stations are only valid under the swap strategy, not {self.config.scenario}"
            )

    # ------------------------------------------------------------- tick loop

    @property
    def clock_s(self) -> float:
        return self._tick_index * self.config.tick_s

    @property
    def orders(self) -> list[Order]:
        return self._all_orders

    def waiting_orders(self) -> list[Order]:
        return list(self._waiting)

    @property
    def delivered_count(self) -> int:
        return self._delivered_count

    @property
    def state_samples(self) -> list[tuple[float, tuple[int, int, int, int, int]]]:
        """Per-tick vehicle counts by state, oldest first. Do not mutate."""
        return self._samples

    @property
    def retired_vehicles(self) -> list[Vehicle]:
        """Vehicles removed by live resizes; their odometers still count."""
        return self._retired

    def step(self) -> None:
        """Advance the simulation by exactly one tick."""
        dt = self.config.tick_s
        self._tick_index += 1
        now = self.clock_s

        if self.config.mode is Mode.LIVE:
            self._extend_live_demand(now)

        # phase 1: motion and arrivals
        charge_done: list[int] = []
        for v in list(self.fleet):
            for kind, vid in advance(v, dt, self.spec, now):
                if kind == ARRIVED:
                    self._on_arrival(self._by_id[vid], now)
                elif kind == CHARGE_COMPLETE:
                    charge_done.append(vid)

        # phase 2: charge completions release slots before queues are admitted
        for vid in charge_done:
            self._on_charge_complete(self._by_id[vid], now)
        for sid in sorted(self._stations_by_id):
            station = self._stations_by_id[sid]
            for vid in admit_from_queue(station, self._by_id, self.spec, now):
                self._rec(now, f"v{vid}", VehicleState.TO_CHARGE.value, VehicleState.CHARGING.value)

        # phase 3: overnight top-up for the night-based strategies
        for v in night_charge_sweep(now, self.fleet, self.spec, self.strategy):
            v.last_night_charge_day = int(now // DAY_S)
            self._send_to_charge(v, now)

        # phase 4: low-battery rule, active in every strategy
        for v in self.fleet:
            if v.state is VehicleState.IDLE and needs_charge(v, self.spec):
                self._send_to_charge(v, now)

        # phase 5: FIFO dispatch of waiting orders
        assigned = self._dispatch_phase(now)

        # phase 6: per-state sample
        counts = [0, 0, 0, 0, 0]
        for v in self.fleet:
            counts[STATE_ORDER.index(v.state)] += 1
        self._samples.append((now, tuple(counts)))

        if self.config.mode is Mode.BATCH:
            self._check_stalled(now, assigned)

    def run(self, until_s: Optional[float] = None) -> MetricsReport:
        """Batch: run until every order is delivered. Live: run until until_s."""
        if self.config.mode is Mode.BATCH:
            if not self._all_orders:
                while self.clock_s < DAY_S:
                    self.step()
            else:
                while self._delivered_count < len(self._all_orders):
                    self.step()
        else:
            if until_s is None:
                raise ConfigError("live mode needs an explicit until_s")
            while self.clock_s < until_s:
                self.step()
        return self.report()

    # --------------------------------------------------------- phase helpers

    def _on_arrival(self, v: Vehicle, now: float) -> None:
        path = v.current_path
        if path is not None and path.node_sequence:
            v.node = path.node_sequence[-1]
        v.current_path = None
        v.path_progress_m = 0.0

        if v.state is VehicleState.TO_PICKUP:
            order = v.assigned_order
            order.state = OrderState.IN_TRANSIT
            order.picked_up_at_s = now
            self._rec(now, f"o{order.order_id}", OrderState.ASSIGNED.value, OrderState.IN_TRANSIT.value)
            v.current_path = self.net.shortest_path(order.restaurant_node, order.destination_node)
            self._set_state(v, VehicleState.TO_DELIVERY, now)
        elif v.state is VehicleState.TO_DELIVERY:
            order = v.assigned_order
            order.state = OrderState.DELIVERED
            order.delivered_at_s = now
            self._rec(now, f"o{order.order_id}", OrderState.IN_TRANSIT.value, OrderState.DELIVERED.value)
            v.assigned_order = None
            v.trips_completed += 1
            self._delivered_count += 1
            if needs_charge(v, self.spec):
                self._send_to_charge(v, now)
            else:
                self._set_state(v, VehicleState.IDLE, now)
                self._maybe_remove(v, now)
        elif v.state is VehicleState.TO_CHARGE:
            station = self._stations_by_id[v.target_station]
            before = v.state
            arrive_at_station(v, station, self.spec, now)
            if v.state is VehicleState.CHARGING:
                self._rec(now, f"v{v.vehicle_id}", before.value, v.state.value)

    def _on_charge_complete(self, v: Vehicle, now: float) -> None:
        station = self._stations_by_id[v.target_station]
        before = v.state
        complete_charge(v, self.spec)
        release_slot(station, v.vehicle_id)
        v.target_station = None
        self._rec(now, f"v{v.vehicle_id}", before.value, v.state.value)
        self._maybe_remove(v, now)

    def _send_to_charge(self, v: Vehicle, now: float) -> None:
        sid = select_station(v, self.stations, self.net)
        v.target_station = sid
        v.current_path = self.net.shortest_path(v.node, self._stations_by_id[sid].node)
        v.path_progress_m = 0.0
        self._set_state(v, VehicleState.TO_CHARGE, now)

    def _dispatch_phase(self, now: float) -> int:
        while (
            self._next_place_idx < len(self._all_orders)
            and self._all_orders[self._next_place_idx].placed_at_s <= now
        ):
            order = self._all_orders[self._next_place_idx]
            self._rec(order.placed_at_s, f"o{order.order_id}", "", OrderState.WAITING.value)
            self._waiting.append(order)
            self._next_place_idx += 1

        if self.config.mode is Mode.LIVE:
            kept = []
            for order in self._waiting:
                if now - order.placed_at_s >= self.config.live_drop_after_s:
                    order.state = OrderState.DROPPED
                    self.unserved_count += 1
                    self._rec(now, f"o{order.order_id}", OrderState.WAITING.value, OrderState.DROPPED.value)
                else:
                    kept.append(order)
            self._waiting = kept

        assigned = 0
        still_waiting = []
        for order in self._waiting:
            vid = self._assign(order)
            if vid is None:
                still_waiting.append(order)
                continue
            v = self._by_id[vid]
            order.state = OrderState.ASSIGNED
            order.assigned_at_s = now
            v.assigned_order = order
            v.current_path = self.net.shortest_path(v.node, order.restaurant_node)
            v.path_progress_m = 0.0
            self._rec(now, f"o{order.order_id}", OrderState.WAITING.value, OrderState.ASSIGNED.value)
            self._set_state(v, VehicleState.TO_PICKUP, now)
            assigned += 1
        self._waiting = still_waiting
        return assigned

    def _assign(self, order: Order) -> Optional[int]:
        if self.policy.kind is PolicyKind.STRATEGIC:
            return assign_strategic(
                order, self.fleet, self.net, self.spec, self.stations, self.policy
            )
        return assign_nearest(order, self.fleet, self.net, self.spec, self.stations)

    def _check_stalled(self, now: float, assigned_this_tick: int) -> None:
        if not self._waiting or assigned_this_tick:
            return
        if any(v.state is not VehicleState.IDLE for v in self.fleet):
            return
        if self.strategy.uses_night_window and any(
            v.battery_km < self.strategy.night_trigger_frac * self.spec.range_km
            for v in self.fleet
        ):
            return  # a night charge can still improve feasibility
        raise SimulationStalled(
            clock_s=now,
            waiting_orders=len(self._waiting),
            detail="orders waiting, every vehicle idle, and no charge can change feasibility",
        )

    def _extend_live_demand(self, now: float) -> None:
        if self.config.profile is None:
            return
        day = int(now // DAY_S)
        while self._demand_day <= day:
            d = self._demand_day
            fresh = generate_synthetic(self.config.profile, seed=(self.config.seed, d))
            base_id = max((o.order_id for o in self._all_orders), default=0)
            for o in fresh:
                o.order_id += base_id
                o.placed_at_s += d * DAY_S
            self._all_orders.extend(fresh)
            self._demand_day += 1

    # ------------------------------------------------------------ live steering
    # Control changes take effect at the next tick boundary, so the vehicle
    # and order records they produce carry that boundary's timestamp. This
    # keeps trace replay in lockstep with the engine's own per-tick samples.
    # The session marker itself is stamped at the current boundary instead:
    # everything recorded strictly after it ran under the new configuration.

    @property
    def _next_boundary_s(self) -> float:
        return (self._tick_index + 1) * self.config.tick_s

    def mark_session_event(self, label: str) -> None:
        """Audit stamp for a steering action, applied between two ticks.

        The stamp is the current boundary, so everything recorded after it
        in simulation time ran under the post-change configuration.
        """
        self._rec(self.clock_s, "session", "", label)

    def set_speed(self, speed_kmh: float) -> None:
        self.spec = replace(self.spec, speed_kmh=speed_kmh)

    def set_battery_range(self, range_km: float) -> None:
        """Swap pack size in place; levels clamp to the new capacity."""
        self.spec = replace(self.spec, range_km=range_km)
        for v in self.fleet:
            v.battery_km = min(v.battery_km, range_km)

    def resize_fleet(self, new_size: int) -> None:
        """Grow with fresh vehicles at random nodes; shrink idle-first.

        Busy vehicles marked for removal finish their current task and are
        removed the moment they would turn idle. Growing cancels pending
        removals before spawning anything new.
        """
        if new_size < 1:
            raise ConfigError(f"fleet size must be >= 1: {new_size}")
        when = self._next_boundary_s
        target = new_size
        effective = len(self.fleet) - len(self._pending_removal)
        while effective < target and self._pending_removal:
            self._pending_removal.discard(max(self._pending_removal))
            effective += 1
        while effective < target:
            vid = self._next_vehicle_id
            self._next_vehicle_id += 1
            node = int(self._live_rng.choice(self.net.node_ids))
            v = Vehicle(vehicle_id=vid, node=node, battery_km=self.spec.range_km)
            self.fleet.append(v)
            self._by_id[vid] = v
            self._rec(when, f"v{vid}", "", VehicleState.IDLE.value)
            effective += 1
        if effective > target:
            idle_ids = sorted(
                v.vehicle_id
                for v in self.fleet
                if v.state is VehicleState.IDLE and v.vehicle_id not in self._pending_removal
            )
            for vid in idle_ids[: effective - target]:
                self._remove_vehicle(self._by_id[vid], when)
                effective -= 1
        if effective > target:
            busy_ids = sorted(
                v.vehicle_id for v in self.fleet if v.vehicle_id not in self._pending_removal
            )
            for vid in busy_ids[: effective - target]:
                self._pending_removal.add(vid)
                effective -= 1

    def reconfigure(
        self,
        scenario: str,
        fleet_size: int,
        stations: Sequence[Station] | str | FilePath | list[str],
        speed_kmh: Optional[float] = None,
        range_km: Optional[float] = None,
    ) -> None:
        """Structural change: rebuild the fleet and stations for a new scenario.

        Orders not yet delivered go back to Waiting; the clock, the demand,
        and the trace all continue.
        """
        when = self._next_boundary_s
        cfg = replace(
            self.config,
            scenario=scenario,
            fleet_size=fleet_size,
            stations=stations,
            speed_kmh=speed_kmh,
            range_km=range_km,
        )
        new_stations = self._resolve_stations(cfg, self.net)

        for v in self.fleet:
            order = v.assigned_order
            if order is not None and order.state in (OrderState.ASSIGNED, OrderState.IN_TRANSIT):
                self._rec(when, f"o{order.order_id}", order.state.value, OrderState.WAITING.value)
                order.state = OrderState.WAITING
                order.assigned_at_s = None
                order.picked_up_at_s = None
                self._waiting.append(order)
            v.assigned_order = None
            self._rec(when, f"v{v.vehicle_id}", v.state.value, "")
            self._retired.append(v)
        self._waiting.sort(key=lambda o: (o.placed_at_s, o.order_id))

        self.config = cfg
        self.spec = cfg.vehicle_spec()
        self.strategy = cfg.strategy()
        self.policy = cfg.dispatch_policy()
        self.stations = new_stations
        self._stations_by_id = {s.station_id: s for s in new_stations}
        self._check_station_kinds()
        self._pending_removal.clear()

        self.fleet = []
        self._by_id = {}
        for _ in range(fleet_size):
            vid = self._next_vehicle_id
            self._next_vehicle_id += 1
            node = int(self._live_rng.choice(self.net.node_ids))
            v = Vehicle(vehicle_id=vid, node=node, battery_km=self.spec.range_km)
            self.fleet.append(v)
            self._by_id[vid] = v
            self._rec(when, f"v{vid}", "", VehicleState.IDLE.value)

    def _remove_vehicle(self, v: Vehicle, when: float) -> None:
        self._rec(when, f"v{v.vehicle_id}", v.state.value, "")
        self.fleet.remove(v)
        del self._by_id[v.vehicle_id]
        self._pending_removal.discard(v.vehicle_id)
        self._retired.append(v)

    def _maybe_remove(self, v: Vehicle, now: float) -> None:
        if v.vehicle_id in self._pending_removal and v.state is VehicleState.IDLE:
            self._remove_vehicle(v, now)

    # ---------------------------------------------------------------- output

    def _set_state(self, v: Vehicle, to: VehicleState, now: float) -> None:
        frm = v.state
        v.transition(to)
        self._rec(now, f"v{v.vehicle_id}", frm.value, to.value)

    def _rec(self, t: float, entity: str, frm: str, to: str) -> None:
        self.trace.append((t, entity, frm, to))

    def report(self) -> MetricsReport:
        return compute_metrics(
            self.trace,
            self.config,
            fleet=self.fleet,
            unserved_count=self.unserved_count,
            state_samples=self._samples,
            retired=self._retired,
        )


# ------------------------------------------------------------------ metrics


def compute_metrics(
    trace: Iterable[TraceRecord],
    config: ScenarioConfig,
    fleet: Sequence[Vehicle],
    unserved_count: int = 0,
    state_samples: Optional[list[tuple[float, tuple[int, int, int, int, int]]]] = None,
    retired: Sequence[Vehicle] = (),
) -> MetricsReport:
    """Service metrics from the trace plus the fleet odometers.

    The trace carries timing and transitions; distances live on the vehicle
    odometers. Retired vehicles keep contributing their accumulated distance
    but do not count toward the fleet size. When state_samples is omitted the
    per-tick state counts are rebuilt by replaying the trace on the tick grid.
    """
    trace = list(trace)
    placed_at: dict[str, float] = {}
    delivered: list[tuple[float, float]] = []  # (delivered_at, wait_min)
    demand_count = 0
    total_charges = 0
    for t, entity, frm, to in trace:
        if entity.startswith("o"):
            if frm == "" and to == OrderState.WAITING.value:
                placed_at[entity] = t
                demand_count += 1
            elif to == OrderState.DELIVERED.value:
                delivered.append((t, (t - placed_at[entity]) / 60.0))
        elif entity.startswith("v") and to == VehicleState.CHARGING.value:
            total_charges += 1

    if delivered:
        waits = [w for _, w in delivered]
        avg_trip = sum(waits) / len(waits)
        pct_under = 100.0 * sum(1 for w in waits if w < 40.0) / len(waits)
    else:
        avg_trip = 0.0
        pct_under = 100.0

    n = len(fleet)
    odometers = list(fleet) + list(retired)
    km_pickup = sum(v.km_pickup for v in odometers)
    km_delivery = sum(v.km_delivery for v in odometers)
    km_recharge = sum(v.km_recharge for v in odometers)
    total_km = km_pickup + km_delivery + km_recharge
    if total_km > 0:
        pct_pickup = 100.0 * km_pickup / total_km
        pct_delivery = 100.0 * km_delivery / total_km
        pct_recharge = 100.0 * km_recharge / total_km
    else:
        pct_pickup = pct_delivery = pct_recharge = 0.0

    if state_samples is None:
        state_samples = state_counts_from_trace(trace, config.tick_s)

    return MetricsReport(
        num_vehicles=n,
        demand_count=demand_count,
        avg_trip_time_min=avg_trip,
        pct_under_40min=pct_under,
        avg_trips_per_vehicle=(len(delivered) / n) if n else 0.0,
        total_charges=total_charges,
        total_km=total_km,
        pct_km_pickup=pct_pickup,
        pct_km_delivery=pct_delivery,
        pct_km_recharge=pct_recharge,
        avg_km_per_vehicle=(total_km / n) if n else 0.0,
        unserved_count=unserved_count,
        state_timeseries=list(state_samples),
        wait_timeseries=delivered,
    )


def state_counts_from_trace(
    trace: Iterable[TraceRecord], tick_s: float, until_s: Optional[float] = None
) -> list[tuple[float, tuple[int, int, int, int, int]]]:
    """Rebuild the per-tick vehicle state counts by replaying the trace.

    The replay runs to the last vehicle event unless until_s extends it
    through a quiet tail.
    """
    events = sorted(
        (rec for rec in trace if rec[1].startswith("v")), key=lambda r: r[0]
    )
    if not events:
        return []
    end = max(r[0] for r in events) if until_s is None else until_s
    states: dict[str, str] = {}
    names = [s.value for s in STATE_ORDER]
    samples = []
    i = 0
    tick = 1
    while tick * tick_s <= end + 1e-9:
        t = tick * tick_s
        while i < len(events) and events[i][0] <= t + 1e-9:
            _, entity, _, to = events[i]
            if to == "":
                states.pop(entity, None)
            else:
                states[entity] = to
            i += 1
        counts = [0, 0, 0, 0, 0]
        for s in states.values():
            counts[names.index(s)] += 1
        samples.append((t, tuple(counts)))
        tick += 1
    return samples


# -------------------------------------------------------------- serialization


def write_trace_csv(trace: Iterable[TraceRecord], path: str | FilePath) -> None:
    lines = ["t_s,entity,from,to"]
    lines.extend(f"{t},{entity},{frm},{to}" for t, entity, frm, to in trace)
    FilePath(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_csv(path: str | FilePath) -> list[TraceRecord]:
    lines = FilePath(path).read_text(encoding="utf-8").splitlines()
    out: list[TraceRecord] = []
    for line in lines[1:]:
        t, entity, frm, to = line.split(",")
        out.append((float(t), entity, frm, to))
    return out


def report_to_dict(report: MetricsReport) -> dict:
    doc = {name: getattr(report, name) for name in REPORT_SCALARS}
    doc["state_timeseries"] = [[t, list(c)] for t, c in report.state_timeseries]
    doc["wait_timeseries"] = [[t, w] for t, w in report.wait_timeseries]
    return doc


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=False)


def report_csv_header() -> str:
    return ",".join(REPORT_SCALARS)


def report_to_csv_row(report: MetricsReport) -> str:
    return ",".join(str(getattr(report, name)) for name in REPORT_SCALARS)
