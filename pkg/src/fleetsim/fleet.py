"""Vehicle state machine, kinematics, and battery bookkeeping.

One code path covers baseline cars and lightweight autonomous vehicles; the
differences live entirely in VehicleSpec numbers. Battery state is tracked in
kilometers of remaining driving range, and "refueling" a combustion car is the
same plug-style stop with a short duration.

State machine (all other transitions are forbidden and raise):

    Idle -> ToPickup        order assigned
    Idle -> ToCharge        low battery or night dispatch
    ToPickup -> ToDelivery  food picked up at the restaurant
    ToDelivery -> Idle      delivered, battery fine
    ToDelivery -> ToCharge  delivered, battery below threshold
    ToCharge -> Charging    slot taken at the station
    Charging -> Idle        charge complete

Movement is continuous along a routed path; a tick moves
speed_kmh * dt / 3600 km, clamped at the path end. Partial plug charges are
linear in the missing fraction; swap stops take a fixed time regardless of
level. Both choices are documented so results stay interpretable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .errors import BatteryUnderflow, IllegalTransition, NotAtStation
from .network import Path, RoadNetwork


class VehicleState(Enum):
    IDLE = "Idle"
    TO_PICKUP = "ToPickup"
    TO_DELIVERY = "ToDelivery"
    TO_CHARGE = "ToCharge"
    CHARGING = "Charging"


class ChargeKind(Enum):
    PLUG = "Plug"
    SWAP = "Swap"


class VehicleClass(Enum):
    ICE_CAR = "ICECar"
    BEV_CAR = "BEVCar"
    SLAV = "SLAV"


ALLOWED_TRANSITIONS: frozenset[tuple[VehicleState, VehicleState]] = frozenset(
    {
        (VehicleState.IDLE, VehicleState.TO_PICKUP),
        (VehicleState.IDLE, VehicleState.TO_CHARGE),
        (VehicleState.TO_PICKUP, VehicleState.TO_DELIVERY),
        (VehicleState.TO_DELIVERY, VehicleState.IDLE),
        (VehicleState.TO_DELIVERY, VehicleState.TO_CHARGE),
        (VehicleState.TO_CHARGE, VehicleState.CHARGING),
        (VehicleState.CHARGING, VehicleState.IDLE),
    }
)

MOVING_STATES = (VehicleState.TO_PICKUP, VehicleState.TO_DELIVERY, VehicleState.TO_CHARGE)


def can_transition(frm: VehicleState, to: VehicleState) -> bool:
    return (frm, to) in ALLOWED_TRANSITIONS


@dataclass(frozen=True)
class VehicleSpec:
    """Scenario-level vehicle parameters.

    :param speed_kmh: constant riding speed
    :param range_km: full battery/tank driving autonomy
    :param min_level_frac: fraction of range below which a charge trip starts
    :param full_recharge_s: empty-to-full plug duration (refuel for ICE)
    :param swap_s: fixed battery-swap stop duration
    :param charge_kind: Plug or Swap stations expected by this vehicle
    :param vehicle_class: reporting label
    """

    speed_kmh: float
    range_km: float
    min_level_frac: float
    full_recharge_s: float
    swap_s: float = 111.0
    charge_kind: ChargeKind = ChargeKind.PLUG
    vehicle_class: VehicleClass = VehicleClass.SLAV

    def __post_init__(self):
        if self.speed_kmh <= 0:
            raise ValueError("speed_kmh must be positive")
        if self.range_km <= 0:
            raise ValueError("range_km must be positive")
        if not 0 < self.min_level_frac < 1:
            raise ValueError("min_level_frac must lie strictly between 0 and 1")

    @property
    def min_battery_km(self) -> float:
        return self.min_level_frac * self.range_km


class Event(NamedTuple):
    """Raised by advance(); the engine sorts by (kind, vehicle_id)."""

    kind: str  # "Arrived" or "ChargeComplete"
    vehicle_id: int


ARRIVED = "Arrived"
CHARGE_COMPLETE = "ChargeComplete"


@dataclass
class Vehicle:
    vehicle_id: int
    node: int  # last node reached; path origin while moving
    battery_km: float
    state: VehicleState = VehicleState.IDLE
    current_path: Optional[Path] = None
    path_progress_m: float = 0.0
    assigned_order: Optional[int] = None
    charge_finish_at_s: Optional[float] = None
    target_station: Optional[int] = None
    km_pickup: float = 0.0
    km_delivery: float = 0.0
    km_recharge: float = 0.0
    trips_completed: int = 0
    charges_completed: int = 0
    last_night_charge_day: int = -1

    def total_km(self) -> float:
        return self.km_pickup + self.km_delivery + self.km_recharge

    def position_xy(self, net: RoadNetwork) -> tuple[float, float]:
        if self.current_path is not None and self.current_path.node_sequence:
            return net.path_point(self.current_path, self.path_progress_m)
        return net.node_xy(self.node)

    def transition(self, to: VehicleState) -> None:
        """Move to a new state; only edges of the machine above are legal."""
        if (self.state, to) not in ALLOWED_TRANSITIONS:
            raise IllegalTransition(f"vehicle {self.vehicle_id}", self.state.value, to.value)
        self.state = to


def init_fleet(n: int, spec: VehicleSpec, net: RoadNetwork, seed) -> list[Vehicle]:
    """n vehicles at uniformly random nodes, batteries uniform between the
    charge threshold and full, all Idle. Deterministic under seed."""
    if n < 1:
        raise ValueError("fleet size must be at least 1")
    rng = np.random.default_rng(seed)
    node_ids = net.node_ids
    positions = rng.integers(0, len(node_ids), size=n)
    batteries = rng.uniform(spec.min_battery_km, spec.range_km, size=n)
    return [
        Vehicle(vehicle_id=i + 1, node=node_ids[positions[i]], battery_km=float(batteries[i]))
        for i in range(n)
    ]


def advance(vehicle: Vehicle, dt_s: float, spec: VehicleSpec, now_s: float) -> list[Event]:
    """Progress one vehicle by dt_s of simulated time ending at now_s.

    Emits Arrived when a path completes and ChargeComplete when a charge
    finishes; the engine applies the consequences. Battery decrements exactly
    match distance moved; dipping below zero raises BatteryUnderflow because
    dispatch feasibility should make that impossible.
    """
    if dt_s <= 0:
        raise ValueError("dt_s must be positive")
    state = vehicle.state
    if state is VehicleState.IDLE:
        return []
    if state is VehicleState.CHARGING:
        if vehicle.charge_finish_at_s is not None and now_s >= vehicle.charge_finish_at_s:
            return [Event(CHARGE_COMPLETE, vehicle.vehicle_id)]
        return []
    # moving states; a vehicle queued at a full station has no path
    path = vehicle.current_path
    if path is None:
        return []
    remaining = path.total_length_m - vehicle.path_progress_m
    move_m = min(spec.speed_kmh / 3.6 * dt_s, remaining)
    if move_m > 0:
        vehicle.path_progress_m += move_m
        moved_km = move_m / 1000.0
        vehicle.battery_km -= moved_km
        if vehicle.battery_km < -1e-9:
            raise BatteryUnderflow(vehicle.vehicle_id, vehicle.battery_km)
        if vehicle.battery_km < 0.0:
            vehicle.battery_km = 0.0
        if state is VehicleState.TO_PICKUP:
            vehicle.km_pickup += moved_km
        elif state is VehicleState.TO_DELIVERY:
            vehicle.km_delivery += moved_km
        else:
            vehicle.km_recharge += moved_km
    if path.total_length_m - vehicle.path_progress_m <= 1e-9:
        return [Event(ARRIVED, vehicle.vehicle_id)]
    return []


def needs_charge(vehicle: Vehicle, spec: VehicleSpec) -> bool:
    """True strictly below the threshold fraction of full range."""
    return vehicle.battery_km < spec.min_battery_km


def start_charge(
    vehicle: Vehicle, spec: VehicleSpec, station_kind: ChargeKind, now_s: float
) -> Vehicle:
    """Begin charging a vehicle parked at a station.

    Plug: duration is linear in the missing fraction of a full recharge.
    Swap: fixed duration regardless of level. In both cases the battery jumps
    to full when the engine processes ChargeComplete.
    """
    if vehicle.state is not VehicleState.TO_CHARGE or vehicle.current_path is not None:
        raise NotAtStation(
            f"vehicle {vehicle.vehicle_id} is not parked at a station "
            f"(state {vehicle.state.value})"
        )
    if station_kind is ChargeKind.PLUG:
        missing = 1.0 - vehicle.battery_km / spec.range_km
        duration = spec.full_recharge_s * missing
    else:
        duration = spec.swap_s
    vehicle.charge_finish_at_s = now_s + duration
    vehicle.transition(VehicleState.CHARGING)
    return vehicle


def complete_charge(vehicle: Vehicle, spec: VehicleSpec) -> Vehicle:
    """Fill the battery and return the vehicle to Idle.

    The caller is responsible for checking the clock against
    charge_finish_at_s and for freeing the station slot.
    """
    vehicle.transition(VehicleState.IDLE)
    vehicle.battery_km = spec.range_km
    vehicle.charge_finish_at_s = None
    vehicle.charges_completed += 1
    return vehicle
