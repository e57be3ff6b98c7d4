"""Order-to-vehicle assignment policies.

Two policies are supported. Nearest sends the closest idle vehicle that can
finish the trip and still reach a charger. Strategic looks at the closest
few such vehicles and trades distance against remaining battery, so that a
slightly farther but better-charged vehicle can win the order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .charging import Station
from .demand import Order
from .fleet import Vehicle, VehicleSpec, VehicleState
from .network import RoadNetwork


class PolicyKind(Enum):
    NEAREST = "Nearest"
    STRATEGIC = "Strategic"


@dataclass(frozen=True)
class DispatchPolicy:
    kind: PolicyKind = PolicyKind.NEAREST
    candidate_count: int = 5
    battery_exponent: float = 1.0

    def __post_init__(self):
        if self.candidate_count < 1:
            raise ValueError(f"candidate_count must be >= 1: {self.candidate_count}")
        if self.battery_exponent <= 0.0:
            raise ValueError(f"battery_exponent must be > 0: {self.battery_exponent}")


def feasible(
    vehicle: Vehicle,
    order: Order,
    net: RoadNetwork,
    spec: VehicleSpec,
    stations: Sequence[Station],
) -> bool:
    """Can this vehicle serve the order and still reach a charger afterward?

    The test is on the battery left after the full trip (approach leg plus
    delivery leg): it must cover the distance from the destination to the
    nearest station. No extra reserve is required.
    """
    trip_km = (
        net.network_distance(vehicle.node, order.restaurant_node)
        + net.network_distance(order.restaurant_node, order.destination_node)
    ) / 1000.0
    return vehicle.battery_km - trip_km >= _nearest_station_km(
        net, order.destination_node, stations
    )


def assign_nearest(
    order: Order,
    vehicles: Sequence[Vehicle],
    net: RoadNetwork,
    spec: VehicleSpec,
    stations: Sequence[Station],
) -> Optional[int]:
    """Closest idle feasible vehicle, ties to the smaller id. None if no candidate."""
    best: Optional[tuple[float, int]] = None
    for v in vehicles:
        if v.state is not VehicleState.IDLE:
            continue
        if not feasible(v, order, net, spec, stations):
            continue
        key = (net.network_distance(v.node, order.restaurant_node), v.vehicle_id)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def assign_strategic(
    order: Order,
    vehicles: Sequence[Vehicle],
    net: RoadNetwork,
    spec: VehicleSpec,
    stations: Sequence[Station],
    policy: DispatchPolicy,
) -> Optional[int]:
    """Best distance-to-battery score among the closest candidates.

    Candidates are the policy.candidate_count nearest idle feasible vehicles.
    The score distance_m / (battery fraction)^exponent prefers close, full
    vehicles; ties break toward the smaller id.
    """
    ranked: list[tuple[float, int, Vehicle]] = []
    for v in vehicles:
        if v.state is not VehicleState.IDLE:
            continue
        if not feasible(v, order, net, spec, stations):
            continue
        dist_m = net.network_distance(v.node, order.restaurant_node)
        ranked.append((dist_m, v.vehicle_id, v))
    if not ranked:
        return None
    ranked.sort(key=lambda item: item[:2])
    shortlist = ranked[: policy.candidate_count]

    def score(item: tuple[float, int, Vehicle]) -> tuple[float, int]:
        dist_m, vid, v = item
        frac = v.battery_km / spec.range_km
        return (dist_m / frac**policy.battery_exponent, vid)

    return min(shortlist, key=score)[1]


def _nearest_station_km(net: RoadNetwork, node: int, stations: Sequence[Station]) -> float:
    if not stations:
        return 0.0
    return min(net.network_distance(node, s.node) for s in stations) / 1000.0
