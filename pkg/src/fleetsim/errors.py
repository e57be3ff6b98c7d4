"""Exception taxonomy shared by every fleetsim module.

All package errors derive from FleetSimError so callers (CLI, server) can
catch one base class. Parsing errors carry the offending line or row number.
"""

from __future__ import annotations


class FleetSimError(Exception):
    """Base class for every error raised by this package."""


class ParseError(FleetSimError):
    """A line or row in an input file could not be interpreted."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DisconnectedGraph(FleetSimError):
    """The loaded road graph is not strongly connected."""

    def __init__(self, orphan_node: int):
        self.orphan_node = orphan_node
        super().__init__(
            f"graph is not strongly connected; smallest unreachable node id: {orphan_node}"
        )


class UnknownNode(FleetSimError):
    """A node id was referenced that does not exist in the network."""

    def __init__(self, node_id, row: int | None = None):
        self.node_id = node_id
        self.row = row
        where = f" (row {row})" if row is not None else ""
        super().__init__(f"unknown node id {node_id}{where}")


class SameOriginDestination(FleetSimError):
    """An order's pickup and drop-off nodes are identical."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row}: restaurant and destination node are identical")


class NegativeTime(FleetSimError):
    """An order carries a negative placement time."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row}: negative placement time")


class DegenerateProfile(FleetSimError):
    """A demand profile cannot produce valid orders."""


class BatteryUnderflow(FleetSimError):
    """A vehicle was driven below an empty battery.

    This signals a dispatcher feasibility bug: a correctly dispatched vehicle
    always holds enough charge to finish its leg and reach a station.
    """

    def __init__(self, vehicle_id: int, battery_km: float):
        self.vehicle_id = vehicle_id
        self.battery_km = battery_km
        super().__init__(
            f"vehicle {vehicle_id} battery underflow ({battery_km:.6f} km)"
        )


class IllegalTransition(FleetSimError):
    """A vehicle or order attempted a state change outside its machine."""

    def __init__(self, entity: str, from_state: str, to_state: str):
        self.entity = entity
        self.from_state = from_state
        self.to_state = to_state
        super().__init__(f"{entity}: illegal transition {from_state} -> {to_state}")


class NotAtStation(FleetSimError):
    """start_charge was called on a vehicle that is not parked at a station."""


class NoStations(FleetSimError):
    """A charging trip was requested but the scenario has no stations."""


class ZeroDistance(FleetSimError):
    """Per-km emission intensity is undefined for zero distance."""


class NonPositiveInput(FleetSimError):
    """Reduction arithmetic requires strictly positive inputs."""


class ConfigError(FleetSimError):
    """A scenario configuration is internally inconsistent."""


class SimulationStalled(FleetSimError):
    """No further progress is possible: orders wait, every vehicle is stuck.

    Raised instead of looping forever; carries diagnostics for the report.
    """

    def __init__(self, clock_s: float, waiting_orders: int, detail: str = ""):
        self.clock_s = clock_s
        self.waiting_orders = waiting_orders
        msg = (
            f"simulation stalled at t={clock_s:.0f}s with "
            f"{waiting_orders} waiting orders that no vehicle can ever serve"
        )
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class MinFleetNotFound(FleetSimError):
    """The fleet-size scan reached its maximum without meeting the target."""

    def __init__(self, fleet_max: int, best_pct: float, best_fleet: int | None, detail: str = ""):
        self.fleet_max = fleet_max
        self.best_pct = best_pct
        self.best_fleet = best_fleet
        msg = (
            f"no fleet size up to {fleet_max} met the service level; "
            f"best was {best_pct:.2f}% under 40 min"
        )
        if best_fleet is not None:
            msg += f" at fleet size {best_fleet}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InvalidValue(FleetSimError):
    """A live-session control carried a value that cannot be applied."""


class SessionClosed(FleetSimError):
    """The live session has been shut down."""
