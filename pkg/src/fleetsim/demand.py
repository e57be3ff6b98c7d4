"""Order stream supply: CSV ingest and a parametric synthetic generator.

Orders come from one of two sources. A trip file with columns
`order_id,placed_at_s,restaurant_node,destination_node` (header optional) is
the replayable path. The generator draws a day of orders from a time-of-day
intensity profile and per-node spatial weights; it is fully deterministic
under its seed.

Profile file layout (UTF-8, `#` comments):
  line 1: bin width in seconds
  line 2: total order count
  then one non-negative weight per line, bins covering exactly 24 hours
  then spatial rows `node,restaurant_weight,destination_weight` (the comma
  marks where weights end and spatial rows begin)
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path as FilePath
from typing import Iterable, Optional

import numpy as np

from .errors import (
    DegenerateProfile,
    NegativeTime,
    ParseError,
    SameOriginDestination,
    UnknownNode,
)
from .network import RoadNetwork

DAY_S = 86_400

ORDERS_HEADER = ("order_id", "placed_at_s", "restaurant_node", "destination_node")


class OrderState(Enum):
    WAITING = "Waiting"
    ASSIGNED = "Assigned"
    IN_TRANSIT = "InTransit"
    DELIVERED = "Delivered"
    DROPPED = "Dropped"  # live sessions only


@dataclass
class Order:
    """One food-delivery request and its lifecycle timestamps.

    Timestamps are seconds since simulation start and must stay monotone:
    placed <= assigned <= picked_up <= delivered whenever present.
    """

    order_id: int
    placed_at_s: float
    restaurant_node: int
    destination_node: int
    state: OrderState = OrderState.WAITING
    assigned_at_s: Optional[float] = None
    picked_up_at_s: Optional[float] = None
    delivered_at_s: Optional[float] = None

    def wait_s(self) -> float:
        """Placement-to-delivery time; only meaningful once delivered."""
        if self.delivered_at_s is None:
            raise ValueError(f"order {self.order_id} not delivered")
        return self.delivered_at_s - self.placed_at_s


@dataclass
class DemandProfile:
    """Time-of-day intensity plus spatial weights for the generator."""

    bin_width_s: int
    bin_weights: tuple[float, ...]
    total_orders: int
    spatial_weights: dict[int, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.bin_width_s <= 0:
            raise DegenerateProfile("bin width must be positive")
        if self.bin_width_s * len(self.bin_weights) != DAY_S:
            raise DegenerateProfile(
                f"{len(self.bin_weights)} bins of {self.bin_width_s}s do not cover 24h"
            )
        if any(w < 0 for w in self.bin_weights):
            raise DegenerateProfile("bin weights must be non-negative")
        if self.total_orders < 0:
            raise DegenerateProfile("total order count must be non-negative")
        if not any(w > 0 for w in self.bin_weights):
            raise DegenerateProfile("all bin weights are zero")
        if not any(rw > 0 for rw, _ in self.spatial_weights.values()):
            raise DegenerateProfile("no positive restaurant weight")
        if not any(dw > 0 for _, dw in self.spatial_weights.values()):
            raise DegenerateProfile("no positive destination weight")


def ingest_orders(source: str | FilePath | Iterable[str], net: RoadNetwork) -> list[Order]:
    """Read an orders CSV, validate each row, and return orders sorted by time.

    Row numbers in errors are 1-based file positions. Ties on placed_at_s keep
    file order (the sort is stable).

    :raises ParseError: malformed field or duplicate order id
    :raises UnknownNode: row references a node missing from the network
    :raises SameOriginDestination: pickup equals drop-off
    :raises NegativeTime: placement before t=0
    """
    rows: list[tuple[float, int, Order]] = []
    seen_ids: set[int] = set()
    for row_no, raw in _iter_lines(source):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = next(csv.reader([line]))
        if tuple(p.strip() for p in parts) == ORDERS_HEADER:
            continue
        if len(parts) != 4:
            raise ParseError("expected order_id,placed_at_s,restaurant_node,destination_node", row_no)
        try:
            oid = int(parts[0])
            placed = float(parts[1])
            rest = int(parts[2])
            dest = int(parts[3])
        except ValueError as exc:
            raise ParseError(str(exc), row_no) from None
        if oid in seen_ids:
            raise ParseError(f"duplicate order id {oid}", row_no)
        seen_ids.add(oid)
        if placed < 0:
            raise NegativeTime(row_no)
        if not net.has_node(rest):
            raise UnknownNode(rest, row=row_no)
        if not net.has_node(dest):
            raise UnknownNode(dest, row=row_no)
        if rest == dest:
            raise SameOriginDestination(row_no)
        rows.append((placed, row_no, Order(oid, placed, rest, dest)))
    rows.sort(key=lambda r: (r[0], r[1]))
    return [order for _, _, order in rows]


def generate_synthetic(profile: DemandProfile, seed: int) -> list[Order]:
    """Draw exactly profile.total_orders orders, deterministic under seed.

    Per-bin counts are multinomial over the normalized bin weights, times are
    uniform within each bin, and restaurant/destination nodes are drawn
    independently from the spatial weights with rejection of equal pairs
    (bounded at 1000 retries). Ids number 1..n in time order.
    """
    rng = np.random.default_rng(seed)
    weights = np.asarray(profile.bin_weights, dtype=float)
    p = weights / weights.sum()
    counts = rng.multinomial(profile.total_orders, p)
    times: list[np.ndarray] = []
    for i, c in enumerate(counts):
        if c == 0:
            continue
        lo = i * profile.bin_width_s
        times.append(rng.uniform(lo, lo + profile.bin_width_s, size=int(c)))
    all_times = np.sort(np.concatenate(times)) if times else np.empty(0)

    nodes = np.array(sorted(profile.spatial_weights), dtype=np.int64)
    rw = np.array([profile.spatial_weights[n][0] for n in nodes], dtype=float)
    dw = np.array([profile.spatial_weights[n][1] for n in nodes], dtype=float)
    rp = rw / rw.sum()
    dp = dw / dw.sum()

    n = len(all_times)
    rest = nodes[rng.choice(len(nodes), size=n, p=rp)]
    dest = nodes[rng.choice(len(nodes), size=n, p=dp)]
    for _ in range(1000):
        clash = rest == dest
        if not clash.any():
            break
        idx = np.flatnonzero(clash)
        rest[idx] = nodes[rng.choice(len(nodes), size=len(idx), p=rp)]
        dest[idx] = nodes[rng.choice(len(nodes), size=len(idx), p=dp)]
    else:
        raise DegenerateProfile(
            "could not draw distinct restaurant/destination in 1000 tries"
        )
    return [
        Order(i + 1, float(all_times[i]), int(rest[i]), int(dest[i]))
        for i in range(n)
    ]


def load_profile(source: str | FilePath | Iterable[str]) -> DemandProfile:
    """Parse a profile file; see the module docstring for the layout."""
    bin_width: Optional[int] = None
    total: Optional[int] = None
    weights: list[float] = []
    spatial: dict[int, tuple[float, float]] = {}
    for line_no, raw in _iter_lines(source):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if "," in line:
                parts = [s.strip() for s in line.split(",")]
                if len(parts) != 3:
                    raise ValueError("spatial row needs node,restaurant_w,dest_w")
                node = int(parts[0])
                if node in spatial:
                    raise ValueError(f"duplicate spatial row for node {node}")
                spatial[node] = (float(parts[1]), float(parts[2]))
            elif bin_width is None:
                bin_width = int(line)
            elif total is None:
                total = int(line)
            else:
                if spatial:
                    raise ValueError("weight lines must precede spatial rows")
                weights.append(float(line))
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
    if bin_width is None or total is None or not weights:
        raise ParseError("profile needs bin width, total count, and weights")
    try:
        return DemandProfile(bin_width, tuple(weights), total, spatial)
    except DegenerateProfile:
        raise


def write_orders_csv(orders: list[Order], path: str | FilePath) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ORDERS_HEADER)
        for o in orders:
            placed = int(o.placed_at_s) if o.placed_at_s == int(o.placed_at_s) else o.placed_at_s
            writer.writerow([o.order_id, placed, o.restaurant_node, o.destination_node])


def _iter_lines(source: str | FilePath | Iterable[str]):
    if isinstance(source, (str, FilePath)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
    else:
        yield from enumerate(source, start=1)
