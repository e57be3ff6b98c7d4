"""Regenerate the bundled desk dataset under src/fleetsim/data/.

The desk dataset is a synthetic one-day evaluation scenario small enough
to run in seconds: a 10x10 street grid with 350 m blocks, five charging
sites, a two-peak daily demand curve sampled in 7.5-minute bins, and a
frozen draw of 500 orders. Restaurants concentrate on eight central
nodes; destinations spread over the whole grid.

Run from the repository root:

    python3 tools/gen_desk_data.py

The orders file is a frozen draw (seed 42). Regenerating with an
unchanged generator is a no-op; any intentional change here must come
with refreshed data files in the same commit.
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fleetsim.demand import DemandProfile, generate_synthetic, ingest_orders, load_profile, write_orders_csv
from fleetsim.charging import load_stations
from fleetsim.network import load_network

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "fleetsim" / "data"

SIDE = 10
EDGE_M = 350
ORDER_COUNT = 500
ORDER_SEED = 42
BIN_WIDTH_S = 450

# one relative intensity anchor per hour; bins blend linearly toward the
# next hour so the curve has no jumps at hour boundaries
HOURLY_INTENSITY = [
    0.6, 0.35, 0.15, 0.1, 0.12, 0.2,
    0.35, 0.6, 0.9, 1.1, 1.4, 2.6,
    3.8, 3.0, 1.8, 1.4, 1.6, 2.8,
    4.6, 4.2, 3.0, 2.0, 1.3, 0.9,
]

RESTAURANT_NODES = (43, 44, 47, 48, 53, 54, 57, 58)
RESTAURANT_WEIGHT = 4.0
BACKGROUND_RESTAURANT_WEIGHT = 0.2
DESTINATION_WEIGHT = 1.0
RESTAURANT_NODE_DESTINATION_WEIGHT = 0.6

STATIONS = ((1, 23), (2, 28), (3, 55), (4, 73), (5, 78))
STATION_CAPACITY = 6


def node_id(row: int, col: int) -> int:
    return row * SIDE + col + 1


def network_lines() -> list[str]:
    lines = [
        f"# {SIDE}x{SIDE} street grid, {EDGE_M} m blocks, all edges two-way",
        f"# nodes numbered row-major from 1, coordinates in metres",
    ]
    for r in range(SIDE):
        for c in range(SIDE):
            lines.append(f"N,{node_id(r, c)},{c * EDGE_M},{r * EDGE_M}")
    eid = 1
    for r in range(SIDE):
        for c in range(SIDE):
            if c < SIDE - 1:
                lines.append(f"E,{eid},{node_id(r, c)},{node_id(r, c + 1)},{EDGE_M},1")
                eid += 1
            if r < SIDE - 1:
                lines.append(f"E,{eid},{node_id(r, c)},{node_id(r + 1, c)},{EDGE_M},1")
                eid += 1
    return lines


def station_lines(kind: str) -> list[str]:
    lines = [f"# five {kind.lower()} sites spread over the grid, {STATION_CAPACITY} slots each"]
    for sid, node in STATIONS:
        lines.append(f"S,{sid},{node},{STATION_CAPACITY},{kind}")
    return lines


def bin_weights() -> list[float]:
    bins_per_hour = 3600 // BIN_WIDTH_S
    weights = []
    for h in range(24):
        a = HOURLY_INTENSITY[h]
        b = HOURLY_INTENSITY[(h + 1) % 24]
        for k in range(bins_per_hour):
            weights.append(a + (b - a) * k / bins_per_hour)
    return weights


def profile_lines() -> list[str]:
    lines = [
        "# illustrative two-peak daily demand curve: lunch around 12:00,",
        "# a larger dinner peak around 18:00, and a 02:00-05:00 trough;",
        "# not calibrated to any real order book",
        f"{BIN_WIDTH_S}",
        f"{ORDER_COUNT}",
    ]
    lines.extend(f"{w:.6g}" for w in bin_weights())
    lines.append("# node, restaurant weight, destination weight")
    for n in range(1, SIDE * SIDE + 1):
        rw = RESTAURANT_WEIGHT if n in RESTAURANT_NODES else BACKGROUND_RESTAURANT_WEIGHT
        dw = (
            RESTAURANT_NODE_DESTINATION_WEIGHT
            if n in RESTAURANT_NODES
            else DESTINATION_WEIGHT
        )
        lines.append(f"{n},{rw},{dw}")
    return lines


def write(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(lines)} lines)")


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    write(DATA_DIR / "desk_network.txt", network_lines())
    write(DATA_DIR / "desk_stations_plug.txt", station_lines("Plug"))
    write(DATA_DIR / "desk_stations_swap.txt", station_lines("Swap"))
    write(DATA_DIR / "desk_profile.txt", profile_lines())

    profile = load_profile(DATA_DIR / "desk_profile.txt")
    orders = generate_synthetic(profile, seed=ORDER_SEED)
    write_orders_csv(orders, DATA_DIR / "desk_orders.csv")
    print(f"wrote {DATA_DIR / 'desk_orders.csv'} ({len(orders)} orders, seed {ORDER_SEED})")

    # round-trip check: the bundle must load through the public readers
    net = load_network(DATA_DIR / "desk_network.txt")
    assert len(net.node_ids) == SIDE * SIDE
    for name in ("desk_stations_plug.txt", "desk_stations_swap.txt"):
        assert len(load_stations(DATA_DIR / name, net)) == len(STATIONS)
    back = ingest_orders(DATA_DIR / "desk_orders.csv", net)
    assert [(o.order_id, o.restaurant_node, o.destination_node) for o in back] == [
        (o.order_id, o.restaurant_node, o.destination_node) for o in orders
    ]
    print("round-trip ok")


if __name__ == "__main__":
    main()
