import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetsim.charging import (
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
from fleetsim.errors import NoStations, NotAtStation, ParseError, UnknownNode
from fleetsim.fleet import ChargeKind, Vehicle, VehicleSpec, VehicleState
from fleetsim.network import load_network
from tests.oracles import floyd_warshall, random_connected_graph

SLAV_SPEC = VehicleSpec(
    speed_kmh=8.0, range_km=35.0, min_level_frac=0.25, full_recharge_s=16_200.0
)

NC = ChargingStrategy(kind=StrategyKind.NIGHT)


def parked(vid: int, node: int, battery: float = 10.0) -> Vehicle:
    v = Vehicle(vehicle_id=vid, node=node, battery_km=battery)
    v.state = VehicleState.TO_CHARGE
    return v


def idle(vid: int, battery: float, node: int = 1) -> Vehicle:
    return Vehicle(vehicle_id=vid, node=node, battery_km=battery)


# Independent restatement of the selection rule, driven by Floyd-Warshall
# distances rather than the network's own shortest paths.
def oracle_select(vehicle_node, stations, dist_of):
    free = [s for s in stations if len(s.occupants) < s.capacity]
    pool = free if free else stations
    return min(pool, key=lambda s: (dist_of(vehicle_node, s.node), s.station_id)).station_id


@pytest.fixture
def line_net():
    return load_network(
        [
            "N,1,0,0",
            "N,2,1000,0",
            "N,3,2000,0",
            "N,4,3000,0",
            "E,1,1,2,1000,1",
            "E,2,2,3,1000,1",
            "E,3,3,4,1000,1",
        ]
    )


class TestLoadStations:
    def test_parses_both_kinds(self):
        stations = load_stations(["S,1,10,2,Plug", "S,2,20,1,Swap"])
        assert [s.station_id for s in stations] == [1, 2]
        assert stations[0].kind is ChargeKind.PLUG
        assert stations[1].kind is ChargeKind.SWAP
        assert stations[0].capacity == 2
        assert stations[0].occupants == set()
        assert list(stations[0].queue) == []

    def test_comments_and_blanks(self):
        stations = load_stations(["# chargers", "", "S,5,1,3,Plug  # downtown"])
        assert stations[0].station_id == 5

    def test_sorted_by_id(self):
        stations = load_stations(["S,9,1,1,Plug", "S,2,2,1,Plug"])
        assert [s.station_id for s in stations] == [2, 9]

    @pytest.mark.parametrize(
        "line",
        [
            "X,1,10,2,Plug",
            "S,1,10,2",
            "S,one,10,2,Plug",
            "S,1,10,zero,Plug",
            "S,1,10,2,Tesla",
            "S,1,10,0,Plug",
        ],
    )
    def test_malformed(self, line):
        with pytest.raises(ParseError):
            load_stations([line])

    def test_duplicate_id(self):
        with pytest.raises(ParseError) as exc:
            load_stations(["S,1,10,2,Plug", "S,1,11,2,Plug"])
        assert exc.value.line_no == 2

    def test_unknown_node_with_network(self, line_net):
        with pytest.raises(UnknownNode):
            load_stations(["S,1,99,2,Plug"], net=line_net)

    def test_empty_is_an_error(self):
        with pytest.raises(NoStations):
            load_stations(["# nothing here"])


class TestSelectStation:
    def test_single_station(self, line_net):
        st1 = Station(station_id=1, node=3, capacity=2)
        assert select_station(parked(1, 1), [st1], line_net) == 1

    def test_prefers_free_over_nearer_full(self, line_net):
        near_full = Station(station_id=1, node=2, capacity=1, occupants={7})
        far_free = Station(station_id=2, node=4, capacity=1)
        assert select_station(parked(1, 1), [near_full, far_free], line_net) == 2

    def test_all_full_falls_back_to_nearest(self, line_net):
        a = Station(station_id=1, node=2, capacity=1, occupants={7})
        b = Station(station_id=2, node=4, capacity=1, occupants={8})
        assert select_station(parked(1, 1), [a, b], line_net) == 1

    def test_tie_breaks_to_smaller_id(self, line_net):
        # nodes 1 and 3 are both 1000 m from node 2
        a = Station(station_id=4, node=3, capacity=1)
        b = Station(station_id=2, node=1, capacity=1)
        assert select_station(parked(1, 2), [a, b], line_net) == 2

    def test_no_stations(self, line_net):
        with pytest.raises(NoStations):
            select_station(parked(1, 1), [], line_net)

    def test_matches_oracle_on_random_configs(self):
        rng = np.random.default_rng(1234)
        for _ in range(20):
            lines, edge_list = random_connected_graph(rng, int(rng.integers(8, 17)))
            net = load_network(lines)
            nodes = net.node_ids
            index, dist = floyd_warshall(nodes, edge_list)
            stations = []
            for sid in range(1, 11):
                cap = int(rng.integers(1, 4))
                occ = set(range(100, 100 + int(rng.integers(0, cap + 1))))
                stations.append(
                    Station(
                        station_id=sid,
                        node=int(rng.choice(nodes)),
                        capacity=cap,
                        occupants=occ,
                    )
                )
            vehicle = parked(1, int(rng.choice(nodes)))
            expected = oracle_select(
                vehicle.node, stations, lambda a, b: dist[index[a], index[b]]
            )
            assert select_station(vehicle, stations, net) == expected


class TestArriveAtStation:
    def test_occupies_free_slot_and_charges(self):
        st1 = Station(station_id=1, node=5, capacity=2, occupants={9})
        v = parked(3, 5, battery=0.0)
        arrive_at_station(v, st1, SLAV_SPEC, now_s=50.0)
        assert st1.occupants == {9, 3}
        assert v.state is VehicleState.CHARGING
        assert v.charge_finish_at_s == pytest.approx(50.0 + 16_200.0)

    def test_full_station_queues(self):
        st1 = Station(station_id=1, node=5, capacity=1, occupants={9})
        v = parked(3, 5)
        arrive_at_station(v, st1, SLAV_SPEC, now_s=50.0)
        assert list(st1.queue) == [3]
        assert v.state is VehicleState.TO_CHARGE
        assert v.charge_finish_at_s is None

    def test_wrong_node_rejected(self):
        st1 = Station(station_id=1, node=5, capacity=1)
        with pytest.raises(NotAtStation):
            arrive_at_station(parked(3, 4), st1, SLAV_SPEC, now_s=0.0)

    def test_release_then_admit_is_fifo(self):
        st1 = Station(station_id=1, node=5, capacity=1, occupants={7})
        first, second = parked(3, 5), parked(9, 5)
        arrive_at_station(first, st1, SLAV_SPEC, now_s=0.0)
        arrive_at_station(second, st1, SLAV_SPEC, now_s=0.0)
        assert list(st1.queue) == [3, 9]

        release_slot(st1, 7)
        admitted = admit_from_queue(st1, {3: first, 9: second}, SLAV_SPEC, now_s=60.0)
        assert admitted == [3]
        assert st1.occupants == {3}
        assert list(st1.queue) == [9]
        assert first.state is VehicleState.CHARGING
        assert second.state is VehicleState.TO_CHARGE

    def test_admit_fills_every_free_slot(self):
        st1 = Station(station_id=1, node=5, capacity=3)
        fleet = {vid: parked(vid, 5) for vid in (4, 5, 6)}
        st1.queue.extend([4, 5, 6])
        admitted = admit_from_queue(st1, fleet, SLAV_SPEC, now_s=0.0)
        assert admitted == [4, 5, 6]
        assert not st1.queue

    @settings(max_examples=50, deadline=None)
    @given(
        ids=st.lists(st.integers(min_value=1, max_value=60), min_size=1, max_size=12, unique=True),
        capacity=st.integers(min_value=1, max_value=4),
    )
    def test_capacity_never_exceeded_and_order_preserved(self, ids, capacity):
        st1 = Station(station_id=1, node=5, capacity=capacity)
        fleet = {vid: parked(vid, 5) for vid in ids}
        for vid in ids:
            arrive_at_station(fleet[vid], st1, SLAV_SPEC, now_s=0.0)
            assert len(st1.occupants) <= capacity
            assert st1.occupants.isdisjoint(st1.queue)
        assert st1.occupants == set(ids[:capacity])
        assert list(st1.queue) == ids[capacity:]

        served = sorted(st1.occupants)
        while st1.queue:
            for vid in list(st1.occupants):
                release_slot(st1, vid)
            batch = admit_from_queue(st1, fleet, SLAV_SPEC, now_s=0.0)
            assert len(st1.occupants) <= capacity
            served.extend(batch)
        assert served[capacity:] == ids[capacity:]


class TestNightSweep:
    def test_before_window_is_empty(self):
        fleet = [idle(1, battery=5.0)]
        assert night_charge_sweep(7_195.0, fleet, SLAV_SPEC, NC) == []

    def test_window_start_inclusive(self):
        v = idle(1, battery=0.89 * 35.0)
        assert night_charge_sweep(7_200.0, [v], SLAV_SPEC, NC) == [v]

    def test_window_end_exclusive(self):
        v = idle(1, battery=5.0)
        assert night_charge_sweep(17_995.0, [v], SLAV_SPEC, NC) == [v]
        assert night_charge_sweep(18_000.0, [v], SLAV_SPEC, NC) == []

    def test_trigger_is_strictly_below_ninety_percent(self):
        at_trigger = idle(1, battery=0.90 * 35.0)
        below = idle(2, battery=0.90 * 35.0 - 0.01)
        due = night_charge_sweep(10_000.0, [at_trigger, below], SLAV_SPEC, NC)
        assert due == [below]

    def test_busy_vehicles_wait_for_idleness(self):
        busy = idle(1, battery=5.0)
        busy.state = VehicleState.TO_DELIVERY
        assert night_charge_sweep(10_000.0, [busy], SLAV_SPEC, NC) == []
        busy.state = VehicleState.IDLE
        assert night_charge_sweep(12_000.0, [busy], SLAV_SPEC, NC) == [busy]

    def test_once_per_day(self):
        v = idle(1, battery=5.0)
        v.last_night_charge_day = 0
        assert night_charge_sweep(10_000.0, [v], SLAV_SPEC, NC) == []
        # next day's window opens the flag again
        assert night_charge_sweep(10_000.0 + 86_400.0, [v], SLAV_SPEC, NC) == [v]

    @pytest.mark.parametrize("kind", [StrategyKind.CONVENTIONAL, StrategyKind.FAST_SWAP])
    def test_day_strategies_never_sweep(self, kind):
        strategy = ChargingStrategy(kind=kind)
        fleet = [idle(1, battery=1.0)]
        assert night_charge_sweep(10_000.0, fleet, SLAV_SPEC, strategy) == []

    def test_strategic_kind_uses_window_too(self):
        strategy = ChargingStrategy(kind=StrategyKind.STRATEGIC)
        v = idle(1, battery=5.0)
        assert night_charge_sweep(10_000.0, [v], SLAV_SPEC, strategy) == [v]

    def test_result_sorted_by_vehicle_id(self):
        fleet = [idle(5, 2.0), idle(1, 2.0), idle(3, 2.0)]
        due = night_charge_sweep(10_000.0, fleet, SLAV_SPEC, NC)
        assert [v.vehicle_id for v in due] == [1, 3, 5]


class TestStrategyValidation:
    def test_window_must_be_ordered(self):
        with pytest.raises(ValueError):
            ChargingStrategy(kind=StrategyKind.NIGHT, night_window_s=(18_000.0, 7_200.0))

    def test_trigger_must_be_positive_fraction(self):
        with pytest.raises(ValueError):
            ChargingStrategy(kind=StrategyKind.NIGHT, night_trigger_frac=0.0)

    def test_station_needs_a_slot(self):
        with pytest.raises(ValueError):
            Station(station_id=1, node=1, capacity=0)
