import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetsim.errors import BatteryUnderflow, IllegalTransition, NotAtStation
from fleetsim.fleet import (
    ALLOWED_TRANSITIONS,
    ARRIVED,
    CHARGE_COMPLETE,
    ChargeKind,
    Vehicle,
    VehicleClass,
    VehicleSpec,
    VehicleState,
    advance,
    can_transition,
    init_fleet,
    needs_charge,
    start_charge,
)
from fleetsim.network import load_network

SLAV_SPEC = VehicleSpec(
    speed_kmh=8.0, range_km=35.0, min_level_frac=0.25, full_recharge_s=16_200.0
)
ICE_SPEC = VehicleSpec(
    speed_kmh=30.0,
    range_km=500.0,
    min_level_frac=0.15,
    full_recharge_s=180.0,
    vehicle_class=VehicleClass.ICE_CAR,
)


@pytest.fixture
def net():
    return load_network(
        ["N,1,0,0", "N,2,1000,0", "N,3,2000,0", "E,1,1,2,1000,1", "E,2,2,3,1000,1"]
    )


def moving_vehicle(net, state=VehicleState.TO_PICKUP, battery=35.0, frm=1, to=2):
    v = Vehicle(vehicle_id=1, node=frm, battery_km=battery)
    v.state = state
    v.current_path = net.shortest_path(frm, to)
    return v


class TestSpec:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            VehicleSpec(0, 35, 0.25, 100)
        with pytest.raises(ValueError):
            VehicleSpec(8, -1, 0.25, 100)
        with pytest.raises(ValueError):
            VehicleSpec(8, 35, 1.0, 100)
        with pytest.raises(ValueError):
            VehicleSpec(8, 35, 0.0, 100)

    def test_min_battery(self):
        assert SLAV_SPEC.min_battery_km == pytest.approx(8.75)


class TestFsmMatrix:
    def test_exactly_the_allowed_edges(self):
        S = VehicleState
        expected = {
            (S.IDLE, S.TO_PICKUP),
            (S.IDLE, S.TO_CHARGE),
            (S.TO_PICKUP, S.TO_DELIVERY),
            (S.TO_DELIVERY, S.IDLE),
            (S.TO_DELIVERY, S.TO_CHARGE),
            (S.TO_CHARGE, S.CHARGING),
            (S.CHARGING, S.IDLE),
        }
        assert set(ALLOWED_TRANSITIONS) == expected
        for frm, to in itertools.product(S, S):
            assert can_transition(frm, to) == ((frm, to) in expected)

    def test_illegal_transition_raises(self):
        v = Vehicle(vehicle_id=3, node=1, battery_km=10.0)
        with pytest.raises(IllegalTransition):
            v.transition(VehicleState.TO_DELIVERY)
        v.transition(VehicleState.TO_PICKUP)
        with pytest.raises(IllegalTransition):
            v.transition(VehicleState.IDLE)


class TestInitFleet:
    def test_single_vehicle(self, net):
        fleet = init_fleet(1, SLAV_SPEC, net, seed=9)
        (v,) = fleet
        assert v.state is VehicleState.IDLE
        assert v.node in net.node_ids
        assert SLAV_SPEC.min_battery_km <= v.battery_km <= SLAV_SPEC.range_km

    def test_determinism(self, net):
        a = init_fleet(300, SLAV_SPEC, net, seed=4)
        b = init_fleet(300, SLAV_SPEC, net, seed=4)
        assert repr(a) == repr(b)

    def test_battery_bounds_large_fleet(self, net):
        fleet = init_fleet(10_000, SLAV_SPEC, net, seed=1)
        batteries = [v.battery_km for v in fleet]
        assert min(batteries) >= 8.75  # quarter of a 35 km range
        assert max(batteries) <= 35.0

    def test_rejects_empty_fleet(self, net):
        with pytest.raises(ValueError):
            init_fleet(0, SLAV_SPEC, net, seed=0)


class TestAdvance:
    def test_idle_is_inert(self, net):
        v = Vehicle(vehicle_id=1, node=1, battery_km=20.0)
        assert advance(v, 5.0, SLAV_SPEC, now_s=5.0) == []
        assert v.battery_km == 20.0

    def test_exact_arrival_kinematics(self, net):
        # 1000 m at 30 km/h is exactly 120 s; battery drops exactly 1.0 km
        v = moving_vehicle(net, battery=35.0)
        events = advance(v, 120.0, ICE_SPEC, now_s=120.0)
        assert events == [(ARRIVED, 1)]
        assert v.battery_km == 34.0
        assert v.km_pickup == 1.0

    def test_clamps_at_path_end(self, net):
        # 10 m left; 8 km/h over 5 s would cover 11.1 m; only 10 m happens
        v = moving_vehicle(net, battery=20.0)
        v.path_progress_m = 990.0
        events = advance(v, 5.0, SLAV_SPEC, now_s=5.0)
        assert events == [(ARRIVED, 1)]
        assert v.battery_km == pytest.approx(19.99, abs=1e-12)
        assert v.path_progress_m == 1000.0

    def test_partial_progress_no_event(self, net):
        v = moving_vehicle(net, battery=20.0)
        events = advance(v, 5.0, SLAV_SPEC, now_s=5.0)
        assert events == []
        assert v.path_progress_m == pytest.approx(8 / 3.6 * 5)

    def test_zero_length_leg_arrives_immediately(self, net):
        v = moving_vehicle(net, state=VehicleState.TO_CHARGE, frm=1, to=1)
        events = advance(v, 5.0, SLAV_SPEC, now_s=5.0)
        assert events == [(ARRIVED, 1)]
        assert v.battery_km == 35.0

    def test_charging_completion_event(self):
        v = Vehicle(vehicle_id=2, node=1, battery_km=5.0)
        v.state = VehicleState.CHARGING
        v.charge_finish_at_s = 100.0
        assert advance(v, 5.0, SLAV_SPEC, now_s=95.0) == []
        assert advance(v, 5.0, SLAV_SPEC, now_s=100.0) == [(CHARGE_COMPLETE, 2)]

    def test_queued_vehicle_without_path_is_inert(self):
        v = Vehicle(vehicle_id=2, node=1, battery_km=5.0)
        v.state = VehicleState.TO_CHARGE
        assert advance(v, 5.0, SLAV_SPEC, now_s=5.0) == []

    def test_battery_underflow_raises(self, net):
        v = moving_vehicle(net, battery=0.005)
        with pytest.raises(BatteryUnderflow):
            advance(v, 30.0, SLAV_SPEC, now_s=30.0)

    def test_rejects_nonpositive_dt(self, net):
        v = moving_vehicle(net)
        with pytest.raises(ValueError):
            advance(v, 0.0, SLAV_SPEC, now_s=0.0)

    @settings(max_examples=40, deadline=None)
    @given(dts=st.lists(st.floats(min_value=0.5, max_value=30.0), min_size=1, max_size=60))
    def test_battery_conservation(self, dts):
        net = load_network(
            ["N,1,0,0", "N,2,1000,0", "N,3,2000,0", "E,1,1,2,1000,1", "E,2,2,3,1000,1"]
        )
        v = moving_vehicle(net, battery=30.0, frm=1, to=3)
        start = v.battery_km
        clock = 0.0
        for dt in dts:
            clock += dt
            advance(v, dt, SLAV_SPEC, now_s=clock)
        spent = start - v.battery_km
        assert spent == pytest.approx(v.total_km(), abs=1e-9)
        assert spent == pytest.approx(v.path_progress_m / 1000.0, abs=1e-9)
        assert 0.0 <= v.battery_km <= SLAV_SPEC.range_km

    def test_odometer_attribution_by_state(self, net):
        totals = {}
        for state, field_name in [
            (VehicleState.TO_PICKUP, "km_pickup"),
            (VehicleState.TO_DELIVERY, "km_delivery"),
            (VehicleState.TO_CHARGE, "km_recharge"),
        ]:
            v = moving_vehicle(net, state=state, battery=30.0)
            advance(v, 90.0, SLAV_SPEC, now_s=90.0)
            moved = v.path_progress_m / 1000.0
            assert getattr(v, field_name) == pytest.approx(moved)
            totals[field_name] = moved
        assert all(m > 0 for m in totals.values())


class TestNeedsCharge:
    def test_just_below_threshold(self):
        v = Vehicle(vehicle_id=1, node=1, battery_km=8.74)
        assert needs_charge(v, SLAV_SPEC)

    def test_exactly_at_threshold_is_fine(self):
        v = Vehicle(vehicle_id=1, node=1, battery_km=8.75)
        assert not needs_charge(v, SLAV_SPEC)

    def test_ice_fifteen_percent(self):
        # 15% of 500 km is 75 km
        v = Vehicle(vehicle_id=1, node=1, battery_km=74.9)
        assert needs_charge(v, ICE_SPEC)
        v.battery_km = 75.0
        assert not needs_charge(v, ICE_SPEC)


class TestStartCharge:
    def ready_vehicle(self, battery):
        v = Vehicle(vehicle_id=1, node=2, battery_km=battery)
        v.state = VehicleState.TO_CHARGE
        return v

    def test_plug_from_empty(self):
        v = self.ready_vehicle(0.0)
        start_charge(v, SLAV_SPEC, ChargeKind.PLUG, now_s=0.0)
        assert v.state is VehicleState.CHARGING
        assert v.charge_finish_at_s == 16_200.0

    def test_plug_linear_partial(self):
        v = self.ready_vehicle(17.5)  # half of 35 km
        start_charge(v, SLAV_SPEC, ChargeKind.PLUG, now_s=100.0)
        assert v.charge_finish_at_s == pytest.approx(100.0 + 8_100.0)

    def test_swap_fixed_duration(self):
        v = self.ready_vehicle(8.4)  # 24% of range; level is irrelevant
        start_charge(v, SLAV_SPEC, ChargeKind.SWAP, now_s=50.0)
        assert v.charge_finish_at_s == pytest.approx(161.0)

    def test_not_at_station_wrong_state(self):
        v = Vehicle(vehicle_id=1, node=2, battery_km=5.0)
        with pytest.raises(NotAtStation):
            start_charge(v, SLAV_SPEC, ChargeKind.PLUG, now_s=0.0)

    def test_not_at_station_still_driving(self, net):
        v = moving_vehicle(net, state=VehicleState.TO_CHARGE, battery=5.0)
        with pytest.raises(NotAtStation):
            start_charge(v, SLAV_SPEC, ChargeKind.PLUG, now_s=0.0)
