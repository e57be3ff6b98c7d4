"""Live session host: one steerable engine, snapshots out, controls in.

A LiveSession owns a Live-mode engine and a runner thread that paces ticks
against the wall clock (time_scale simulated seconds per wall second, 60 by
default). Every read and every mutation goes through one lock, so a snapshot
is always a clean between-ticks view and a control can never interleave with
a tick.

The session keeps two independent designs the user can switch between: a car
fleet (combustion or electric, fixed sizes) and a lightweight autonomous
fleet (strategy, battery, fleet and speed sliders). Controls addressed to
the inactive design are stored and take effect on the next switch.

Applying any control stamps a `session` record into the engine trace at the
current simulated time and restarts the unserved counter and both indicator
windows. That makes the streamed KPI block reproducible from the trace
alone; kpis_from_trace() is that reproduction and the wire format is
documented in docs/protocol.md.
"""

from __future__ import annotations

import asyncio
import json
import math
import os
import threading
import time
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .charging import DAY_S, ChargeKind, Station
from .data_files import bundled
from .engine import (
    Engine,
    Mode,
    MetricsReport,
    ScenarioConfig,
    TraceRecord,
    report_to_dict,
    state_counts_from_trace,
)
from .errors import ConfigError, InvalidValue, SessionClosed
from .fleet import VehicleState
from .impact import (
    BEV_US_BASELINE_G_PER_KM,
    ICE_BASELINE_G_PER_KM,
    GridMix,
    load_emission_model,
)

WINDOW_S = 43_200.0  # both indicator windows show at most 12 simulated hours

FLEET_SLIDER = (60, 300)
SPEED_SLIDER = (6.0, 20.0)
BATTERY_KM = {"small": 35.0, "large": 65.0}
# car fleets that met the service level in the baseline study
CAR_FLEET = {"ICE": 40, "BEV": 45}

DEFAULT_TIME_SCALE = 60.0  # one simulated minute per wall second
_EPS = 1e-9
_IDLE_POLL_S = 0.02  # paused-loop nap; also bounds control latency while paused


@dataclass
class _FutureDesign:
    strategy: str
    battery_km: float
    fleet_size: int
    speed_kmh: float


@dataclass
class _CurrentDesign:
    electrified: bool = False

    @property
    def scenario(self) -> str:
        return "BEV" if self.electrified else "ICE"


def _station_variants(stations: list[Station]) -> tuple[list[Station], list[Station]]:
    """Plug and swap editions of the same sites, for strategy switching."""
    plug, swap = [], []
    for s in stations:
        plug.append(Station(s.station_id, s.node, s.capacity, ChargeKind.PLUG))
        swap.append(Station(s.station_id, s.node, s.capacity, ChargeKind.SWAP))
    return plug, swap


def _window_start(until_s: float, last_reset_s: float) -> float:
    return max(until_s - WINDOW_S, last_reset_s)


def _wait_average(window: list[list[float]]) -> Optional[float]:
    if not window:
        return None
    return sum(w for _, w in window) / len(window)


class LiveSession:
    """One engine, one lock, one runner thread. See the module docstring."""

    def __init__(self, config: ScenarioConfig, *, time_scale: float = DEFAULT_TIME_SCALE):
        if config.mode is not Mode.LIVE:
            config = replace(config, mode=Mode.LIVE)
        if not (math.isfinite(time_scale) and time_scale > 0):
            raise ConfigError(f"time_scale must be a positive number: {time_scale}")
        self.engine = Engine(config)
        self._plug_stations, self._swap_stations = _station_variants(self.engine.stations)

        if config.scenario in ("ICE", "BEV"):
            self._mode = "current"
            self._current = _CurrentDesign(electrified=config.scenario == "BEV")
            fleet = min(max(config.fleet_size, FLEET_SLIDER[0]), FLEET_SLIDER[1])
            self._future = _FutureDesign("CC", 35.0, fleet, 11.0)
        else:
            self._mode = "future"
            self._current = _CurrentDesign()
            spec = self.engine.spec
            self._future = _FutureDesign(
                config.scenario, spec.range_km, config.fleet_size, spec.speed_kmh
            )

        self._lock = threading.RLock()
        self._paused = False
        self._time_scale = time_scale
        self._closed = False
        self._thread: Optional[threading.Thread] = None

        self._last_reset_s = 0.0
        self._unserved_base = 0
        self._trace_cursor = 0
        self._placed: dict[str, float] = {}
        self._deliveries: list[list[float]] = []
        self._sample_lo = 0
        self._deliv_lo = 0
        self._models: dict[int, object] = {}
        self._ingest_trace()

    # -------------------------------------------------------------- lifecycle

    def start(self) -> "LiveSession":
        with self._lock:
            if self._closed:
                raise SessionClosed("session is closed")
            if self._thread is None:
                self._thread = threading.Thread(
                    target=self._run_loop, name="fleetsim-live", daemon=True
                )
                self._thread.start()
        return self

    def close(self) -> None:
        with self._lock:
            self._closed = True
        if self._thread is not None:
            self._thread.join(timeout=10.0)

    @property
    def closed(self) -> bool:
        return self._closed

    def _run_loop(self) -> None:
        while True:
            with self._lock:
                if self._closed:
                    return
                paused = self._paused
                if not paused:
                    t0 = time.perf_counter()
                    self.engine.step()
                    self._ingest_trace()
            if paused:
                time.sleep(_IDLE_POLL_S)
                continue
            while True:
                with self._lock:
                    if self._closed or self._paused:
                        break
                    budget = self.engine.config.tick_s / self._time_scale
                remaining = t0 + budget - time.perf_counter()
                if remaining <= 0:
                    break
                time.sleep(min(remaining, 0.05))
            # hand the lock to any waiting control before the next tick
            time.sleep(0.0005)

    # ------------------------------------------------------------ bookkeeping

    def _ingest_trace(self) -> None:
        trace = self.engine.trace
        while self._trace_cursor < len(trace):
            t, entity, frm, to = trace[self._trace_cursor]
            self._trace_cursor += 1
            if not entity.startswith("o"):
                continue
            if to == "Waiting" and frm == "":
                self._placed.setdefault(entity, t)
            elif to == "Delivered":
                self._deliveries.append([t, (t - self._placed[entity]) / 60.0])

    # ---------------------------------------------------------------- control

    def apply_control(self, msg: dict) -> dict:
        """Apply one steering message; returns the ack document.

        Raises InvalidValue for anything outside the control tables. Slider
        values are clamped, never rejected. Every applied control restarts
        the unserved counter and the indicator windows.
        """
        if not isinstance(msg, dict):
            raise InvalidValue("a control must be a JSON object")
        kind = msg.get("control")
        value = msg.get("value")
        with self._lock:
            if self._closed:
                raise SessionClosed("session is closed")
            applied, clamped = self._dispatch_control(kind, value)
            self.engine.mark_session_event(str(kind))
            self._last_reset_s = self.engine.clock_s
            self._unserved_base = self.engine.unserved_count
            return {
                "type": "ack",
                "control": kind,
                "applied": applied,
                "clamped": clamped,
                "sim_clock_s": self.engine.clock_s,
                "effective_config": self.effective_config(),
            }

    def _dispatch_control(self, kind, value):
        if kind == "Pause":
            self._paused = True
            return True, False
        if kind == "Resume":
            self._paused = False
            return False, False
        if kind == "SetTimeScale":
            v = self._numeric(kind, value)
            if v <= 0:
                raise InvalidValue(f"time scale must be positive: {value!r}")
            self._time_scale = v
            return v, False
        if kind == "SetSpeed":
            v = self._numeric(kind, value)
            lo, hi = SPEED_SLIDER
            applied = min(max(v, lo), hi)
            self._future.speed_kmh = applied
            if self._mode == "future":
                self.engine.set_speed(applied)
            return applied, applied != v
        if kind == "SetFleetSize":
            v = self._numeric(kind, value)
            lo, hi = FLEET_SLIDER
            applied = int(round(min(max(v, lo), hi)))
            self._future.fleet_size = applied
            if self._mode == "future":
                self.engine.resize_fleet(applied)
            return applied, applied != v
        if kind == "SetBattery":
            if value not in BATTERY_KM:
                raise InvalidValue(f"battery must be one of {sorted(BATTERY_KM)}: {value!r}")
            km = BATTERY_KM[value]
            self._future.battery_km = km
            if self._mode == "future":
                self.engine.set_battery_range(km)
            return km, False
        if kind == "SetStrategy":
            if value not in ("CC", "FC"):
                raise InvalidValue(f"strategy must be CC or FC: {value!r}")
            self._future.strategy = value
            if self._mode == "future" and self.engine.config.scenario != value:
                self._activate_future()
            return value, False
        if kind == "SetElectrified":
            if not isinstance(value, bool):
                raise InvalidValue(f"electrified must be true or false: {value!r}")
            self._current.electrified = value
            if self._mode == "current" and self.engine.config.scenario != self._current.scenario:
                self._activate_current()
            return value, False
        if kind == "SetScenario":
            if value not in ("Current", "Future"):
                raise InvalidValue(f"scenario must be Current or Future: {value!r}")
            target = value.lower()
            if target != self._mode:
                self._mode = target
                if target == "future":
                    self._activate_future()
                else:
                    self._activate_current()
            return value, False
        raise InvalidValue(f"unknown control {kind!r}")

    @staticmethod
    def _numeric(kind: str, value) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidValue(f"{kind} needs a number: {value!r}")
        v = float(value)
        if not math.isfinite(v):
            raise InvalidValue(f"{kind} needs a finite number: {value!r}")
        return v

    def _activate_future(self) -> None:
        d = self._future
        stations = self._swap_stations if d.strategy == "FC" else self._plug_stations
        self.engine.reconfigure(
            d.strategy, d.fleet_size, stations, speed_kmh=d.speed_kmh, range_km=d.battery_km
        )

    def _activate_current(self) -> None:
        scen = self._current.scenario
        self.engine.reconfigure(scen, CAR_FLEET[scen], self._plug_stations)

    # --------------------------------------------------------------- snapshot

    def snapshot(self) -> dict:
        with self._lock:
            if self._closed:
                raise SessionClosed("session is closed")
            self._ingest_trace()  # no-op when the runner thread is ticking
            return self._build_snapshot()

    def report(self) -> MetricsReport:
        with self._lock:
            return self.engine.report()

    def effective_config(self) -> dict:
        eng = self.engine
        return {
            "scenario_mode": self._mode,
            "scenario": eng.config.scenario,
            "fleet_size": self._active_fleet_target(),
            "speed_kmh": eng.spec.speed_kmh,
            "range_km": eng.spec.range_km,
            "tick_s": eng.config.tick_s,
            "seed": eng.config.seed,
            "drop_after_s": eng.config.live_drop_after_s,
            "paused": self._paused,
            "time_scale": self._time_scale,
            "current": {
                "electrified": self._current.electrified,
                "fleet_size": CAR_FLEET[self._current.scenario],
            },
            "future": {
                "strategy": self._future.strategy,
                "battery_km": self._future.battery_km,
                "fleet_size": self._future.fleet_size,
                "speed_kmh": self._future.speed_kmh,
            },
        }

    def _active_fleet_target(self) -> int:
        if self._mode == "current":
            return CAR_FLEET[self._current.scenario]
        return self._future.fleet_size

    def _build_snapshot(self) -> dict:
        eng = self.engine
        clock = eng.clock_s
        start = _window_start(clock, self._last_reset_s)

        samples = eng.state_samples
        while self._sample_lo < len(samples) and samples[self._sample_lo][0] <= start + _EPS:
            self._sample_lo += 1
        state_window = [[t, list(c)] for t, c in samples[self._sample_lo :]]

        while self._deliv_lo < len(self._deliveries) and (
            self._deliveries[self._deliv_lo][0] <= start + _EPS
        ):
            self._deliv_lo += 1
        wait_window = [list(e) for e in self._deliveries[self._deliv_lo :]]

        vehicles = []
        for v in eng.fleet:
            x, y = v.position_xy(eng.net)
            vehicles.append(
                {
                    "id": v.vehicle_id,
                    "x_m": x,
                    "y_m": y,
                    "state": v.state.value,
                    "carrying_order": v.state is VehicleState.TO_DELIVERY,
                }
            )
        waiting = []
        for o in eng.waiting_orders():
            x, y = eng.net.node_xy(o.restaurant_node)
            waiting.append({"id": o.order_id, "x_m": x, "y_m": y})
        stations = []
        for s in eng.stations:
            x, y = eng.net.node_xy(s.node)
            stations.append(
                {
                    "id": s.station_id,
                    "node": s.node,
                    "x_m": x,
                    "y_m": y,
                    "occupancy": len(s.occupants),
                    "queued": len(s.queue),
                    "capacity": s.capacity,
                }
            )

        return {
            "type": "snapshot",
            "sim_clock_s": clock,
            "paused": self._paused,
            "time_scale": self._time_scale,
            "scenario_mode": self._mode,
            "scenario": eng.config.scenario,
            "last_reset_s": self._last_reset_s,
            "vehicles": vehicles,
            "waiting_orders": waiting,
            "stations": stations,
            "kpi": {
                "gco2_per_km": self._gco2(clock),
                "gco2_per_km_ice": ICE_BASELINE_G_PER_KM,
                "gco2_per_km_bev": BEV_US_BASELINE_G_PER_KM,
                "unserved_counter": eng.unserved_count - self._unserved_base,
                "avg_wait_min": _wait_average(wait_window),
                "wait_window": wait_window,
                "state_window": state_window,
            },
            "effective_config": self.effective_config(),
        }

    def _gco2(self, clock: float) -> Optional[float]:
        scen = self.engine.config.scenario
        if scen == "ICE":
            return ICE_BASELINE_G_PER_KM
        if scen == "BEV":
            return BEV_US_BASELINE_G_PER_KM
        total_km = sum(v.total_km() for v in self.engine.fleet)
        total_km += sum(v.total_km() for v in self.engine.retired_vehicles)
        days = clock / DAY_S
        if total_km <= 0 or days <= 0:
            return None
        mult = 2 if scen == "FC" else 1
        model = self._models.get(mult)
        if model is None:
            model = load_emission_model(
                bundled("emission_coefficients.txt"), GridMix.US_MIX, battery_multiplier=mult
            )
            self._models[mult] = model
        amortized = (
            len(self.engine.fleet)
            * (model.per_vehicle_day_g + mult * model.per_battery_day_g(self.engine.spec.range_km))
            * days
        )
        return (amortized + model.per_km_g * total_km) / total_km


# ------------------------------------------------------------- module-level ops


def apply_control(session: LiveSession, msg: dict) -> dict:
    return session.apply_control(msg)


def stream_snapshots(session: LiveSession, hz: float = 10.0) -> Iterator[dict]:
    """Yield the latest snapshot at a wall-clock rate until the session closes."""
    if not (math.isfinite(hz) and hz > 0):
        raise ConfigError(f"hz must be a positive number: {hz}")
    period = 1.0 / hz
    while True:
        yield session.snapshot()
        time.sleep(period)


def kpis_from_trace(
    trace: Iterable[TraceRecord],
    tick_s: float,
    until_s: float,
    last_reset_s: Optional[float] = None,
) -> dict:
    """Rebuild the streamed KPI block from a trace prefix.

    The result matches the `kpi` fields of the snapshot taken at
    `until_s` exactly (gCO2 aside, which needs odometers, not the trace):
    session records mark the control resets, Dropped records after the last
    one form the counter, and the windows replay from order and vehicle
    records.

    A control applied at the very instant a snapshot was built is invisible
    to time truncation; pass the snapshot's own `last_reset_s` to pin that
    boundary. Left as None, the latest session record at or before
    `until_s` is used.
    """
    records = list(trace)
    if last_reset_s is not None:
        last_reset = last_reset_s
    else:
        last_reset = 0.0
        for t, entity, _, _ in records:
            if entity == "session" and t <= until_s + _EPS:
                last_reset = max(last_reset, t)
    start = _window_start(until_s, last_reset)

    state_window = [
        [t, list(c)]
        for t, c in state_counts_from_trace(records, tick_s, until_s)
        if t > start + _EPS
    ]
    placed: dict[str, float] = {}
    wait_window: list[list[float]] = []
    dropped = 0
    for t, entity, frm, to in records:
        if not entity.startswith("o") or t > until_s + _EPS:
            continue
        if to == "Waiting" and frm == "":
            placed.setdefault(entity, t)
        elif to == "Delivered" and t > start + _EPS:
            wait_window.append([t, (t - placed[entity]) / 60.0])
        elif to == "Dropped" and t > last_reset + _EPS:
            dropped += 1
    return {
        "last_reset_s": last_reset,
        "unserved_counter": dropped,
        "avg_wait_min": _wait_average(wait_window),
        "wait_window": wait_window,
        "state_window": state_window,
    }


# ------------------------------------------------------------------ transport


def network_geometry(net) -> dict:
    """Drawable road geometry: node coordinates plus deduplicated segments."""
    nodes = [[nid, *net.node_xy(nid)] for nid in net.node_ids]
    seen: set[tuple[int, int]] = set()
    edges: list[list[int]] = []
    for _, frm, to, _, _ in net.edges:
        key = (min(frm, to), max(frm, to))
        if key not in seen:
            seen.add(key)
            edges.append([frm, to])
    return {"nodes": nodes, "edges": edges}


def create_app(session: LiveSession, static_dir: str | None = None) -> FastAPI:
    """FastAPI app over one session; see docs/protocol.md for the wire format.

    static_dir, when given, is served at / so a built dashboard can reach
    /config and /session on its own origin.
    """
    app = FastAPI(title="fleetsim live session")
    # the session never swaps networks, so the map geometry is fixed
    geometry = network_geometry(session.engine.net)

    @app.get("/health")
    def health():
        return {"status": "ok", "sim_clock_s": session.engine.clock_s}

    @app.get("/config")
    def config():
        with session._lock:
            return {**session.effective_config(), "network": geometry}

    @app.get("/report")
    def report():
        return report_to_dict(session.report())

    @app.websocket("/session")
    async def live(ws: WebSocket, hz: float = 10.0):
        await ws.accept()
        period = 1.0 / min(max(hz, 0.2), 50.0)
        send_lock = asyncio.Lock()

        async def send(doc: dict) -> None:
            async with send_lock:
                await ws.send_text(json.dumps(doc))

        async def pump() -> None:
            try:
                while True:
                    await send(await asyncio.to_thread(session.snapshot))
                    await asyncio.sleep(period)
            except SessionClosed:
                await ws.close()

        pump_task = asyncio.create_task(pump())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except ValueError:
                    await send({"type": "error", "error": "InvalidValue", "detail": "not JSON"})
                    continue
                try:
                    ack = await asyncio.to_thread(session.apply_control, msg)
                except InvalidValue as exc:
                    await send({"type": "error", "error": "InvalidValue", "detail": str(exc)})
                except SessionClosed:
                    break
                else:
                    await send(ack)
        except WebSocketDisconnect:
            pass
        finally:
            pump_task.cancel()

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # mounted last, so the API routes above keep precedence
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def run_server(
    config: ScenarioConfig,
    port: int = 8000,
    time_scale: float = DEFAULT_TIME_SCALE,
    static_dir: str | None = None,
) -> None:
    """Host one live session until interrupted. Bind address: $FLEETSIM_BIND."""
    import uvicorn

    session = LiveSession(config, time_scale=time_scale).start()
    try:
        uvicorn.run(
            create_app(session, static_dir=static_dir),
            host=os.environ.get("FLEETSIM_BIND", "127.0.0.1"),
            port=port,
            log_level="warning",
        )
    finally:
        session.close()
