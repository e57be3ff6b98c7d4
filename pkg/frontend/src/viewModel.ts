/**
 * Pure derivations from server state to render and panel state. Nothing in
 * here simulates; every number shown comes from the server unchanged, and
 * the only arithmetic is chart scaling and slider clamping.
 */

import type {
  ControlMessage,
  EffectiveConfig,
  ScenarioMode,
  StationDot,
  VehicleDot,
} from "./types.js";

export const FLEET_RANGE: [number, number] = [60, 300];
export const SPEED_RANGE: [number, number] = [6, 20];

// ------------------------------------------------------------------ styling

export type VehicleClass = "car" | "slav";

export function vehicleClassFor(scenario: string): VehicleClass {
  return scenario === "ICE" || scenario === "BEV" ? "car" : "slav";
}

export interface VehicleStyle {
  color: string;
  radius: number;
  /** Bright circle overlay while the vehicle carries an order. */
  halo: boolean;
}

const CAR_BLUE = "#2c7fb8";
const SLAV_GREEN = "#2ca25f";
const CHARGE_RED = "#d7301f";
const TO_CHARGE_AMBER = "#fdae61";

export function vehicleStyle(v: VehicleDot, cls: VehicleClass): VehicleStyle {
  let color = cls === "car" ? CAR_BLUE : SLAV_GREEN;
  if (v.state === "Charging") color = CHARGE_RED;
  else if (v.state === "ToCharge") color = TO_CHARGE_AMBER;
  return {
    color,
    radius: cls === "car" ? 4 : 3,
    halo: v.state === "ToDelivery",
  };
}

export const ORDER_RED = "#e31a1c";
export const STATION_PURPLE = "#88419d";

/** Glyph radius in pixels, strictly increasing with hosted vehicles. */
export function stationGlyphRadius(station: StationDot): number {
  return 6 + 2.5 * station.occupancy;
}

// ------------------------------------------------------------------- labels

const SCENARIO_LABELS: Record<string, string> = {
  ICE: "gasoline car fleet",
  BEV: "electric car fleet",
  CC: "autonomous fleet, plug charging",
  NC: "autonomous fleet, night charging",
  SD: "autonomous fleet, strategic dispatch",
  FC: "autonomous fleet, battery swap",
};

export function scenarioLabel(code: string): string {
  return SCENARIO_LABELS[code] ?? code;
}

export function formatClock(simClockS: number): string {
  const day = Math.floor(simClockS / 86_400) + 1;
  const rest = simClockS % 86_400;
  const hh = String(Math.floor(rest / 3_600)).padStart(2, "0");
  const mm = String(Math.floor((rest % 3_600) / 60)).padStart(2, "0");
  return `day ${day} ${hh}:${mm}`;
}

// -------------------------------------------------------------- panel state

export interface ControlAvailability {
  electrify: boolean;
  strategy: boolean;
  battery: boolean;
  fleet: boolean;
  speed: boolean;
}

/** The car side only toggles electrification; design knobs are future-side. */
export function controlAvailability(mode: ScenarioMode): ControlAvailability {
  const future = mode === "future";
  return {
    electrify: !future,
    strategy: future,
    battery: future,
    fleet: future,
    speed: future,
  };
}

export interface PanelView {
  mode: ScenarioMode;
  scenario: string;
  label: string;
  electrified: boolean;
  strategy: "CC" | "FC";
  batteryKm: number;
  fleetSize: number;
  speedKmh: number;
  paused: boolean;
  timeScale: number;
  enabled: ControlAvailability;
}

export function panelFromConfig(cfg: EffectiveConfig): PanelView {
  return {
    mode: cfg.scenario_mode,
    scenario: cfg.scenario,
    label: scenarioLabel(cfg.scenario),
    electrified: cfg.current.electrified,
    strategy: cfg.future.strategy,
    batteryKm: cfg.future.battery_km,
    fleetSize: cfg.future.fleet_size,
    speedKmh: cfg.future.speed_kmh,
    paused: cfg.paused,
    timeScale: cfg.time_scale,
    enabled: controlAvailability(cfg.scenario_mode),
  };
}

// ----------------------------------------------------------------- controls

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

export function clampFleet(value: number): number {
  return Math.round(clamp(value, FLEET_RANGE[0], FLEET_RANGE[1]));
}

export function clampSpeed(value: number): number {
  return clamp(value, SPEED_RANGE[0], SPEED_RANGE[1]);
}

export function fleetControl(value: number): ControlMessage {
  return { control: "SetFleetSize", value: clampFleet(value) };
}

export function speedControl(value: number): ControlMessage {
  return { control: "SetSpeed", value: clampSpeed(value) };
}

export function batteryControl(size: "small" | "large"): ControlMessage {
  return { control: "SetBattery", value: size };
}

export function strategyControl(strategy: "CC" | "FC"): ControlMessage {
  return { control: "SetStrategy", value: strategy };
}

export function scenarioControl(side: "Current" | "Future"): ControlMessage {
  return { control: "SetScenario", value: side };
}

export function electrifyControl(on: boolean): ControlMessage {
  return { control: "SetElectrified", value: on };
}

export function pauseControl(paused: boolean): ControlMessage {
  return { control: paused ? "Resume" : "Pause" };
}

export function timeScaleControl(value: number): ControlMessage {
  return { control: "SetTimeScale", value };
}
