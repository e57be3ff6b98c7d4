import type { EffectiveConfig, KpiBlock, Snapshot } from "../src/types.js";

export function config(overrides: Partial<EffectiveConfig> = {}): EffectiveConfig {
  return {
    scenario_mode: "future",
    scenario: "CC",
    fleet_size: 120,
    speed_kmh: 11,
    range_km: 35,
    tick_s: 5,
    seed: 7,
    drop_after_s: 2400,
    paused: false,
    time_scale: 60,
    current: { electrified: false, fleet_size: 40 },
    future: { strategy: "CC", battery_km: 35, fleet_size: 120, speed_kmh: 11 },
    ...overrides,
  };
}

export function kpi(overrides: Partial<KpiBlock> = {}): KpiBlock {
  return {
    gco2_per_km: 44.9,
    gco2_per_km_ice: 161.97,
    gco2_per_km_bev: 107.53,
    unserved_counter: 0,
    avg_wait_min: 12.5,
    wait_window: [[900, 11.2]],
    state_window: [[1205, [4, 1, 2, 0, 1]]],
    ...overrides,
  };
}

export function snapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    type: "snapshot",
    sim_clock_s: 3600,
    paused: false,
    time_scale: 60,
    scenario_mode: "future",
    scenario: "CC",
    last_reset_s: 0,
    vehicles: [],
    waiting_orders: [],
    stations: [],
    kpi: kpi(),
    effective_config: config(),
    ...overrides,
  };
}
