/**
 * Indicator panel models. Builders turn the latest snapshot's KPI block
 * into chart-ready structures; the painter maps those to pixels. The only
 * computation here is axis scaling, so the server stays the single source
 * of every displayed number.
 */

import type { KpiBlock, Snapshot } from "./types.js";
import { scenarioLabel } from "./viewModel.js";

export const WINDOW_S = 43_200;
export const WAIT_GUIDE_MIN = 40;

export interface Bar {
  label: string;
  value: number | null;
  color: string;
}

export interface Co2Panel {
  bars: Bar[];
  axisMax: number;
}

const FLEET_BAR = "#2ca25f";
const ICE_BAR = "#636363";
const BEV_BAR = "#2c7fb8";

/** The two car baselines are always present as reference bars. */
export function co2Panel(kpi: KpiBlock): Co2Panel {
  const bars: Bar[] = [
    { label: "this fleet", value: kpi.gco2_per_km, color: FLEET_BAR },
    { label: "gasoline cars", value: kpi.gco2_per_km_ice, color: ICE_BAR },
    { label: "electric cars", value: kpi.gco2_per_km_bev, color: BEV_BAR },
  ];
  const known = bars.map((b) => b.value ?? 0);
  return { bars, axisMax: Math.max(...known) * 1.1 };
}

export interface WaitPanel {
  /** [delivered_at_s, wait_minutes], exactly the server's window. */
  points: [number, number][];
  guideMin: number;
  avgMin: number | null;
  windowStartS: number;
  windowEndS: number;
}

export function waitPanel(kpi: KpiBlock, simClockS: number): WaitPanel {
  return {
    points: kpi.wait_window,
    guideMin: WAIT_GUIDE_MIN,
    avgMin: kpi.avg_wait_min,
    windowStartS: Math.max(0, simClockS - WINDOW_S),
    windowEndS: simClockS,
  };
}

export const STATE_SERIES = [
  { label: "idle", color: "#bdbdbd" },
  { label: "to pickup", color: "#fee391" },
  { label: "delivering", color: "#2ca25f" },
  { label: "to charger", color: "#fdae61" },
  { label: "charging", color: "#d7301f" },
] as const;

export interface StatePanel {
  samples: [number, [number, number, number, number, number]][];
  maxTotal: number;
  windowStartS: number;
  windowEndS: number;
}

export function statePanel(kpi: KpiBlock, simClockS: number): StatePanel {
  let maxTotal = 1;
  for (const [, counts] of kpi.state_window) {
    const total = counts[0] + counts[1] + counts[2] + counts[3] + counts[4];
    if (total > maxTotal) maxTotal = total;
  }
  return {
    samples: kpi.state_window,
    maxTotal,
    windowStartS: Math.max(0, simClockS - WINDOW_S),
    windowEndS: simClockS,
  };
}

export interface IndicatorPanels {
  placeholder: boolean;
  title: string;
  co2: Co2Panel | null;
  wait: WaitPanel | null;
  states: StatePanel | null;
  unserved: number | null;
}

export function buildIndicatorPanels(snapshot: Snapshot | null): IndicatorPanels {
  if (snapshot === null) {
    return {
      placeholder: true,
      title: "connecting",
      co2: null,
      wait: null,
      states: null,
      unserved: null,
    };
  }
  return {
    placeholder: false,
    title: scenarioLabel(snapshot.scenario),
    co2: co2Panel(snapshot.kpi),
    wait: waitPanel(snapshot.kpi, snapshot.sim_clock_s),
    states: statePanel(snapshot.kpi, snapshot.sim_clock_s),
    unserved: snapshot.kpi.unserved_counter,
  };
}
