/**
 * Wire types for the live session protocol, mirroring docs/protocol.md in
 * the simulator repository field for field. Unknown extra fields are
 * tolerated everywhere; missing ones are not.
 */

export type VehicleState = "Idle" | "ToPickup" | "ToDelivery" | "ToCharge" | "Charging";

export type ScenarioMode = "current" | "future";

export interface VehicleDot {
  id: number;
  x_m: number;
  y_m: number;
  state: VehicleState;
  carrying_order: boolean;
}

export interface WaitingOrderDot {
  id: number;
  x_m: number;
  y_m: number;
}

export interface StationDot {
  id: number;
  node: number;
  x_m: number;
  y_m: number;
  occupancy: number;
  queued: number;
  capacity: number;
}

export interface KpiBlock {
  gco2_per_km: number | null;
  gco2_per_km_ice: number;
  gco2_per_km_bev: number;
  unserved_counter: number;
  avg_wait_min: number | null;
  /** [delivered_at_s, wait_minutes] for orders delivered inside the window. */
  wait_window: [number, number][];
  /** [t_s, [idle, to_pickup, to_delivery, to_charge, charging]] per tick. */
  state_window: [number, [number, number, number, number, number]][];
}

export interface CurrentDesign {
  electrified: boolean;
  fleet_size: number;
}

export interface FutureDesign {
  strategy: "CC" | "FC";
  battery_km: number;
  fleet_size: number;
  speed_kmh: number;
}

export interface EffectiveConfig {
  scenario_mode: ScenarioMode;
  scenario: string;
  fleet_size: number;
  speed_kmh: number;
  range_km: number;
  tick_s: number;
  seed: number;
  drop_after_s: number;
  paused: boolean;
  time_scale: number;
  current: CurrentDesign;
  future: FutureDesign;
}

export interface NetworkGeometry {
  /** [node_id, x_m, y_m] rows. */
  nodes: [number, number, number][];
  /** [from_node, to_node] drawable segments, one per physical edge. */
  edges: [number, number][];
}

/** GET /config body: the effective config plus the static map geometry. */
export interface ConfigDoc extends EffectiveConfig {
  network: NetworkGeometry;
}

export interface Snapshot {
  type: "snapshot";
  sim_clock_s: number;
  paused: boolean;
  time_scale: number;
  scenario_mode: ScenarioMode;
  scenario: string;
  last_reset_s: number;
  vehicles: VehicleDot[];
  waiting_orders: WaitingOrderDot[];
  stations: StationDot[];
  kpi: KpiBlock;
  effective_config: EffectiveConfig;
}

export interface Ack {
  type: "ack";
  control: string;
  applied: unknown;
  clamped: boolean;
  sim_clock_s: number;
  effective_config: EffectiveConfig;
}

export interface ErrorMessage {
  type: "error";
  error: string;
  detail: string;
}

export type ServerMessage = Snapshot | Ack | ErrorMessage;

export interface ControlMessage {
  control: string;
  value?: unknown;
}
