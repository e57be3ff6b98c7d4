/**
 * Dashboard entry point: fetch the static config, open the session stream,
 * wire the control board, and repaint on every animation frame from the
 * latest-wins buffer.
 */

import { buildIndicatorPanels } from "./indicators.js";
import { paintIndicators, paintScene } from "./paint.js";
import { buildMapScene } from "./scene.js";
import type { ConfigDoc, ControlMessage, EffectiveConfig } from "./types.js";
import {
  batteryControl,
  electrifyControl,
  fleetControl,
  panelFromConfig,
  pauseControl,
  scenarioControl,
  speedControl,
  strategyControl,
} from "./viewModel.js";
import { SessionClient, type SocketLike } from "./wsClient.js";

/** Bridge the DOM WebSocket events onto the minimal socket surface. */
function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onclose: null,
    onmessage: null,
  };
  ws.onopen = () => like.onopen?.();
  ws.onclose = () => like.onclose?.();
  ws.onmessage = (event) => like.onmessage?.({ data: String(event.data) });
  return like;
}

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

async function start(): Promise<void> {
  const config = (await (await fetch("/config")).json()) as ConfigDoc;
  const geometry = config.network;

  const map = byId<HTMLCanvasElement>("map");
  const indicators = byId<HTMLCanvasElement>("indicators");
  const mapCtx = map.getContext("2d")!;
  const indCtx = indicators.getContext("2d")!;

  const status = byId<HTMLSpanElement>("status");
  let effective: EffectiveConfig = config;

  const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/session?hz=10`;
  const client = new SessionClient(wsUrl, browserSocket, {
    onAck: (ack) => {
      effective = ack.effective_config;
      syncPanel();
      status.textContent = ack.clamped ? `${ack.control}: clamped to ${ack.applied}` : "";
    },
    onError: (err) => {
      status.textContent = `${err.error}: ${err.detail}`;
    },
    onSnapshot: (snap) => {
      effective = snap.effective_config;
      syncPanel();
    },
    onConnected: (up) => {
      status.textContent = up ? "" : "reconnecting";
    },
  });

  const scenarioBtn = byId<HTMLButtonElement>("scenario");
  const electrifyBtn = byId<HTMLButtonElement>("electrify");
  const strategyBtn = byId<HTMLButtonElement>("strategy");
  const batteryBtn = byId<HTMLButtonElement>("battery");
  const fleetSlider = byId<HTMLInputElement>("fleet");
  const speedSlider = byId<HTMLInputElement>("speed");
  const fleetOut = byId<HTMLSpanElement>("fleet-value");
  const speedOut = byId<HTMLSpanElement>("speed-value");
  const pauseBtn = byId<HTMLButtonElement>("pause");

  function send(message: ControlMessage): void {
    client.send(message);
  }

  function syncPanel(): void {
    const view = panelFromConfig(effective);
    scenarioBtn.textContent =
      view.mode === "future" ? "switch to car fleet" : "switch to autonomous fleet";
    electrifyBtn.textContent = view.electrified ? "back to gasoline cars" : "electrify the cars";
    strategyBtn.textContent =
      view.strategy === "FC" ? "switch to plug charging" : "switch to battery swap";
    batteryBtn.textContent = view.batteryKm > 35 ? "use small batteries" : "use large batteries";
    electrifyBtn.disabled = !view.enabled.electrify;
    strategyBtn.disabled = !view.enabled.strategy;
    batteryBtn.disabled = !view.enabled.battery;
    fleetSlider.disabled = !view.enabled.fleet;
    speedSlider.disabled = !view.enabled.speed;
    if (document.activeElement !== fleetSlider) fleetSlider.value = String(view.fleetSize);
    if (document.activeElement !== speedSlider) speedSlider.value = String(view.speedKmh);
    fleetOut.textContent = String(view.fleetSize);
    speedOut.textContent = `${view.speedKmh.toFixed(1)} km/h`;
    pauseBtn.textContent = view.paused ? "resume" : "pause";
  }

  scenarioBtn.onclick = () =>
    send(scenarioControl(effective.scenario_mode === "future" ? "Current" : "Future"));
  electrifyBtn.onclick = () => send(electrifyControl(!effective.current.electrified));
  strategyBtn.onclick = () =>
    send(strategyControl(effective.future.strategy === "FC" ? "CC" : "FC"));
  batteryBtn.onclick = () =>
    send(batteryControl(effective.future.battery_km > 35 ? "small" : "large"));
  fleetSlider.onchange = () => send(fleetControl(Number(fleetSlider.value)));
  speedSlider.onchange = () => send(speedControl(Number(speedSlider.value)));
  pauseBtn.onclick = () => send(pauseControl(effective.paused));

  syncPanel();
  client.connect();

  function frame(): void {
    const snapshot = client.latest; // last-good frame when the stream gaps
    paintScene(mapCtx, buildMapScene(geometry, snapshot, map.width, map.height), map.width, map.height);
    paintIndicators(indCtx, buildIndicatorPanels(snapshot), indicators.width, indicators.height);
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

start().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `failed to start: ${err}`;
});
