/**
 * Canvas painters. Everything interesting was decided by the scene and
 * panel builders; these functions only push pixels.
 */

import type { IndicatorPanels } from "./indicators.js";
import { STATE_SERIES, WINDOW_S } from "./indicators.js";
import type { SceneOp } from "./scene.js";

export function paintScene(ctx: CanvasRenderingContext2D, ops: SceneOp[], w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, w, h);
  for (const op of ops) {
    switch (op.kind) {
      case "segment":
        ctx.strokeStyle = op.color;
        ctx.lineWidth = op.width;
        ctx.beginPath();
        ctx.moveTo(op.x1, op.y1);
        ctx.lineTo(op.x2, op.y2);
        ctx.stroke();
        break;
      case "dot":
        ctx.fillStyle = op.color;
        ctx.beginPath();
        ctx.arc(op.x, op.y, op.r, 0, 2 * Math.PI);
        ctx.fill();
        break;
      case "halo":
        ctx.strokeStyle = op.color;
        ctx.lineWidth = 2.5;
        ctx.beginPath();
        ctx.arc(op.x, op.y, op.r, 0, 2 * Math.PI);
        ctx.stroke();
        break;
      case "square":
        ctx.fillStyle = op.color;
        ctx.fillRect(op.x - op.r, op.y - op.r, 2 * op.r, 2 * op.r);
        break;
      case "hex": {
        ctx.fillStyle = op.color;
        ctx.beginPath();
        for (let i = 0; i < 6; i++) {
          const angle = (Math.PI / 3) * i - Math.PI / 6;
          const px = op.x + op.r * Math.cos(angle);
          const py = op.y + op.r * Math.sin(angle);
          if (i === 0) ctx.moveTo(px, py);
          else ctx.lineTo(px, py);
        }
        ctx.closePath();
        ctx.fill();
        break;
      }
      case "text":
        ctx.fillStyle = op.color;
        ctx.font = `${op.size}px system-ui, sans-serif`;
        ctx.fillText(op.text, op.x, op.y);
        break;
    }
  }
}

const PANEL_INK = "#222222";
const GUIDE_RED = "#d7301f";
const AXIS_GREY = "#999999";

export function paintIndicators(
  ctx: CanvasRenderingContext2D,
  panels: IndicatorPanels,
  w: number,
  h: number,
): void {
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, w, h);
  ctx.fillStyle = PANEL_INK;
  ctx.font = "15px system-ui, sans-serif";
  ctx.fillText(panels.title, 12, 22);

  const pad = 12;
  const quarter = (h - 40) / 3;
  if (panels.placeholder) {
    ctx.fillStyle = AXIS_GREY;
    ctx.font = "13px system-ui, sans-serif";
    ctx.fillText("no data yet", pad, 60);
    return;
  }

  // emissions bars, top third
  if (panels.co2) {
    const top = 36;
    const barH = 16;
    ctx.font = "12px system-ui, sans-serif";
    panels.co2.bars.forEach((bar, i) => {
      const y = top + i * (barH + 10);
      const width =
        bar.value === null ? 0 : ((w - 150 - pad) * bar.value) / panels.co2!.axisMax;
      ctx.fillStyle = bar.color;
      ctx.fillRect(130, y, Math.max(width, 1), barH);
      ctx.fillStyle = PANEL_INK;
      ctx.fillText(bar.label, pad, y + 12);
      const text = bar.value === null ? "n/a" : `${bar.value.toFixed(1)} g/km`;
      ctx.fillText(text, 134 + width, y + 12);
    });
    ctx.fillStyle = AXIS_GREY;
    ctx.fillText("lifecycle g CO2 per km", pad, top - 6);
  }

  // wait chart, middle third
  if (panels.wait) {
    const top = 40 + quarter;
    const chartH = quarter - 36;
    const chartW = w - 2 * pad;
    const maxMin = Math.max(panels.wait.guideMin * 1.25, ...panels.wait.points.map((p) => p[1]));
    const xFor = (t: number) =>
      pad + ((t - panels.wait!.windowStartS) / WINDOW_S) * chartW;
    const yFor = (minutes: number) => top + chartH - (minutes / maxMin) * chartH;
    ctx.fillStyle = AXIS_GREY;
    ctx.fillText("wait minutes, trailing 12 h", pad, top - 6);
    ctx.strokeStyle = GUIDE_RED;
    ctx.setLineDash([5, 4]);
    ctx.beginPath();
    ctx.moveTo(pad, yFor(panels.wait.guideMin));
    ctx.lineTo(pad + chartW, yFor(panels.wait.guideMin));
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#2c7fb8";
    for (const [t, minutes] of panels.wait.points) {
      ctx.fillRect(xFor(t) - 1, yFor(minutes) - 1, 2.5, 2.5);
    }
    if (panels.wait.avgMin !== null) {
      ctx.fillStyle = PANEL_INK;
      ctx.fillText(`avg ${panels.wait.avgMin.toFixed(1)} min`, w - 110, top + 6);
    }
    if (panels.unserved !== null) {
      ctx.fillStyle = panels.unserved > 0 ? GUIDE_RED : PANEL_INK;
      ctx.font = "14px system-ui, sans-serif";
      ctx.fillText(`unserved: ${panels.unserved}`, w - 110, top - 6);
      ctx.font = "12px system-ui, sans-serif";
    }
  }

  // stacked fleet states, bottom third
  if (panels.states) {
    const top = 44 + 2 * quarter;
    const chartH = quarter - 40;
    const chartW = w - 2 * pad;
    const xFor = (t: number) =>
      pad + ((t - panels.states!.windowStartS) / WINDOW_S) * chartW;
    ctx.fillStyle = AXIS_GREY;
    ctx.fillText("vehicles by state, trailing 12 h", pad, top - 6);
    for (const [t, counts] of panels.states.samples) {
      const x = xFor(t);
      let stacked = 0;
      for (let s = 0; s < 5; s++) {
        const value = counts[s as 0 | 1 | 2 | 3 | 4];
        if (value === 0) continue;
        const y0 = top + chartH - ((stacked + value) / panels.states.maxTotal) * chartH;
        const segH = (value / panels.states.maxTotal) * chartH;
        ctx.fillStyle = STATE_SERIES[s as 0 | 1 | 2 | 3 | 4].color;
        ctx.fillRect(x, y0, 1.2, segH);
        stacked += value;
      }
    }
    let lx = pad;
    for (const series of STATE_SERIES) {
      ctx.fillStyle = series.color;
      ctx.fillRect(lx, top + chartH + 8, 9, 9);
      ctx.fillStyle = PANEL_INK;
      ctx.fillText(series.label, lx + 12, top + chartH + 16);
      lx += 12 + 7 * series.label.length + 14;
    }
  }
}
