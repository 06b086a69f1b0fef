/** HTML/SVG rendering. Every numeric figure placed in the markup is a
 * TracedValue collected in the returned `displayed` list, so the fidelity
 * tests can verify each one against the response it came from. */

import { polylinePoints, sharedBounds } from "./charts";
import type { CompareView } from "./compare";
import { display, trace, type TracedValue } from "./traced";
import {
  TERMS,
  type ScenarioDoc,
  type SessionState,
  type StepResult,
  type WhatIfResult,
} from "./types";

export interface Rendered {
  html: string;
  displayed: TracedValue[];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function put(out: TracedValue[], t: TracedValue, digits = 2): string {
  out.push(t);
  return display(t, digits);
}

/** Zone polygons colored by one impact term of the latest step. The color
 * ramp is presentation; the numbers shown in the tooltip text are traced. */
export function renderZoneMap(
  scenario: ScenarioDoc,
  step: StepResult | null,
  metric: (typeof TERMS)[number],
  stepSource: string,
): Rendered {
  const displayed: TracedValue[] = [];
  const values = step
    ? scenario.zones.map((z) =>
        trace(step, stepSource, ["per_zone", String(z.id), metric]),
      )
    : null;
  const magnitudes = values ? values.map((v) => Math.abs(v.value)) : [0];
  const maxMag = Math.max(...magnitudes, 1e-12);
  const polys = scenario.zones
    .map((zone, i) => {
      const pts = zone.polygon.map(([x, y]) => `${x},${y}`).join(" ");
      const opacity = values ? 0.15 + 0.75 * (magnitudes[i]! / maxMag) : 0.15;
      const label = values
        ? `${zone.name}: ${metric} = ${put(displayed, values[i]!)}`
        : zone.name;
      return (
        `<polygon points="${pts}" fill="#2c7fb8" fill-opacity="${opacity.toFixed(3)}" ` +
        `stroke="#253494"><title>${esc(label)}</title></polygon>`
      );
    })
    .join("");
  return {
    html: `<svg class="zone-map" viewBox="0 0 1600 1600">${polys}</svg>`,
    displayed,
  };
}

/** Hex QoL layer from a step response's snapshot. */
export function renderHexLayer(
  scenario: ScenarioDoc,
  step: StepResult,
  stepSource: string,
): Rendered {
  const displayed: TracedValue[] = [];
  const centers = new Map(
    scenario.hex.cells.map((c) => [`${c.q},${c.r}`, c.center]),
  );
  const r = scenario.hex.resolution_m / 2;
  const cells = step.hex_qol
    .map((cell, i) => {
      const center = centers.get(`${cell.q},${cell.r}`);
      if (!center) {
        return "";
      }
      const qol = trace(step, stepSource, ["hex_qol", i, "qol"]);
      const text = put(displayed, qol, 3);
      return (
        `<circle cx="${center[0]}" cy="${center[1]}" r="${r}" ` +
        `fill="#31a354" fill-opacity="${(0.1 + 0.8 * qol.value).toFixed(3)}">` +
        `<title>QoL ${text}</title></circle>`
      );
    })
    .join("");
  return {
    html: `<svg class="hex-layer" viewBox="0 0 1600 1600">${cells}</svg>`,
    displayed,
  };
}

/** Per-zone breakdown table of one step or what-if response. */
export function renderBreakdown(
  result: StepResult | WhatIfResult,
  source: string,
): Rendered {
  const displayed: TracedValue[] = [];
  const zones = Object.keys(result.per_zone);
  const head = `<tr><th>zone</th>${TERMS.map((t) => `<th>${t}</th>`).join("")}</tr>`;
  const rows = zones
    .map((zone) => {
      const cells = TERMS.map((term) => {
        const t = trace(result, source, ["per_zone", zone, term]);
        return `<td>${put(displayed, t, term === "Q" ? 4 : 2)}</td>`;
      }).join("");
      return `<tr><th>${esc(zone)}</th>${cells}</tr>`;
    })
    .join("");
  const reward = trace(result, source, ["reward"]);
  const intensity = trace(result, source, ["intensity_mm"]);
  return {
    html:
      `<table class="breakdown">${head}${rows}</table>` +
      `<p>event ${put(displayed, intensity, 1)} mm, ` +
      `reward ${put(displayed, reward)}</p>`,
    displayed,
  };
}

/** Session header: current year and cumulative reward from /state. */
export function renderSessionHeader(
  state: SessionState,
  source: string,
): Rendered {
  const displayed: TracedValue[] = [];
  const reward = trace(state, source, ["cumulative_reward"]);
  const endNote = state.done
    ? `<p class="done">end of horizon reached after ${state.steps} steps</p>`
    : "";
  return {
    html:
      `<h2>year ${state.year}</h2>` +
      `<p>cumulative reward ${put(displayed, reward)}</p>` +
      endNote,
    displayed,
  };
}

/** What-if preview next to a no-op preview of the same year: the "delta per
 * term" view shows both service-reported columns rather than client-side
 * arithmetic. */
export function renderPreviewPanel(
  actionPreview: WhatIfResult,
  noopPreview: WhatIfResult,
): Rendered {
  const displayed: TracedValue[] = [];
  const zones = Object.keys(actionPreview.per_zone);
  const rows = zones
    .flatMap((zone) =>
      TERMS.map((term) => {
        const withAction = trace(actionPreview, "whatif:action", [
          "per_zone",
          zone,
          term,
        ]);
        const withoutAction = trace(noopPreview, "whatif:noop", [
          "per_zone",
          zone,
          term,
        ]);
        return (
          `<tr><th>${esc(zone)} ${term}</th>` +
          `<td>${put(displayed, withAction, 4)}</td>` +
          `<td>${put(displayed, withoutAction, 4)}</td></tr>`
        );
      }),
    )
    .join("");
  return {
    html:
      `<table class="preview"><tr><th></th><th>with action</th>` +
      `<th>no action</th></tr>${rows}</table>`,
    displayed,
  };
}

/** Compare view: aligned reward charts plus the cumulative totals table.
 * Totals are exact sums over run-log fields (cross-checked by tests). */
export function renderCompare(view: CompareView): Rendered {
  const displayed: TracedValue[] = [];
  const rewardsA = view.a.points.map((p) => put(displayed, p.reward));
  const rewardsB = view.b.points.map((p) => put(displayed, p.reward));
  const valsA = view.a.points.map((p) => p.reward.value);
  const valsB = view.b.points.map((p) => p.reward.value);
  const bounds = sharedBounds(valsA, valsB);
  const chart =
    `<svg class="reward-chart" viewBox="0 0 640 200">` +
    `<polyline fill="none" stroke="#d95f0e" points="${polylinePoints(valsA, undefined, bounds)}"/>` +
    `<polyline fill="none" stroke="#2c7fb8" points="${polylinePoints(valsB, undefined, bounds)}"/>` +
    `</svg>`;
  const totalRows = [...TERMS, "reward" as const]
    .map((term) => {
      const pair = view.totals[term];
      return (
        `<tr><th>${term}</th><td>${pair.a}</td><td>${pair.b}</td></tr>`
      );
    })
    .join("");
  const warning = view.warning
    ? `<div class="warning">${esc(view.warning)}</div>`
    : "";
  return {
    html:
      warning +
      chart +
      `<table class="totals"><tr><th></th><th>${esc(view.a.runId)}</th>` +
      `<th>${esc(view.b.runId)}</th></tr>${totalRows}</table>` +
      `<!-- per-year values: ${rewardsA.length}+${rewardsB.length} points -->`,
    displayed,
  };
}
