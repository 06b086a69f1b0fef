/** Browser entry point: wires the typed client, session store, and render
 * functions into a single-session planner page. One browser tab maps to one
 * service session. */

import { ApiClient } from "./client";
import { buildActionPanel, commitAction, previewAction } from "./panel";
import {
  renderBreakdown,
  renderHexLayer,
  renderPreviewPanel,
  renderSessionHeader,
  renderZoneMap,
} from "./render";
import { SessionStore } from "./state";
import type { ActionChoice } from "./types";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id} container`);
  }
  return node;
}

export async function startApp(baseUrl: string): Promise<void> {
  const client = new ApiClient(baseUrl);
  const scenario = await client.getScenario();
  const created = await client.createSession();
  const store = new SessionStore(scenario, created.session_id, client);
  await store.refresh();

  const redraw = () => {
    const state = store.state;
    if (!state) {
      return;
    }
    el("header").innerHTML = renderSessionHeader(state, "state").html;
    const panel = buildActionPanel(scenario, state.done);
    el("actions").innerHTML = panel.rows
      .map(
        (row) =>
          `<button data-action="${row.actionId}" ${panel.disabled ? "disabled" : ""}>` +
          `${row.name} (capex ${row.capex.value}, upkeep ${row.maintenance.value})</button>`,
      )
      .join("");
    const lastStep = store.steps[store.steps.length - 1];
    if (lastStep) {
      const source = `step:${lastStep.year}`;
      el("breakdown").innerHTML = renderBreakdown(lastStep, source).html;
      el("map").innerHTML =
        renderZoneMap(scenario, lastStep, "I", source).html +
        renderHexLayer(scenario, lastStep, source).html;
    }
  };

  const zoneSelect = el("zone") as HTMLSelectElement;
  zoneSelect.innerHTML = scenario.zones
    .map((z) => `<option value="${z.id}">${z.name}</option>`)
    .join("");

  const chosenAction = (): ActionChoice => {
    const actionId = Number((el("action") as HTMLSelectElement).value);
    if (Number.isNaN(actionId) || actionId < 0) {
      return null;
    }
    return { zone_id: Number(zoneSelect.value), action_id: actionId };
  };

  el("preview").addEventListener("click", async () => {
    const outcome = await previewAction(store, chosenAction());
    const noop = await store.preview(null);
    if (outcome.result && store.lastPreview) {
      el("preview-panel").innerHTML = renderPreviewPanel(
        outcome.result as never,
        noop,
      ).html;
    }
    el("notice").textContent = outcome.notice ?? "";
  });

  el("commit").addEventListener("click", async () => {
    const outcome = await commitAction(store, chosenAction());
    el("notice").textContent = outcome.notice ?? "";
    redraw();
  });

  redraw();
}
