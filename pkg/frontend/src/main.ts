// Browser bootstrap: wires the API, the circular view, boundary dragging and
// the what-if panel together.  All rendering goes through the pure functions
// in render.ts/table.ts; this file only owns DOM events and request flow.

import { ApiError, CorrnetApi } from "./api.js";
import {
  initialViewState,
  moveBoundary,
  snapAngleToCut,
  validateBoundaries,
} from "./model.js";
import { renderErrorBanner, renderNetwork } from "./render.js";
import { renderWhatIfTable } from "./table.js";
import type { NetworkPayload, ViewState } from "./types.js";

const DEBOUNCE_MS = 300;

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const api = new CorrnetApi("");
  const periods = await api.periods();
  let network: NetworkPayload = await api.network(periods[0].label);
  let state: ViewState = initialViewState(
    periods[0].label,
    await api.getClusters(periods[0].label),
  );
  let putTimer: number | undefined;
  let simulating = false;

  const banner = document.createElement("div");
  const view = document.createElement("div");
  const panel = document.createElement("div");
  const controls = document.createElement("div");
  controls.innerHTML =
    `<select id="period">${periods
      .map((p) => `<option value="${p.label}">Period ${p.label}</option>`)
      .join("")}</select>` +
    `<select id="mode">
       <option value="byCluster">Color by cluster</option>
       <option value="byIndustry">Color by industry</option>
       <option value="byReferenceCluster">Color by reference cluster</option>
     </select>` +
    `<button id="run">Run what-if</button>`;
  root.append(banner, controls, view, panel);

  const redraw = () => {
    view.innerHTML = renderNetwork(
      network,
      state.boundaries,
      state.colorMode,
      state.referenceMembers,
    );
    attachDrag();
  };

  const showError = (message: string) => {
    banner.innerHTML = renderErrorBanner(message);
    window.setTimeout(() => (banner.innerHTML = ""), 4000);
  };

  const schedulePut = (previous: number[]) => {
    window.clearTimeout(putTimer);
    putTimer = window.setTimeout(async () => {
      try {
        await api.putClusters(state.period, state.boundaries);
      } catch (error) {
        state.boundaries = previous; // server rejected: revert the handle
        redraw();
        showError(error instanceof ApiError ? error.message : String(error));
      }
    }, DEBOUNCE_MS);
  };

  const attachDrag = () => {
    const svg = view.querySelector("svg");
    if (!svg) return;
    for (const handle of view.querySelectorAll<SVGLineElement>(".boundary-handle")) {
      handle.addEventListener("pointerdown", (down) => {
        down.preventDefault();
        const from = Number(handle.dataset.cut);
        const rect = svg.getBoundingClientRect();
        const onMove = (move: PointerEvent) => {
          const dx = move.clientX - (rect.left + rect.width / 2);
          const dy = rect.top + rect.height / 2 - move.clientY;
          const cut = snapAngleToCut(Math.atan2(dy, dx), network.n);
          const previous = [...state.boundaries];
          try {
            const next = moveBoundary(state.boundaries, from, cut, network.n);
            if (validateBoundaries(next, network.n) === null) {
              state.boundaries = next;
              redraw();
              schedulePut(previous);
            }
          } catch {
            // empty-arc moves are blocked client-side; keep the old handles
          }
        };
        const onUp = () => {
          window.removeEventListener("pointermove", onMove);
          window.removeEventListener("pointerup", onUp);
        };
        window.addEventListener("pointermove", onMove);
        window.addEventListener("pointerup", onUp);
      });
    }
  };

  controls.querySelector("#period")!.addEventListener("change", async (event) => {
    const label = (event.target as HTMLSelectElement).value;
    network = await api.network(label);
    const clusters = await api.getClusters(label);
    state = { ...initialViewState(label, clusters), colorMode: state.colorMode };
    redraw();
  });

  controls.querySelector("#mode")!.addEventListener("change", (event) => {
    state.colorMode = (event.target as HTMLSelectElement).value as ViewState["colorMode"];
    redraw();
  });

  controls.querySelector("#run")!.addEventListener("click", async () => {
    if (simulating) return; // at most one in-flight simulation
    simulating = true;
    try {
      const response = await api.simulate({ estimation: state.period, seed: 1 });
      state.lastSimulation = response;
      panel.innerHTML = renderWhatIfTable(response.table);
    } catch (error) {
      showError(error instanceof ApiError ? error.message : String(error));
    } finally {
      simulating = false;
    }
  });

  redraw();
}

boot().catch((error) => {
  const root = document.getElementById("app");
  if (root) root.innerHTML = renderErrorBanner(String(error));
});
