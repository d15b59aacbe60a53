import type { Store } from "../store.js";
import { Actions, esc } from "./common.js";

const TABS: Array<{ hash: string; label: string; views: string[] }> = [
  { hash: "#/status", label: "Status", views: ["status"] },
  { hash: "#/jobs", label: "Jobs", views: ["jobs", "jobdetail"] },
  { hash: "#/qos", label: "QoS", views: ["qos"] },
  { hash: "#/resources", label: "Resources", views: ["resources"] },
];

/** Header, tabs, error strip. Returns the container the active view fills. */
export function renderShell(root: HTMLElement, store: Store, act: Actions): HTMLElement {
  const tabs = TABS.map((t) => {
    const active = t.views.includes(store.route.view) ? " active" : "";
    return `<a class="tab${active}" href="${t.hash}">${t.label}</a>`;
  }).join("");

  const experiments =
    store.experiments.length > 1
      ? `<select id="exp-select">${store.experiments
          .map(
            (e) =>
              `<option value="${esc(e.id)}"${e.id === store.expId ? " selected" : ""}>${esc(e.name)}</option>`,
          )
          .join("")}</select>`
      : `<span class="exp-name">${esc(store.experiments[0]?.name ?? "")}</span>`;

  const stale = store.stale
    ? `<span id="stale" class="stale" title="last poll failed; showing previous data">stale</span>`
    : "";

  const clock = store.serverTime
    ? `<span class="ts" id="session-clock">${esc(store.serverTime.local)}</span>`
    : "";

  const error = store.lastError
    ? `<div class="error-strip" id="error-strip">${esc(store.lastError)}</div>`
    : "";

  root.innerHTML = `
    <header class="top">
      <span class="brand">gridsteer</span>
      ${experiments}
      <nav>${tabs}</nav>
      <span class="spacer"></span>
      ${stale}
      <span class="clock-label">session started</span> ${clock}
      <button id="logout">Disconnect</button>
    </header>
    ${error}
    <main id="view"></main>`;

  root
    .querySelector<HTMLButtonElement>("#logout")!
    .addEventListener("click", () => void act.logout());

  const select = root.querySelector<HTMLSelectElement>("#exp-select");
  if (select) {
    select.addEventListener("change", () => act.selectExperiment(select.value));
  }

  return root.querySelector<HTMLElement>("#view")!;
}
