import type { Store } from "../store.js";
import { Actions, countsStrip, esc, ts, wireCountsStrip } from "./common.js";

/** Experiment overview: state, per-state counts, budget burn, QoS, farm strip. */
export function renderStatus(container: HTMLElement, store: Store, act: Actions): void {
  const st = store.status;
  if (!st) {
    container.innerHTML = `<p class="muted">waiting for first status poll</p>`;
    return;
  }
  // mirror the broker's experiment machine: Start from Configured/Stopped,
  // Stop from Running, Shutdown anywhere but Shutdown itself
  const expState = st.experiment.state;
  const canStart = expState === "Configured" || expState === "Stopped";
  const canStop = expState === "Running";
  const canShutdown = expState !== "Shutdown";
  const nodes = st.nodes
    .map(
      (n) => `
      <tr>
        <td>${esc(n.id)}</td>
        <td><span class="node-${n.status.toLowerCase()}">${esc(n.status)}</span></td>
        <td class="num">${esc(n.assigned_count)}/${esc(n.capacity)}</td>
        <td class="num">${esc(n.completed_count)}</td>
      </tr>`,
    )
    .join("");

  container.innerHTML = `
    <section class="panel">
      <h2>${esc(st.experiment.name)}
        <span class="exp-state exp-${st.experiment.state.toLowerCase()}">${esc(st.experiment.state)}</span>
      </h2>
      ${countsStrip(store)}
      <dl class="facts">
        <dt>Budget spent</dt><dd>${esc(st.progress.budget_spent)} of ${esc(st.qos.budget)}</dd>
        <dt>Time remaining</dt><dd>${esc(st.progress.time_remaining_s)} s</dd>
        <dt>Deadline</dt><dd>${ts(st.qos.deadline)}</dd>
        <dt>Optimization</dt><dd>${esc(st.qos.optimization)}</dd>
      </dl>
      <div class="controls">
        <button data-action="Start"${canStart ? "" : " disabled"}>Start</button>
        <button data-action="Stop"${canStop ? "" : " disabled"}>Stop</button>
        <button data-action="Shutdown" class="danger"${canShutdown ? "" : " disabled"}>Shutdown</button>
      </div>
    </section>
    <section class="panel">
      <h3>Farm</h3>
      <table class="grid">
        <thead><tr><th>node</th><th>status</th><th>busy</th><th>done</th></tr></thead>
        <tbody>${nodes}</tbody>
      </table>
    </section>`;

  wireCountsStrip(container, act);
  for (const btn of container.querySelectorAll<HTMLButtonElement>("button[data-action]")) {
    btn.addEventListener("click", () => void act.control(btn.dataset.action ?? ""));
  }
}
