import type { Store } from "../store.js";
import { Actions, esc, marker, placeholderRow, ts } from "./common.js";

/** One job: submission facts, attempt history, per-job restart. */
export function renderJobDetail(container: HTMLElement, store: Store, act: Actions): void {
  const detail = store.jobDetail;
  const backLink = `<a href="#/jobs" class="back">&laquo; all jobs</a>`;
  if (!detail) {
    container.innerHTML = `<section class="panel">${backLink}<p class="muted">loading job</p></section>`;
    return;
  }
  const j = detail.job;
  const events = detail.events.length
    ? detail.events
        .map(
          (e) => `
          <tr>
            <td>${ts(e.at)}</td>
            <td>${esc(e.kind)}</td>
            <td>${esc(e.node)}</td>
            <td class="num">${e.cpu_seconds === null ? "" : esc(e.cpu_seconds)}</td>
          </tr>`,
        )
        .join("")
    : placeholderRow(4, "no events");

  container.innerHTML = `
    <section class="panel">
      ${backLink}
      <h2>${marker(j.state)} ${esc(j.id)} <span class="muted">${esc(j.name)}</span></h2>
      <dl class="facts">
        <dt>State</dt><dd>${esc(j.state)}</dd>
        <dt>Node</dt><dd>${esc(j.assigned_node)}</dd>
        <dt>Estimate</dt><dd>${esc(j.est_cpu_s)} cpu s</dd>
        <dt>Execution</dt><dd>${j.execution_time_s === null ? "—" : esc(j.execution_time_s) + " s"}</dd>
        <dt>Cost</dt><dd>${esc(j.cost)}</dd>
        <dt>Attempts</dt><dd>${esc(j.attempts)}</dd>
        <dt>Remarks</dt><dd>${esc(j.remarks)}</dd>
      </dl>
      <button id="restart-job"${j.state === "Ready" ? " disabled" : ""}>Restart job</button>
      <h3>History</h3>
      <table class="grid">
        <thead><tr><th>at</th><th>event</th><th>node</th><th>cpu s</th></tr></thead>
        <tbody>${events}</tbody>
      </table>
    </section>`;

  container
    .querySelector<HTMLButtonElement>("#restart-job")!
    .addEventListener("click", () => void act.restartJob(j.id));
}
