import { JOB_STATES } from "../types.js";
import type { Store } from "../store.js";
import {
  Actions,
  countsStrip,
  esc,
  marker,
  placeholderRow,
  wireCountsStrip,
} from "./common.js";

const COLS = 8;

/** Job table with state filter, pager, drill-down rows, restart-all. */
export function renderJobs(container: HTMLElement, store: Store, act: Actions): void {
  const page = store.jobsPage;
  const query = store.jobsQuery;

  const options = ['<option value="">All states</option>']
    .concat(
      JOB_STATES.map(
        (s) =>
          `<option value="${s}"${query.state === s ? " selected" : ""}>${s}</option>`,
      ),
    )
    .join("");

  let rows: string;
  let pagerLine = "";
  let nextDisabled = true;
  let prevDisabled = true;
  if (!page) {
    rows = placeholderRow(COLS, "waiting for first poll");
  } else if (page.jobs.length === 0) {
    rows = placeholderRow(COLS);
    pagerLine = `0 of ${page.total}`;
    prevDisabled = page.offset === 0;
  } else {
    rows = page.jobs
      .map(
        (j) => `
        <tr class="job-row" data-job-id="${esc(j.id)}">
          <td>${marker(j.state)}</td>
          <td class="mono">${esc(j.id)}</td>
          <td>${esc(j.name)}</td>
          <td>${esc(j.state)}</td>
          <td>${esc(j.assigned_node)}</td>
          <td class="num">${j.execution_time_s === null ? "" : esc(j.execution_time_s)}</td>
          <td class="num">${esc(j.cost)}</td>
          <td class="num">${esc(j.attempts)}</td>
        </tr>`,
      )
      .join("");
    const last = page.offset + page.jobs.length;
    pagerLine = `${page.offset + 1}–${last} of ${page.total}`;
    prevDisabled = page.offset === 0;
    nextDisabled = page.offset + page.limit >= page.total;
  }

  container.innerHTML = `
    <section class="panel">
      ${countsStrip(store)}
      <div class="toolbar">
        <label>State
          <select id="job-filter">${options}</select>
        </label>
        <span class="pager">
          <button id="pager-prev"${prevDisabled ? " disabled" : ""}>&laquo; prev</button>
          <span id="pager-line">${esc(pagerLine)}</span>
          <button id="pager-next"${nextDisabled ? " disabled" : ""}>next &raquo;</button>
        </span>
      </div>
      <table class="grid">
        <thead><tr>
          <th></th><th>id</th><th>name</th><th>state</th><th>node</th>
          <th>exec s</th><th>cost</th><th>tries</th>
        </tr></thead>
        <tbody>${rows}</tbody>
      </table>
    </section>`;

  wireCountsStrip(container, act);

  container
    .querySelector<HTMLSelectElement>("#job-filter")!
    .addEventListener("change", (ev) => {
      const value = (ev.target as HTMLSelectElement).value;
      act.setJobsFilter(value as (typeof JOB_STATES)[number] | "");
    });

  const prev = container.querySelector<HTMLButtonElement>("#pager-prev")!;
  const next = container.querySelector<HTMLButtonElement>("#pager-next")!;
  prev.addEventListener("click", () => {
    act.setJobsOffset(Math.max(0, query.offset - query.limit));
  });
  next.addEventListener("click", () => {
    act.setJobsOffset(query.offset + query.limit);
  });

  for (const row of container.querySelectorAll<HTMLTableRowElement>("tr.job-row")) {
    row.addEventListener("click", () => {
      act.navigate({ view: "jobdetail", jobId: row.dataset.jobId ?? "" });
    });
  }
}
