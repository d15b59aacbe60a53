import type { JobState, TimePair } from "../types.js";
import type { QosDraft, Route, Store } from "../store.js";

/** The app surface that views are allowed to call. One method, one API call. */
export interface Actions {
  navigate(route: Route): void;
  selectExperiment(id: string): void;
  setJobsFilter(state: JobState | ""): void;
  setJobsOffset(offset: number): void;
  updateQosDraft(draft: QosDraft): void;
  submitQos(budget: string, deadline: string, optimization: string): Promise<void>;
  restartAllFailed(): Promise<void>;
  restartJob(jobId: string): Promise<void>;
  control(action: string): Promise<void>;
  connect(opts: { broker?: string; intervalS?: number }): Promise<boolean>;
  logout(): Promise<void>;
}

export function esc(value: unknown): string {
  return String(value).replace(/[&<>"']/g, (c) => {
    switch (c) {
      case "&": return "&amp;";
      case "<": return "&lt;";
      case ">": return "&gt;";
      case '"': return "&quot;";
      default: return "&#39;";
    }
  });
}

/** Timestamp cell: always the server-localized string, rendered verbatim. */
export function ts(pair: TimePair): string {
  return `<span class="ts">${esc(pair.local)}</span>`;
}

const MARKERS: Record<JobState, string> = {
  Ready: "◌",     // dotted circle, queued
  Running: "▶",   // play triangle
  Completed: "✔", // check mark
  Failed: "✖",    // heavy cross
};

export function markerGlyph(state: JobState): string {
  return MARKERS[state];
}

export function marker(state: JobState): string {
  return `<span class="marker marker-${state.toLowerCase()}" data-marker="${state}">${MARKERS[state]}</span>`;
}

/**
 * Per-state count tiles plus the restart-all button. The numbers are the
 * most recent status payload's counts, untouched; the button exists only
 * while that payload reports failed jobs.
 */
export function countsStrip(store: Store): string {
  const status = store.status;
  if (!status) return `<div class="counts muted">no status yet</div>`;
  const tiles = (Object.keys(MARKERS) as JobState[])
    .map(
      (state) => `
      <span class="count-tile" data-state="${state}">
        ${marker(state)}
        <span class="count" data-count="${state}">${status.jobs.counts[state]}</span>
        <span class="count-label">${state}</span>
      </span>`,
    )
    .join("");
  const failed = status.jobs.counts.Failed;
  const restart =
    failed > 0
      ? `<button id="restart-all" class="danger">Restart all failed (${failed})</button>`
      : "";
  return `<div class="counts">${tiles}${restart}</div>`;
}

export function wireCountsStrip(container: HTMLElement, act: Actions): void {
  const btn = container.querySelector<HTMLButtonElement>("#restart-all");
  if (btn) btn.addEventListener("click", () => void act.restartAllFailed());
}

export function placeholderRow(colspan: number, text = "no rows"): string {
  return `<tr class="placeholder-row"><td colspan="${colspan}" class="placeholder">${esc(text)}</td></tr>`;
}
