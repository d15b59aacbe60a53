import type { Store } from "../store.js";
import { Actions, esc, placeholderRow } from "./common.js";

/** Farm inventory straight from the resources payload. */
export function renderResources(container: HTMLElement, store: Store, _act: Actions): void {
  const res = store.resources;
  const rows = !res
    ? placeholderRow(9, "waiting for first poll")
    : res.nodes.length === 0
      ? placeholderRow(9, "no nodes")
      : res.nodes
          .map(
            (n) => `
            <tr>
              <td class="mono">${esc(n.id)}</td>
              <td>${esc(n.hostname)}</td>
              <td><span class="node-${n.status.toLowerCase()}">${esc(n.status)}</span></td>
              <td class="num">${esc(n.rate)}</td>
              <td class="num">${esc(n.speed)}</td>
              <td class="num">${esc(n.capacity)}</td>
              <td class="num">${esc(n.assigned_count)}</td>
              <td class="num">${esc(n.completed_count)}</td>
              <td>${esc(n.remarks)}</td>
            </tr>`,
          )
          .join("");

  container.innerHTML = `
    <section class="panel">
      <h2>Resources</h2>
      <table class="grid">
        <thead><tr>
          <th>node</th><th>host</th><th>status</th><th>rate</th><th>speed</th>
          <th>slots</th><th>busy</th><th>done</th><th>remarks</th>
        </tr></thead>
        <tbody>${rows}</tbody>
      </table>
    </section>`;
}
