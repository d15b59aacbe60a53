import type { Store } from "../store.js";
import { Actions, esc, ts } from "./common.js";

/** Verdict banner plus the steering form. Form text lives in store.qosDraft. */
export function renderQos(container: HTMLElement, store: Store, act: Actions): void {
  const qos = store.qos ?? store.status?.qos ?? null;

  // draft wins over payload so an unsubmitted edit survives the poll cycle
  const draft = store.qosDraft ?? {
    budget: qos ? qos.budget : "",
    deadline: qos ? qos.deadline.local.slice(0, 19) : "",
    optimization: qos ? qos.optimization : "time",
  };

  const banner = store.banner
    ? `
    <div class="banner banner-${store.banner.verdict.toLowerCase()}" data-verdict="${store.banner.verdict}">
      <strong>${store.banner.verdict}</strong>
      <span>${esc(store.banner.message)}</span>
      <span class="banner-facts">est. cost ${esc(store.banner.est_cost)},
        est. completion ${ts(store.banner.est_completion)}</span>
    </div>`
    : "";

  const current = qos
    ? `
    <dl class="facts">
      <dt>Deadline</dt><dd>${ts(qos.deadline)}</dd>
      <dt>Budget</dt><dd>${esc(qos.budget)}</dd>
      <dt>Optimization</dt><dd>${esc(qos.optimization)}</dd>
    </dl>`
    : `<p class="muted">waiting for first poll</p>`;

  const fieldError = (name: "budget" | "deadline") =>
    store.formErrors[name]
      ? `<span class="field-error" data-field="${name}">${esc(store.formErrors[name])}</span>`
      : "";

  container.innerHTML = `
    <section class="panel">
      <h2>Quality of service</h2>
      ${current}
      ${banner}
      <form id="qos-form" novalidate>
        <label>Budget
          <input id="qos-budget" name="budget" type="text" value="${esc(draft.budget)}">
          ${fieldError("budget")}
        </label>
        <label>Deadline (local)
          <input id="qos-deadline" name="deadline" type="datetime-local" step="1"
                 value="${esc(draft.deadline)}">
          ${fieldError("deadline")}
        </label>
        <label>Optimization
          <select id="qos-optimization" name="optimization">
            <option value="time"${draft.optimization === "time" ? " selected" : ""}>time</option>
            <option value="cost"${draft.optimization === "cost" ? " selected" : ""}>cost</option>
          </select>
        </label>
        <button id="qos-submit" type="submit">Apply</button>
      </form>
    </section>`;

  const budget = container.querySelector<HTMLInputElement>("#qos-budget")!;
  const deadline = container.querySelector<HTMLInputElement>("#qos-deadline")!;
  const optimization = container.querySelector<HTMLSelectElement>("#qos-optimization")!;

  const syncDraft = () =>
    act.updateQosDraft({
      budget: budget.value,
      deadline: deadline.value,
      optimization: optimization.value,
    });
  budget.addEventListener("input", syncDraft);
  deadline.addEventListener("input", syncDraft);
  optimization.addEventListener("change", syncDraft);

  container.querySelector<HTMLFormElement>("#qos-form")!.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void act.submitQos(budget.value, deadline.value, optimization.value);
  });
}
