import type { Store } from "../store.js";
import { DEFAULT_INTERVAL_S, MAX_INTERVAL_S, MIN_INTERVAL_S } from "../poll.js";
import { Actions, esc } from "./common.js";

/** Connect screen: optional broker override plus the poll interval. */
export function renderLogin(container: HTMLElement, store: Store, act: Actions): void {
  const error = store.lastError
    ? `<p class="error" id="login-error">${esc(store.lastError)}</p>`
    : "";
  container.innerHTML = `
    <section class="panel login">
      <h2>Connect</h2>
      ${error}
      <form id="login-form" novalidate>
        <label>Broker address
          <input id="login-broker" type="text" placeholder="portal default">
        </label>
        <label>Poll interval (s)
          <input id="login-interval" type="number"
                 min="${MIN_INTERVAL_S}" max="${MAX_INTERVAL_S}" value="${DEFAULT_INTERVAL_S}">
        </label>
        <button type="submit">Connect</button>
      </form>
    </section>`;

  container.querySelector<HTMLFormElement>("#login-form")!.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const broker = container.querySelector<HTMLInputElement>("#login-broker")!.value.trim();
    const interval = Number(
      container.querySelector<HTMLInputElement>("#login-interval")!.value,
    );
    void act.connect({ broker: broker || undefined, intervalS: interval });
  });
}
