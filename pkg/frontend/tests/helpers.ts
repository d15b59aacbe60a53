import { readFileSync } from "node:fs";
import { join } from "node:path";
import { FakePortal } from "./fakeportal.js";

/** Load a recorded portal payload by fixture name. */
export function fx<T = any>(name: string): T {
  const path = join(process.cwd(), "tests", "fixtures", `${name}.json`);
  return JSON.parse(readFileSync(path, "utf8")) as T;
}

export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

/**
 * Happy-path portal over the mixed-states recording. Jobs list honours the
 * offset query so the pager can hit the recorded empty page.
 */
export function stdPortal(): FakePortal {
  return new FakePortal()
    .on("POST", /\/api\/login$/, () => fx("login"))
    .on("GET", /\/api\/experiments$/, () => fx("experiments"))
    .on("GET", /\/status$/, () => fx("status_mixed"))
    .on("GET", /\/jobs$/, (_call, url) =>
      url.searchParams.get("offset") === "50" ? fx("jobs_empty_page") : fx("jobs_mixed"),
    )
    .on("GET", /\/jobs\/[^/]+$/, () => fx("job_detail"))
    .on("GET", /\/qos$/, () => fx("qos_get"))
    .on("GET", /\/api\/resources$/, () => fx("resources"));
}

export function setInput(root: HTMLElement, selector: string, value: string): void {
  const input = root.querySelector<HTMLInputElement>(selector);
  if (!input) throw new Error(`no input ${selector}`);
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

export function setSelect(root: HTMLElement, selector: string, value: string): void {
  const select = root.querySelector<HTMLSelectElement>(selector);
  if (!select) throw new Error(`no select ${selector}`);
  select.value = value;
  select.dispatchEvent(new Event("change", { bubbles: true }));
}

export function submitForm(root: HTMLElement, selector: string): void {
  const form = root.querySelector<HTMLFormElement>(selector);
  if (!form) throw new Error(`no form ${selector}`);
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

export function click(root: HTMLElement, selector: string): void {
  const el = root.querySelector<HTMLElement>(selector);
  if (!el) throw new Error(`no element ${selector}`);
  el.click();
}

export function textOf(root: HTMLElement, selector: string): string {
  const el = root.querySelector(selector);
  if (!el) throw new Error(`no element ${selector}`);
  return el.textContent ?? "";
}
