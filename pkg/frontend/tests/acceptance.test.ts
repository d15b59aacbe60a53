/**
 * End-to-end guarantees of the dashboard, driven against recorded portal
 * payloads: state markers and counts mirror the wire data, a hopeless QoS
 * submission draws the red banner, and restart-all is a single API call
 * whose next poll reports zero failed jobs.
 */
import { afterEach, describe, expect, test } from "vitest";

import { createApp, type App } from "../src/app.js";
import type { JobRow, JobState, StatusData } from "../src/types.js";
import { FakePortal } from "./fakeportal.js";
import { fx, mount, setInput, setSelect, stdPortal, submitForm } from "./helpers.js";

let app: App | null = null;

afterEach(() => {
  app?.poller.stop();
  app = null;
  window.location.hash = "";
});

describe("jobs view", () => {
  test("renders four distinct state markers and payload-exact counts", async () => {
    const portal = stdPortal();
    const root = mount();
    app = createApp(root, { fetchFn: portal.fetch, win: window });
    expect(await app.connect()).toBe(true);

    app.navigate({ view: "jobs" });
    await app.idle();

    // counts under the table equal the most recent status payload, digit for digit
    const counts = fx<{ data: StatusData }>("status_mixed").data.jobs.counts;
    for (const state of ["Ready", "Running", "Completed", "Failed"] as JobState[]) {
      expect(root.querySelector(`[data-count="${state}"]`)!.textContent).toBe(
        String(counts[state]),
      );
    }

    const jobs = fx<{ data: { jobs: JobRow[] } }>("jobs_mixed").data.jobs;
    const rows = Array.from(root.querySelectorAll<HTMLTableRowElement>("tr.job-row"));
    expect(rows.length).toBe(jobs.length);

    // every row carries its state's marker; the four states use four
    // different glyphs and four different style hooks
    rows.forEach((row, i) => {
      expect(row.querySelector(".marker")!.getAttribute("data-marker")).toBe(jobs[i].state);
    });
    const glyphs = new Set(rows.map((r) => r.querySelector(".marker")!.textContent));
    const classes = new Set(rows.map((r) => r.querySelector(".marker")!.className));
    expect(glyphs.size).toBe(4);
    expect(classes.size).toBe(4);
  });
});

describe("qos form", () => {
  test("hopeless deadline and budget submit renders the red Infeasible banner", async () => {
    const portal = new FakePortal()
      .on("POST", /\/api\/login$/, () => fx("login_qos"))
      .on("GET", /\/api\/experiments$/, () => fx("experiments"))
      .on("GET", /\/status$/, () => fx("status_mixed"))
      .on("GET", /\/qos$/, () => fx("qos_get_single_node"))
      .on("PUT", /\/qos$/, () => fx("qos_put_infeasible"));
    const root = mount();
    app = createApp(root, { fetchFn: portal.fetch, win: window });
    await app.connect();
    app.navigate({ view: "qos" });
    await app.idle();

    const req = fx("qos_put_requests").infeasible;
    setInput(root, "#qos-budget", req.budget);
    setInput(root, "#qos-deadline", req.deadline.slice(0, 19));
    setSelect(root, "#qos-optimization", req.optimization);
    submitForm(root, "#qos-form");
    await app.idle();

    const banner = root.querySelector(".banner");
    expect(banner).not.toBeNull();
    expect(banner!.classList.contains("banner-infeasible")).toBe(true);
    expect(banner!.getAttribute("data-verdict")).toBe("Infeasible");
    const feas = fx("qos_put_infeasible").data.feasibility;
    expect(banner!.textContent).toContain(feas.message);

    // exactly one PUT went out, byte-identical to the recorded request
    const puts = portal.calls.filter((c) => c.method === "PUT");
    expect(puts.length).toBe(1);
    expect(puts[0].body).toEqual(req);
  });
});

describe("restart all failed", () => {
  test("one API call; the next poll shows zero failed jobs", async () => {
    let status = fx("status_failed");
    const portal = new FakePortal()
      .on("POST", /\/api\/login$/, () => fx("login"))
      .on("GET", /\/api\/experiments$/, () => fx("experiments"))
      .on("GET", /\/status$/, () => status)
      .on("GET", /\/jobs$/, () => fx("jobs_mixed"))
      .on("POST", /\/restart-failed$/, () => {
        status = fx("status_after_restart");
        return fx("restart_failed");
      });
    const root = mount();
    app = createApp(root, { fetchFn: portal.fetch, win: window });
    await app.connect();
    app.navigate({ view: "jobs" });
    await app.idle();

    const failedBefore = fx("status_failed").data.jobs.counts.Failed;
    expect(failedBefore).toBeGreaterThan(0);
    expect(root.querySelector(`[data-count="Failed"]`)!.textContent).toBe(
      String(failedBefore),
    );

    const button = root.querySelector<HTMLButtonElement>("#restart-all");
    expect(button).not.toBeNull();
    button!.click();
    await app.idle();

    // the click mutated the portal exactly once
    expect(portal.count("POST", /\/restart-failed$/)).toBe(1);
    expect(portal.mutations().length).toBe(1);

    // and the poll that followed reports a clean board
    expect(root.querySelector(`[data-count="Failed"]`)!.textContent).toBe("0");
    expect(root.querySelector("#restart-all")).toBeNull();
  });
});
