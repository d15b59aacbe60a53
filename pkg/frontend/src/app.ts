import { ApiError, describeError, FetchFn, PortalClient, TransportError } from "./api.js";
import { Poller } from "./poll.js";
import { Router } from "./router.js";
import { QosDraft, Route, Store } from "./store.js";
import { validateQosForm, normalizeLocalInput, withSessionOffset } from "./qosform.js";
import type { JobState } from "./types.js";
import { Actions } from "./views/common.js";
import { renderJobDetail } from "./views/jobdetail.js";
import { renderJobs } from "./views/jobs.js";
import { renderLogin } from "./views/login.js";
import { renderQos } from "./views/qos.js";
import { renderResources } from "./views/resources.js";
import { renderShell } from "./views/shell.js";
import { renderStatus } from "./views/status.js";

export interface AppDeps {
  fetchFn?: FetchFn;
  win?: Window;
  intervalS?: number;
  base?: string;
}

/**
 * Wires client, store, poller, router and the DOM together. All data flow
 * is poll-driven: actions fire one API call each, then re-poll; the render
 * pass draws whatever the store holds.
 */
export class App implements Actions {
  readonly store = new Store();
  readonly client: PortalClient;
  readonly poller: Poller;
  readonly router: Router;

  private readonly root: HTMLElement;
  private readonly win: Window;
  private work: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, deps: AppDeps = {}) {
    this.root = root;
    this.win = deps.win ?? window;
    const fetchFn = deps.fetchFn ?? ((input, init) => this.win.fetch(input, init));
    this.client = new PortalClient(fetchFn, deps.base ?? "");
    this.poller = new Poller(() => this.poll(), deps.intervalS);
    this.router = new Router(this.win, (route) => this.onRoute(route));
    this.render();
  }

  /** Resolves once no poll and no action is underway. Test hook. */
  async idle(): Promise<void> {
    for (;;) {
      const work = this.work;
      await work;
      const pending = this.poller.pending;
      if (pending) await pending;
      if (this.work === work && this.poller.pending === null) return;
    }
  }

  connect(opts: { broker?: string; intervalS?: number } = {}): Promise<boolean> {
    const run = async (): Promise<boolean> => {
      const tzOffsetMin = -new Date().getTimezoneOffset();
      try {
        const login = await this.client.login(tzOffsetMin, opts.broker);
        this.store.token = login.data.token;
        this.store.serverTime = login.data.server_time;
        const exps = await this.client.experiments();
        this.store.experiments = exps.data.experiments;
        this.store.expId = exps.data.experiments[0]?.id ?? null;
        this.store.lastError = null;
      } catch (err) {
        this.store.lastError = describeError(err);
        this.render();
        return false;
      }
      if (opts.intervalS !== undefined) this.poller.setIntervalS(opts.intervalS);
      this.store.route = this.router.current();
      await this.poller.pollNow();
      this.poller.start();
      return true;
    };
    const p = run();
    this.track(p.then(() => undefined));
    return p;
  }

  logout(): Promise<void> {
    return this.track(
      (async () => {
        this.poller.stop();
        try {
          await this.client.logout();
        } catch {
          // dropping the session locally is enough; the portal reaps idle tokens
        }
        this.store.resetSession();
        this.store.lastError = null;
        this.render();
      })(),
    );
  }

  navigate(route: Route): void {
    this.router.navigate(route);
  }

  selectExperiment(id: string): void {
    if (id === this.store.expId) return;
    this.store.expId = id;
    this.store.status = null;
    this.store.jobsPage = null;
    this.store.jobDetail = null;
    this.store.qos = null;
    this.store.banner = null;
    this.store.qosDraft = null;
    this.store.jobsQuery = { offset: 0, limit: 50, state: "" };
    this.render();
    this.track(this.refresh());
  }

  setJobsFilter(state: JobState | ""): void {
    this.store.jobsQuery.state = state;
    this.store.jobsQuery.offset = 0;
    this.track(this.refresh());
  }

  setJobsOffset(offset: number): void {
    this.store.jobsQuery.offset = Math.max(0, offset);
    this.track(this.refresh());
  }

  updateQosDraft(draft: QosDraft): void {
    this.store.qosDraft = draft;
  }

  async submitQos(budget: string, deadline: string, optimization: string): Promise<void> {
    const store = this.store;
    store.qosDraft = { budget, deadline, optimization };
    const clock = store.serverTime?.local ?? null;
    const errors = validateQosForm(budget, deadline, clock);
    store.formErrors = errors as Record<string, string>;
    if (errors.budget || errors.deadline) {
      this.render(); // inline errors only, nothing goes on the wire
      return;
    }
    const naive = normalizeLocalInput(deadline)!;
    const body = {
      deadline: withSessionOffset(naive, clock),
      budget: budget.trim(),
      optimization,
    };
    await this.track(
      (async () => {
        try {
          const env = await this.client.putQos(store.expId!, body);
          store.banner = env.data.feasibility;
          store.formErrors = {};
          store.qosDraft = null;
          store.lastError = null;
        } catch (err) {
          this.actionFailed(err); // form text stays in qosDraft
          return;
        }
        await this.refresh();
      })(),
    );
  }

  restartAllFailed(): Promise<void> {
    return this.action(() => this.client.restartFailed(this.store.expId!));
  }

  restartJob(jobId: string): Promise<void> {
    return this.action(() => this.client.restartJob(this.store.expId!, jobId));
  }

  control(action: string): Promise<void> {
    return this.action(() => this.client.control(this.store.expId!, action));
  }

  /** One API call; on success one re-poll. Never more, never fewer. */
  private action(run: () => Promise<unknown>): Promise<void> {
    return this.track(
      (async () => {
        try {
          await run();
        } catch (err) {
          this.actionFailed(err);
          return;
        }
        await this.refresh();
      })(),
    );
  }

  private actionFailed(err: unknown): void {
    if (err instanceof ApiError && err.kind === "session") {
      this.sessionExpired(err.message);
      return;
    }
    this.store.lastError = describeError(err);
    this.render();
  }

  /**
   * Refresh that respects the single-flight rule: if a poll pass is already
   * underway it finishes first, then exactly one fresh pass runs (concurrent
   * refreshers coalesce onto it).
   */
  private async refresh(): Promise<void> {
    const pending = this.poller.pending;
    if (pending) await pending;
    await this.poller.pollNow();
  }

  private onRoute(route: Route): void {
    if (
      route.view === "jobdetail" &&
      this.store.jobDetail &&
      this.store.jobDetail.job.id !== route.jobId
    ) {
      this.store.jobDetail = null; // never show one job under another's id
    }
    this.store.route = route;
    this.render();
    if (this.store.token) this.track(this.refresh());
  }

  /** One poll pass: status always, plus the visible table's endpoint. */
  private async poll(): Promise<void> {
    const store = this.store;
    if (!store.token || !store.expId) return;
    try {
      const status = await this.client.status(store.expId);
      store.status = status.data;
      switch (store.route.view) {
        case "jobs": {
          const q = store.jobsQuery;
          const page = await this.client.jobs(
            store.expId,
            q.offset,
            q.limit,
            q.state || undefined,
          );
          store.jobsPage = page.data;
          break;
        }
        case "jobdetail":
          if (store.route.jobId) {
            store.jobDetail = (await this.client.job(store.expId, store.route.jobId)).data;
          }
          break;
        case "qos":
          store.qos = (await this.client.qos(store.expId)).data;
          break;
        case "resources":
          store.resources = (await this.client.resources()).data;
          break;
        case "status":
          break; // the status fetch above is the visible page
      }
      store.stale = false;
      store.lastError = null;
    } catch (err) {
      if (err instanceof TransportError) {
        store.stale = true; // keep showing the last good view
      } else if (err instanceof ApiError && err.kind === "session") {
        this.sessionExpired(err.message);
        return;
      } else {
        store.lastError = describeError(err);
      }
    }
    this.render();
  }

  private sessionExpired(message: string): void {
    this.poller.stop();
    this.store.resetSession();
    this.store.lastError = `session ended: ${message}`;
    this.render();
  }

  private track(p: Promise<void>): Promise<void> {
    const silenced = p.catch(() => undefined);
    this.work = this.work.then(
      () => silenced,
      () => silenced,
    );
    return p;
  }

  render(): void {
    const doc = this.root.ownerDocument;
    const active = doc.activeElement;
    if (
      active &&
      this.root.contains(active) &&
      (active.tagName === "INPUT" || active.tagName === "SELECT" || active.tagName === "TEXTAREA")
    ) {
      return; // redrawing now would eat the caret mid-edit; next pass catches up
    }

    if (!this.store.token) {
      renderLogin(this.root, this.store, this);
      return;
    }
    const view = renderShell(this.root, this.store, this);
    switch (this.store.route.view) {
      case "status":
        renderStatus(view, this.store, this);
        break;
      case "jobs":
        renderJobs(view, this.store, this);
        break;
      case "jobdetail":
        renderJobDetail(view, this.store, this);
        break;
      case "qos":
        renderQos(view, this.store, this);
        break;
      case "resources":
        renderResources(view, this.store, this);
        break;
    }
  }
}

export function createApp(root: HTMLElement, deps: AppDeps = {}): App {
  return new App(root, deps);
}
