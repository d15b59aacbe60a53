import type { Route } from "./store.js";

/** Map a location hash to a route. Unknown hashes land on the status page. */
export function parseHash(hash: string): Route {
  const parts = hash.replace(/^#\/?/, "").split("/").filter((p) => p.length > 0);
  switch (parts[0]) {
    case "jobs":
      return parts.length > 1
        ? { view: "jobdetail", jobId: decodeURIComponent(parts[1]) }
        : { view: "jobs" };
    case "qos":
      return { view: "qos" };
    case "resources":
      return { view: "resources" };
    default:
      return { view: "status" };
  }
}

export function routeHash(route: Route): string {
  if (route.view === "jobdetail") {
    return "#/jobs/" + encodeURIComponent(route.jobId ?? "");
  }
  if (route.view === "status") return "#/status";
  return "#/" + route.view;
}

/**
 * Hash router. Dispatches exactly once per distinct hash whether the change
 * came from navigate() or from the browser's back button.
 */
export class Router {
  private readonly win: Window;
  private readonly onChange: (route: Route) => void;
  private lastHash = "";

  constructor(win: Window, onChange: (route: Route) => void) {
    this.win = win;
    this.onChange = onChange;
    win.addEventListener("hashchange", () => this.dispatch());
  }

  current(): Route {
    return parseHash(this.win.location.hash);
  }

  navigate(route: Route): void {
    const hash = routeHash(route);
    if (this.win.location.hash !== hash) {
      this.win.location.hash = hash;
    }
    this.dispatch();
  }

  private dispatch(): void {
    const hash = this.win.location.hash || "#/status";
    if (hash === this.lastHash) return;
    this.lastHash = hash;
    this.onChange(parseHash(hash));
  }
}
