/** Poll interval bounds in seconds. */
export const MIN_INTERVAL_S = 1;
export const MAX_INTERVAL_S = 60;
export const DEFAULT_INTERVAL_S = 5;

export function clampIntervalS(s: number): number {
  if (!Number.isFinite(s)) return DEFAULT_INTERVAL_S;
  return Math.min(MAX_INTERVAL_S, Math.max(MIN_INTERVAL_S, Math.round(s)));
}

/**
 * Chained single-flight timer. The next tick is scheduled only after the
 * previous one settles, so two polls never overlap; pollNow() during an
 * in-flight pass coalesces onto it instead of starting a second one.
 */
export class Poller {
  private readonly tick: () => Promise<void>;
  private intervalMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private active = false;
  private inFlight: Promise<void> | null = null;

  constructor(tick: () => Promise<void>, intervalS: number = DEFAULT_INTERVAL_S) {
    this.tick = tick;
    this.intervalMs = clampIntervalS(intervalS) * 1000;
  }

  get intervalS(): number {
    return this.intervalMs / 1000;
  }

  setIntervalS(s: number): void {
    this.intervalMs = clampIntervalS(s) * 1000;
  }

  get running(): boolean {
    return this.active;
  }

  /** The in-flight pass, if one is underway. Lets callers await quiescence. */
  get pending(): Promise<void> | null {
    return this.inFlight;
  }

  start(): void {
    this.stop();
    this.active = true;
    this.schedule();
  }

  stop(): void {
    this.active = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  /** Run one pass immediately. Overlapping callers share the same pass. */
  pollNow(): Promise<void> {
    if (this.inFlight) return this.inFlight;
    this.inFlight = this.tick().finally(() => {
      this.inFlight = null;
    });
    return this.inFlight;
  }

  private schedule(): void {
    if (!this.active) return;
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.pollNow().finally(() => this.schedule());
    }, this.intervalMs);
  }
}
