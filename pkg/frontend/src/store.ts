import type {
  ExperimentRow,
  Feasibility,
  JobDetailData,
  JobsPageData,
  JobState,
  QosData,
  ResourcesData,
  StatusData,
  TimePair,
} from "./types.js";

export type ViewName = "status" | "jobs" | "qos" | "resources" | "jobdetail";

export interface Route {
  view: ViewName;
  jobId?: string;
}

export interface JobsQuery {
  offset: number;
  limit: number;
  state: JobState | "";
}

export interface QosDraft {
  budget: string;
  deadline: string;
  optimization: string;
}

/**
 * The view model. Pages render exclusively from this bag: per-state counts
 * come from the most recent status payload, and every timestamp shown is a
 * `local` string lifted from a PageEnvelope. Nothing in here is computed
 * from clocks on the client side.
 */
export class Store {
  token: string | null = null;
  serverTime: TimePair | null = null; // session clock from login, shown in the header
  experiments: ExperimentRow[] = [];
  expId: string | null = null;
  route: Route = { view: "status" };

  status: StatusData | null = null; // most recent status_page payload
  jobsPage: JobsPageData | null = null;
  jobsQuery: JobsQuery = { offset: 0, limit: 50, state: "" };
  jobDetail: JobDetailData | null = null;
  qos: QosData | null = null;
  resources: ResourcesData | null = null;

  stale = false; // last poll hit a transport failure; view kept as-is
  lastError: string | null = null; // inline strip, cleared by the next good poll
  banner: Feasibility | null = null; // verdict from the last accepted QoS submit
  formErrors: Record<string, string> = {};
  qosDraft: QosDraft | null = null; // unsubmitted form text, survives re-renders

  resetSession(): void {
    this.token = null;
    this.serverTime = null;
    this.experiments = [];
    this.expId = null;
    this.status = null;
    this.jobsPage = null;
    this.jobDetail = null;
    this.qos = null;
    this.resources = null;
    this.stale = false;
    this.banner = null;
    this.formErrors = {};
    this.qosDraft = null;
  }
}
