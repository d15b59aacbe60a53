/**
 * Wire shapes for the steering portal's JSON API.
 *
 * Every successful response is a PageEnvelope: the payload under `data`
 * plus a `times` list collecting each {utc, local} pair that appears
 * anywhere in the payload. The client renders `local` strings verbatim
 * and never derives a timestamp of its own.
 */

export interface TimePair {
  utc: string;
  local: string;
}

export interface PageEnvelope<T> {
  data: T;
  times: TimePair[];
}

export type ErrorKind = "broker" | "transport" | "session" | "validation";

export interface ErrorDetail {
  kind: ErrorKind;
  code: number;
  message: string;
}

export type JobState = "Ready" | "Running" | "Completed" | "Failed";

export const JOB_STATES: readonly JobState[] = [
  "Ready",
  "Running",
  "Completed",
  "Failed",
];

export type JobCounts = Record<JobState, number>;

export interface LoginData {
  server_time: TimePair;
  token: string;
  tz_offset_min: number;
}

export interface ExperimentRow {
  id: string;
  name: string;
  state: string;
}

export interface ExperimentsData {
  experiments: ExperimentRow[];
}

export interface NodeRow {
  id: string;
  server_name: string;
  hostname: string;
  rate: number;
  speed: number;
  capacity: number;
  status: string;
  assigned_count: number;
  completed_count: number;
  remarks: string;
}

export interface QosData {
  budget: string;
  deadline: TimePair;
  optimization: string;
}

export interface StatusData {
  experiment: ExperimentRow;
  jobs: {
    counts: JobCounts;
    restart_all_available: boolean;
  };
  nodes: NodeRow[];
  progress: {
    budget_spent: string;
    time_remaining_s: number;
  };
  qos: QosData;
}

export interface JobRow {
  id: string;
  name: string;
  state: JobState;
  assigned_node: string;
  attempts: number;
  cost: string;
  execution_time_s: number | null;
  remarks: string;
}

export interface JobsPageData {
  jobs: JobRow[];
  total: number;
  offset: number;
  limit: number;
}

export interface JobEvent {
  at: TimePair;
  kind: string;
  node: string;
  cpu_seconds: number | null;
}

export interface JobDetailData {
  job: JobRow & { est_cpu_s: number };
  events: JobEvent[];
}

export type Verdict = "Feasible" | "Marginal" | "Infeasible";

export interface Feasibility {
  verdict: Verdict;
  message: string;
  time_ok: boolean;
  budget_ok: boolean;
  est_cost: string;
  est_completion: TimePair;
}

export interface QosPutData {
  feasibility: Feasibility;
}

export interface QosPutBody {
  deadline: string;
  budget: string;
  optimization: string;
}

export interface ControlData {
  id: string;
  state: string;
}

export interface RestartFailedData {
  restarted: number;
}

export interface ResourcesData {
  nodes: NodeRow[];
}
