// Payload shapes of the backend JSON API.

export interface PeriodInfo {
  label: string;
  start: string;
  end: string;
}

export interface SplitPayload {
  arc: [number, number];
  weight: number;
}

export interface NetworkPayload {
  period: string;
  n: number;
  candidate_splits: number;
  ordering: number[];
  tickers: string[];
  industry: Record<string, string>;
  splits: SplitPayload[];
  residual: number;
}

export interface ClustersPayload {
  period: string;
  k: number;
  boundaries: number[];
  labels: Record<string, number>;
}

export interface SimulateRequest {
  estimation: string;
  evaluation?: string;
  strategies?: string[];
  sizes?: number[];
  iterations?: number;
  seed?: number;
}

export interface TestReportPayload {
  statistic: number;
  df1: number;
  df2: number;
  p_value: number;
  center?: string | null;
}

export interface TablePayload {
  header: string[];
  rows: string[][];
}

export interface SimulateResponse {
  estimation: string;
  evaluation: string;
  seed: number;
  iterations: number;
  results: Array<{
    strategy: string;
    size: number;
    mean: number;
    std_dev: number;
    iterations: number;
  }>;
  tests: Array<{ size: number; anova: TestReportPayload; levene: TestReportPayload }>;
  table: TablePayload;
}

export interface TrackResponse {
  period: string;
  subset: string[];
  arcs: Array<[number, number]>;
  n_arcs: number;
  score: number;
}

export type ColorMode = "byCluster" | "byIndustry" | "byReferenceCluster";

export interface ViewState {
  period: string;
  boundaries: number[];
  colorMode: ColorMode;
  /** taxa (tickers) highlighted in byReferenceCluster mode */
  referenceMembers: string[];
  lastSimulation: SimulateResponse | null;
}
