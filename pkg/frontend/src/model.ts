// Client-side mirror of the server's boundary rules plus circle geometry.
//
// Cut b sits between ordering positions b and b+1 (mod n); cluster 1 starts
// right after the cut nearest position 0 and ids grow counter-clockwise,
// exactly as the backend numbers them.

import type { ClustersPayload, ColorMode, NetworkPayload, ViewState } from "./types.js";

export const INDUSTRY_COLORS: Record<string, string> = {
  Energy: "#000000",
  Finance: "#1d4ed8",
  HealthCare: "#dc2626",
  Industrial: "#bdb76b",
  Materials: "#15803d",
};

export const CLUSTER_COLORS = [
  "#000000", // 1 black
  "#1d4ed8", // 2 blue
  "#7e22ce", // 3 purple
  "#dc2626", // 4 red
  "#bdb76b", // 5 khaki
  "#15803d", // 6 green
  "#06b6d4", // 7 aqua
  "#eab308", // 8 yellow
];

export const HIGHLIGHT_COLOR = "#dc2626";
export const MUTED_COLOR = "#d4d4d4";

export function clusterColor(clusterId: number): string {
  return CLUSTER_COLORS[(clusterId - 1) % CLUSTER_COLORS.length];
}

export function industryColor(industry: string): string {
  return INDUSTRY_COLORS[industry] ?? "#737373";
}

/** Null when valid, otherwise a message suitable for the error banner. */
export function validateBoundaries(boundaries: number[], n: number): string | null {
  if (boundaries.length === 0) return "need at least one boundary";
  for (const b of boundaries) {
    if (!Number.isInteger(b)) return `boundary ${b} is not an integer`;
    if (b < 0 || b >= n) return `boundary ${b} outside 0..${n - 1}`;
  }
  for (let i = 1; i < boundaries.length; i++) {
    if (boundaries[i] === boundaries[i - 1]) {
      return `duplicate boundary ${boundaries[i]} would create an empty arc`;
    }
    if (boundaries[i] < boundaries[i - 1]) return "boundaries must be sorted";
  }
  return null;
}

export function cutNearestZero(boundaries: number[], n: number): number {
  let best = boundaries[0];
  let bestDist = Number.POSITIVE_INFINITY;
  for (const b of boundaries) {
    const x = b + 0.5;
    const dist = Math.min(x, n - x);
    if (dist < bestDist - 1e-12 || (Math.abs(dist - bestDist) <= 1e-12 && b < best)) {
      best = b;
      bestDist = dist;
    }
  }
  return best;
}

/** Cluster id of every ordering position, 1..k counter-clockwise. */
export function clusterOfPositions(n: number, boundaries: number[]): number[] {
  const k = boundaries.length;
  const out = new Array<number>(n).fill(0);
  const start = boundaries.indexOf(cutNearestZero(boundaries, n));
  for (let step = 0; step < k; step++) {
    const from = boundaries[(start + step) % k];
    const to = boundaries[(start + step + 1) % k];
    const size = ((to - from + n) % n) || n;
    for (let t = 0; t < size; t++) {
      out[(from + 1 + t) % n] = step + 1;
    }
  }
  return out;
}

/** Adding a cut splits one arc in two (k+1 clusters, renumbered). */
export function addBoundary(boundaries: number[], cut: number, n: number): number[] {
  const next = [...boundaries, cut].sort((a, b) => a - b);
  const error = validateBoundaries(next, n);
  if (error) throw new Error(error);
  return next;
}

/** Removing a cut merges its two arcs (k-1 clusters); k must stay >= 1. */
export function removeBoundary(boundaries: number[], cut: number): number[] {
  if (boundaries.length <= 1) throw new Error("cannot remove the last boundary");
  if (!boundaries.includes(cut)) throw new Error(`no boundary at ${cut}`);
  return boundaries.filter((b) => b !== cut);
}

/** Move one cut to a new snap position, keeping the list valid. */
export function moveBoundary(
  boundaries: number[],
  from: number,
  to: number,
  n: number,
): number[] {
  const rest = boundaries.filter((b) => b !== from);
  const next = [...rest, to].sort((a, b) => a - b);
  const error = validateBoundaries(next, n);
  if (error) throw new Error(error);
  return next;
}

// --- circle geometry -------------------------------------------------------

export function taxonAngle(position: number, n: number): number {
  return (2 * Math.PI * position) / n;
}

export function cutAngle(cut: number, n: number): number {
  return (2 * Math.PI * (cut + 0.5)) / n;
}

/** Snap an angle (radians, any range) to the nearest cut position. */
export function snapAngleToCut(angle: number, n: number): number {
  const tau = 2 * Math.PI;
  const normalized = ((angle % tau) + tau) % tau;
  const cut = Math.round((normalized / tau) * n - 0.5);
  return ((cut % n) + n) % n;
}

export function pointOnCircle(
  angle: number,
  radius: number,
  cx: number,
  cy: number,
): { x: number; y: number } {
  // minus sin: SVG y grows downward, so positive angles run counter-clockwise
  return { x: cx + radius * Math.cos(angle), y: cy - radius * Math.sin(angle) };
}

// --- view state ------------------------------------------------------------

export function initialViewState(period: string, clusters: ClustersPayload): ViewState {
  return {
    period,
    boundaries: [...clusters.boundaries],
    colorMode: "byCluster",
    referenceMembers: [],
    lastSimulation: null,
  };
}

export interface LegendEntry {
  label: string;
  color: string;
}

export function legendEntries(
  mode: ColorMode,
  network: NetworkPayload,
  boundaries: number[],
): LegendEntry[] {
  if (mode === "byIndustry") {
    const names = [...new Set(Object.values(network.industry))].sort();
    return names.map((name) => ({ label: name, color: industryColor(name) }));
  }
  if (mode === "byCluster") {
    return boundaries.map((_, i) => ({
      label: `Cluster ${i + 1}`,
      color: clusterColor(i + 1),
    }));
  }
  return [
    { label: "Reference cluster", color: HIGHLIGHT_COLOR },
    { label: "Other stocks", color: MUTED_COLOR },
  ];
}

export function dotColor(
  mode: ColorMode,
  position: number,
  network: NetworkPayload,
  positionClusters: number[],
  referenceMembers: Set<string>,
): string {
  const ticker = network.tickers[position];
  if (mode === "byIndustry") return industryColor(network.industry[ticker]);
  if (mode === "byReferenceCluster") {
    return referenceMembers.has(ticker) ? HIGHLIGHT_COLOR : MUTED_COLOR;
  }
  return clusterColor(positionClusters[position]);
}

/** Choose-2 count shown on cluster size badges. */
export function pairCombinations(size: number): number {
  return (size * (size - 1)) / 2;
}
