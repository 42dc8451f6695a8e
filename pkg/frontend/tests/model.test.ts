import { describe, expect, it } from "vitest";

import {
  addBoundary,
  clusterOfPositions,
  cutNearestZero,
  moveBoundary,
  pairCombinations,
  removeBoundary,
  snapAngleToCut,
  validateBoundaries,
} from "../src/model.js";

describe("validateBoundaries", () => {
  it("accepts sorted distinct in-range cuts", () => {
    expect(validateBoundaries([0, 3, 7], 10)).toBeNull();
  });

  it("blocks empty arcs from duplicate cuts", () => {
    expect(validateBoundaries([3, 3], 10)).toMatch(/empty arc/);
  });

  it("blocks out-of-range and unsorted cuts", () => {
    expect(validateBoundaries([10], 10)).toMatch(/outside/);
    expect(validateBoundaries([4, 2], 10)).toMatch(/sorted/);
    expect(validateBoundaries([], 10)).toMatch(/at least one/);
    expect(validateBoundaries([1.5], 10)).toMatch(/integer/);
  });
});

describe("cluster numbering", () => {
  it("numbers counter-clockwise from the cut nearest position 0", () => {
    // mirrors the backend: n=6, cuts {0,3} -> cluster 1 = positions 1..3
    expect(cutNearestZero([0, 3], 6)).toBe(0);
    expect(clusterOfPositions(6, [0, 3])).toEqual([2, 1, 1, 1, 2, 2]);
  });

  it("single boundary yields one cluster", () => {
    expect(clusterOfPositions(5, [2])).toEqual([1, 1, 1, 1, 1]);
  });

  it("prefers the wrap-around cut when it is nearest", () => {
    expect(cutNearestZero([2, 7], 8)).toBe(7);
    expect(clusterOfPositions(8, [2, 7])).toEqual([1, 1, 1, 2, 2, 2, 2, 2]);
  });
});

describe("boundary edits", () => {
  it("splitting an arc raises k by one and renumbers", () => {
    const next = addBoundary([0, 3], 5, 8);
    expect(next).toEqual([0, 3, 5]);
    const labels = clusterOfPositions(8, next);
    expect(new Set(labels).size).toBe(3);
  });

  it("merging two arcs lowers k by one", () => {
    expect(removeBoundary([0, 3, 5], 3)).toEqual([0, 5]);
    expect(() => removeBoundary([4], 4)).toThrow(/last boundary/);
  });

  it("dragging onto another cut is blocked", () => {
    expect(() => addBoundary([0, 3], 3, 8)).toThrow(/empty arc/);
    expect(() => moveBoundary([0, 3], 0, 3, 8)).toThrow(/empty arc/);
    expect(moveBoundary([0, 3], 0, 6, 8)).toEqual([3, 6]);
  });
});

describe("geometry", () => {
  it("snaps angles to the nearest cut", () => {
    const n = 8;
    // cut b sits at angle 2*pi*(b + 0.5)/n
    for (let b = 0; b < n; b++) {
      const angle = (2 * Math.PI * (b + 0.5)) / n;
      expect(snapAngleToCut(angle, n)).toBe(b);
      expect(snapAngleToCut(angle + 0.3 / n, n)).toBe(b);
    }
  });

  it("handles negative angles", () => {
    expect(snapAngleToCut(-Math.PI / 8, 8)).toBe(7);
  });
});

describe("cluster badges", () => {
  it("shows the choose-2 count for a 9-member cluster", () => {
    expect(pairCombinations(9)).toBe(36);
  });
});
