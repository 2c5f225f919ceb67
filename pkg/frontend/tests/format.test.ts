import { describe, expect, it } from "vitest";

import type { AgreementSnapshot } from "../src/api.js";
import { dashboardOverall, dashboardRows, formatMm } from "../src/format.js";
import { KEYPOINTS } from "../src/schema.js";

function snapshotWith(h: number, h95: number): AgreementSnapshot {
  const per_keypoint: Record<string, { h: number; h95: number }> = {};
  for (const k of KEYPOINTS) per_keypoint[k.name] = { h, h95 };
  return { n_raters: 10, complete_frames: 100, partial_frames: 0, per_keypoint };
}

describe("millimeter formatting", () => {
  it("a normalized spread of 0.001 displays as 1.00 mm", () => {
    expect(formatMm(0.001)).toBe("1.00");
  });

  it("two decimals, rounded", () => {
    expect(formatMm(0.0049389)).toBe("4.94");
    expect(formatMm(0.010694)).toBe("10.69");
    expect(formatMm(0)).toBe("0.00");
  });
});

describe("dashboard rows", () => {
  it("lists the 19 keypoints in ordinal order with formatted values", () => {
    const rows = dashboardRows(snapshotWith(0.001, 0.0023));
    expect(rows.length).toBe(19);
    expect(rows.map((r) => r.keypoint)).toEqual(KEYPOINTS.map((k) => k.name));
    for (const row of rows) {
      expect(row.hMm).toBe("1.00");
      expect(row.h95Mm).toBe("2.30");
    }
  });

  it("overall row is the unweighted mean", () => {
    const snapshot = snapshotWith(0.001, 0.002);
    snapshot.per_keypoint["nose"] = { h: 0.0029, h95: 0.002 };
    const overall = dashboardOverall(snapshot);
    // mean of 18 * 0.001 + 0.0029 over 19 = 0.0011
    expect(overall.hMm).toBe("1.10");
  });

  it("a missing keypoint in the snapshot is an error, not a blank row", () => {
    const snapshot = snapshotWith(0.001, 0.002);
    delete snapshot.per_keypoint["left_knee"];
    expect(() => dashboardRows(snapshot)).toThrow(/left_knee/);
  });
});
