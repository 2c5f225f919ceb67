/** Dashboard table model: normalized spreads shown as millimeters. */

import type { AgreementSnapshot } from "./api.js";
import { KEYPOINTS } from "./schema.js";

/** Normalized spread -> millimeters (image diagonal taken as one meter). */
export function mmFromNormalized(value: number): number {
  return value * 1000;
}

export function formatMm(value: number): string {
  return mmFromNormalized(value).toFixed(2);
}

export interface DashboardRow {
  keypoint: string;
  hMm: string;
  h95Mm: string;
}

/** Per-keypoint rows in ordinal order, formatted for display. */
export function dashboardRows(snapshot: AgreementSnapshot): DashboardRow[] {
  return KEYPOINTS.map((k) => {
    const entry = snapshot.per_keypoint[k.name];
    if (!entry) throw new Error(`snapshot missing keypoint ${k.name}`);
    return { keypoint: k.name, hMm: formatMm(entry.h), h95Mm: formatMm(entry.h95) };
  });
}

/** The overall row: unweighted mean over the 19 keypoints. */
export function dashboardOverall(snapshot: AgreementSnapshot): DashboardRow {
  let h = 0;
  let h95 = 0;
  for (const k of KEYPOINTS) {
    const entry = snapshot.per_keypoint[k.name];
    if (!entry) throw new Error(`snapshot missing keypoint ${k.name}`);
    h += entry.h;
    h95 += entry.h95;
  }
  return {
    keypoint: "all body parts",
    hMm: formatMm(h / KEYPOINTS.length),
    h95Mm: formatMm(h95 / KEYPOINTS.length),
  };
}
