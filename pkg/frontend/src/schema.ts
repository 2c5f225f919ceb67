/** The 19-keypoint infant skeleton, ordinals 1-19 in annotation order. */

export interface KeypointDef {
  ordinal: number;
  name: string;
}

export const KEYPOINTS: KeypointDef[] = [
  { ordinal: 1, name: "head_top" },
  { ordinal: 2, name: "nose" },
  { ordinal: 3, name: "right_ear" },
  { ordinal: 4, name: "left_ear" },
  { ordinal: 5, name: "upper_neck" },
  { ordinal: 6, name: "right_shoulder" },
  { ordinal: 7, name: "right_elbow" },
  { ordinal: 8, name: "right_wrist" },
  { ordinal: 9, name: "upper_chest" },
  { ordinal: 10, name: "left_shoulder" },
  { ordinal: 11, name: "left_elbow" },
  { ordinal: 12, name: "left_wrist" },
  { ordinal: 13, name: "mid_pelvis" },
  { ordinal: 14, name: "right_pelvis" },
  { ordinal: 15, name: "right_knee" },
  { ordinal: 16, name: "right_ankle" },
  { ordinal: 17, name: "left_pelvis" },
  { ordinal: 18, name: "left_knee" },
  { ordinal: 19, name: "left_ankle" },
];

export const N_KEYPOINTS = KEYPOINTS.length;

export function keypointName(ordinal: number): string {
  const def = KEYPOINTS[ordinal - 1];
  if (!def) throw new Error(`no keypoint with ordinal ${ordinal}`);
  return def.name;
}

/** Anatomically adjacent pairs for the overlay, by ordinal. */
export const SKELETON_EDGES: Array<[number, number]> = [
  [1, 2],
  [2, 3],
  [2, 4],
  [2, 5],
  [5, 9],
  [9, 6],
  [6, 7],
  [7, 8],
  [9, 10],
  [10, 11],
  [11, 12],
  [9, 13],
  [13, 14],
  [14, 15],
  [15, 16],
  [13, 17],
  [17, 18],
  [18, 19],
];

/** Side of the body, used only for marker coloring. */
export function keypointSide(name: string): "left" | "right" | "mid" {
  if (name.startsWith("left_")) return "left";
  if (name.startsWith("right_")) return "right";
  return "mid";
}
