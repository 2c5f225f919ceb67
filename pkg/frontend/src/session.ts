/** Annotation session state: one task, up to 19 placed points.
 *
 * Points live in image coordinates, never screen coordinates. The cursor
 * walks the keypoints in ordinal order (1 -> 19); placing a point
 * advances it to the next unplaced keypoint, re-clicking a keypoint via
 * selectKeypoint replaces its point. Submission is possible only when
 * all 19 points are placed.
 */

import { KEYPOINTS, N_KEYPOINTS, keypointName } from "./schema.js";
import type { Vec2 } from "./transform.js";

export interface Task {
  frame_id: string;
  annotator_id: string;
  status: string;
  interrater: boolean;
  width: number;
  height: number;
  image_url: string;
}

export interface SessionState {
  task: Task | null;
  /** placed points by ordinal, image coordinates */
  placed: ReadonlyMap<number, Vec2>;
  /** ordinal of the keypoint the next click will place */
  cursor: number;
  /** ordinals in the order they were placed, for undo */
  history: readonly number[];
}

export function startSession(task: Task | null): SessionState {
  return { task, placed: new Map(), cursor: 1, history: [] };
}

export function isComplete(state: SessionState): boolean {
  return state.placed.size === N_KEYPOINTS;
}

function nextUnplaced(placed: ReadonlyMap<number, Vec2>, from: number): number {
  for (let step = 0; step < N_KEYPOINTS; step += 1) {
    const ordinal = ((from - 1 + step) % N_KEYPOINTS) + 1;
    if (!placed.has(ordinal)) return ordinal;
  }
  return from; // everything placed; cursor parks where it was
}

/** Place (or replace) the active keypoint at an image position. */
export function placePoint(state: SessionState, imagePoint: Vec2): SessionState {
  if (!state.task) return state;
  const placed = new Map(state.placed);
  const replacing = placed.has(state.cursor);
  placed.set(state.cursor, { x: imagePoint.x, y: imagePoint.y });
  const history = replacing
    ? [...state.history.filter((o) => o !== state.cursor), state.cursor]
    : [...state.history, state.cursor];
  return {
    ...state,
    placed,
    history,
    cursor: nextUnplaced(placed, state.cursor),
  };
}

export function selectKeypoint(state: SessionState, ordinal: number): SessionState {
  if (ordinal < 1 || ordinal > N_KEYPOINTS) return state;
  return { ...state, cursor: ordinal };
}

export function selectNext(state: SessionState): SessionState {
  return selectKeypoint(state, (state.cursor % N_KEYPOINTS) + 1);
}

export function selectPrevious(state: SessionState): SessionState {
  return selectKeypoint(state, ((state.cursor + N_KEYPOINTS - 2) % N_KEYPOINTS) + 1);
}

/** Remove the most recently placed point and move the cursor back to it. */
export function undoLast(state: SessionState): SessionState {
  const last = state.history[state.history.length - 1];
  if (last === undefined) return state;
  const placed = new Map(state.placed);
  placed.delete(last);
  return {
    ...state,
    placed,
    history: state.history.slice(0, -1),
    cursor: last,
  };
}

/** Re-open keypoints a rejected submission named; the cursor moves to the first. */
export function reopenKeypoints(state: SessionState, names: string[]): SessionState {
  const ordinals = KEYPOINTS.filter((k) => names.includes(k.name)).map((k) => k.ordinal);
  if (ordinals.length === 0) return state;
  const placed = new Map(state.placed);
  for (const ordinal of ordinals) placed.delete(ordinal);
  return {
    ...state,
    placed,
    history: state.history.filter((o) => !ordinals.includes(o)),
    cursor: Math.min(...ordinals),
  };
}

/** Serialized pose in the annotation-table row format the service accepts. */
export function toAnnotationRows(state: SessionState): string {
  if (!state.task) throw new Error("no active task");
  if (!isComplete(state)) {
    throw new Error(`pose incomplete: ${state.placed.size}/${N_KEYPOINTS} points`);
  }
  const lines = ["frame_id,annotator_id,keypoint,x,y"];
  for (let ordinal = 1; ordinal <= N_KEYPOINTS; ordinal += 1) {
    const p = state.placed.get(ordinal)!;
    lines.push(
      `${state.task.frame_id},${state.task.annotator_id},${keypointName(ordinal)},${p.x},${p.y}`,
    );
  }
  return lines.join("\n") + "\n";
}
