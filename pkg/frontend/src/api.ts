/** Typed client for the annotation service HTTP API. */

import type { Task } from "./session.js";

export interface SpreadEntry {
  h: number;
  h95: number;
}

export interface AgreementSnapshot {
  n_raters: number;
  complete_frames: number;
  partial_frames: number;
  per_keypoint: Record<string, SpreadEntry>;
}

export interface Progress {
  frames: number;
  interrater_frames: number;
  regular_frames: number;
  annotators: number;
  interrater_submitted: number;
  interrater_expected: number;
  regular_submitted: number;
  per_annotator: Record<string, number>;
}

export interface Violation {
  kind: string;
  keypoint: string | null;
  message: string;
}

export type SubmitResult =
  | { ok: true }
  | { ok: false; violations: Violation[]; error: string };

type FetchLike = typeof fetch;

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async nextTask(annotatorId: string): Promise<Task | null> {
    const response = await this.fetchImpl(
      this.url(`/frames/next?annotator=${encodeURIComponent(annotatorId)}`),
    );
    if (!response.ok) {
      throw new Error(`next-task failed: ${response.status} ${await response.text()}`);
    }
    const body = (await response.json()) as { task: Task | null };
    return body.task;
  }

  imageUrl(task: Task): string {
    return this.url(task.image_url);
  }

  async submit(rows: string): Promise<SubmitResult> {
    const response = await this.fetchImpl(this.url("/annotations"), {
      method: "POST",
      body: rows,
      headers: { "Content-Type": "text/csv" },
    });
    if (response.ok) return { ok: true };
    const body = (await response.json()) as { error: string; violations?: Violation[] };
    return { ok: false, error: body.error, violations: body.violations ?? [] };
  }

  /** null while no inter-rater frame is complete yet. */
  async agreement(): Promise<AgreementSnapshot | null> {
    const response = await this.fetchImpl(this.url("/agreement"));
    if (response.status === 409) return null;
    if (!response.ok) {
      throw new Error(`agreement failed: ${response.status}`);
    }
    return (await response.json()) as AgreementSnapshot;
  }

  async progress(): Promise<Progress> {
    const response = await this.fetchImpl(this.url("/progress"));
    if (!response.ok) throw new Error(`progress failed: ${response.status}`);
    return (await response.json()) as Progress;
  }

  async exportCsv(): Promise<string> {
    const response = await this.fetchImpl(this.url("/export"));
    if (!response.ok) throw new Error(`export failed: ${response.status}`);
    return await response.text();
  }
}
