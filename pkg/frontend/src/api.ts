/** Thin client over the review service HTTP API. */

import type { ReviewTask, SubmitBody, TaskListResponse } from './types';

/** Stale-revision submission (HTTP 409); the server state did not change. */
export class ConflictError extends Error {
  constructor(public readonly taskId: string, detail: string) {
    super(detail);
    this.name = 'ConflictError';
  }
}

export class ApiError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = 'ApiError';
  }
}

async function detailOf(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string };
    return body.detail ?? resp.statusText;
  } catch {
    return resp.statusText;
  }
}

export class ReviewApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly reviewer: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async listTasks(status?: string, limit?: number): Promise<TaskListResponse> {
    const params = new URLSearchParams();
    if (status !== undefined) params.set('status', status);
    if (limit !== undefined) params.set('limit', String(limit));
    const qs = params.size > 0 ? `?${params}` : '';
    const resp = await this.fetchFn(this.url(`/api/tasks${qs}`));
    if (!resp.ok) throw new ApiError(resp.status, await detailOf(resp));
    return (await resp.json()) as TaskListResponse;
  }

  async getTask(taskId: string): Promise<ReviewTask> {
    const resp = await this.fetchFn(this.url(`/api/tasks/${encodeURIComponent(taskId)}`));
    if (!resp.ok) throw new ApiError(resp.status, await detailOf(resp));
    return (await resp.json()) as ReviewTask;
  }

  async submitTask(taskId: string, body: SubmitBody): Promise<ReviewTask> {
    const resp = await this.fetchFn(this.url(`/api/tasks/${encodeURIComponent(taskId)}`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json', 'X-Reviewer': this.reviewer },
      body: JSON.stringify(body),
    });
    if (resp.status === 409) throw new ConflictError(taskId, await detailOf(resp));
    if (!resp.ok) throw new ApiError(resp.status, await detailOf(resp));
    return (await resp.json()) as ReviewTask;
  }

  /** Ranged streaming endpoint for the segment clip; handed to the player as-is. */
  mediaUrl(taskId: string): string {
    return this.url(`/media/${encodeURIComponent(taskId)}`);
  }
}
