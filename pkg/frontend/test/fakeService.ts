/** In-memory stand-in for the review service, faithful to its concurrency
 * contract: revision check with 409 on staleness, revision bump on success. */

import type { ReviewTask, SubmitBody, TaskCounts } from '../src/types';

export function makeTask(i: number, overrides: Partial<ReviewTask> = {}): ReviewTask {
  return {
    id: `seg-${String(i).padStart(4, '0')}`,
    source_media: '/data/show.wav',
    start_s: i * 2.0,
    end_s: i * 2.0 + 1.5,
    pseudo_transcript: `pseudo ${i}`,
    final_transcript: null,
    status: 'pending',
    revision: 0,
    mouth_ok: true,
    reviewer: null,
    updated_at: 0,
    asr_failed: false,
    ...overrides,
  };
}

export class FakeService {
  tasks = new Map<string, ReviewTask>();
  submitCalls = 0;

  constructor(tasks: ReviewTask[]) {
    for (const t of tasks) this.tasks.set(t.id, { ...t });
  }

  counts(): TaskCounts {
    const counts: TaskCounts = { pending: 0, accepted: 0, rejected: 0, skipped: 0 };
    for (const t of this.tasks.values()) counts[t.status] += 1;
    return counts;
  }

  /** fetch-compatible entry point for the API client under test. */
  fetchFn = async (input: string | URL | Request, init?: RequestInit): Promise<Response> => {
    const url = new URL(String(input), 'http://fake');
    const method = init?.method ?? 'GET';

    if (url.pathname === '/api/tasks' && method === 'GET') {
      let tasks = [...this.tasks.values()].sort((a, b) => a.id.localeCompare(b.id));
      const status = url.searchParams.get('status');
      if (status) tasks = tasks.filter((t) => t.status === status);
      const limit = url.searchParams.get('limit');
      if (limit) tasks = tasks.slice(0, Number(limit));
      return json(200, { tasks, counts: this.counts() });
    }

    const taskMatch = url.pathname.match(/^\/api\/tasks\/([^/]+)$/);
    if (taskMatch) {
      const task = this.tasks.get(decodeURIComponent(taskMatch[1]!));
      if (!task) return json(404, { detail: 'no such task' });
      if (method === 'GET') return json(200, task);
      this.submitCalls += 1;
      const reviewer = headerOf(init, 'X-Reviewer');
      if (!reviewer) return json(400, { detail: 'X-Reviewer header is required' });
      const body = JSON.parse(String(init?.body)) as SubmitBody;
      if (body.revision !== task.revision) {
        return json(409, { detail: `submitted revision ${body.revision}, current is ${task.revision}` });
      }
      const statusByVerdict = { accept: 'accepted', reject: 'rejected', skip: 'skipped' } as const;
      const next: ReviewTask = {
        ...task,
        status: statusByVerdict[body.verdict],
        final_transcript:
          body.final_transcript ??
          task.final_transcript ??
          (body.verdict === 'accept' ? task.pseudo_transcript : task.final_transcript),
        start_s: body.start_s ?? task.start_s,
        end_s: body.end_s ?? task.end_s,
        revision: task.revision + 1,
        reviewer,
        updated_at: Date.now() / 1000,
      };
      if (next.start_s >= next.end_s) return json(400, { detail: 'bad boundaries' });
      this.tasks.set(task.id, next);
      return json(200, next);
    }

    return json(404, { detail: `unhandled ${method} ${url.pathname}` });
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

function headerOf(init: RequestInit | undefined, name: string): string | undefined {
  const headers = init?.headers;
  if (!headers) return undefined;
  if (headers instanceof Headers) return headers.get(name) ?? undefined;
  if (Array.isArray(headers)) return headers.find(([k]) => k.toLowerCase() === name.toLowerCase())?.[1];
  return (headers as Record<string, string>)[name];
}

/** Poll until a condition holds; fails loudly instead of hanging. */
export async function until(cond: () => boolean, timeoutMs = 3000): Promise<void> {
  const start = Date.now();
  while (!cond()) {
    if (Date.now() - start > timeoutMs) throw new Error('condition never became true');
    await new Promise((r) => setTimeout(r, 5));
  }
}
