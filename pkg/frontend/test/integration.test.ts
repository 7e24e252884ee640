/** Round trips against the real review service spawned as a child process.
 * Skipped automatically when the Python package is not installed. */

import { spawn, spawnSync, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ConflictError, ReviewApiClient } from '../src/api';
import { FINE_STEP_S, ReviewController } from '../src/controller';
import { until } from './fakeService';

const PYTHON = process.env.PYTHON ?? 'python3';

function pythonHasPackage(): boolean {
  return spawnSync(PYTHON, ['-c', 'import avforge'], { stdio: 'ignore' }).status === 0;
}

const SETUP_SCRIPT = `
import sys
from avforge.annotate import ReviewTask, TaskStore
from avforge.audio_io import write_wav
import numpy as np

root = sys.argv[1]
sr = 16000
t = np.arange(6 * sr) / sr
media = root + "/show.wav"
write_wav(media, 0.4 * np.sin(2 * np.pi * 300 * t), sr)
store = TaskStore(root + "/store")
store.add_tasks([
    ReviewTask(id=f"live-{i:04d}", source_media=media, start_s=1.0 * i,
               end_s=1.0 * i + 1.4, pseudo_transcript=f"pseudo {i}")
    for i in range(5)
])
store.close()
print("ready")
`;

const available = pythonHasPackage();
const port = 18000 + Math.floor(Math.random() * 10000);
const base = `http://127.0.0.1:${port}`;
let workdir = '';
let server: ChildProcess | null = null;

async function serviceUp(): Promise<boolean> {
  try {
    const resp = await fetch(`${base}/api/tasks`);
    return resp.ok;
  } catch {
    return false;
  }
}

beforeAll(async () => {
  if (!available) return;
  workdir = mkdtempSync(join(tmpdir(), 'review-ui-'));
  const setup = spawnSync(PYTHON, ['-c', SETUP_SCRIPT, workdir], { encoding: 'utf-8' });
  if (setup.status !== 0) throw new Error(`fixture setup failed: ${setup.stderr}`);
  server = spawn(
    PYTHON,
    ['-m', 'avforge.cli', 'annotate', 'serve', '--store', join(workdir, 'store'),
     '--bind', `127.0.0.1:${port}`],
    { stdio: 'ignore' },
  );
  const started = Date.now();
  while (!(await serviceUp())) {
    if (Date.now() - started > 30_000) throw new Error('review service never came up');
    await new Promise((r) => setTimeout(r, 200));
  }
}, 40_000);

afterAll(() => {
  server?.kill('SIGTERM');
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe.skipIf(!available)('against the live review service', () => {
  it('load, edit transcript, nudge boundary, accept: persists on the server', async () => {
    const api = new ReviewApiClient(base, 'integration');
    const controller = new ReviewController(api);
    await controller.refresh();
    expect(controller.phase).toBe('reviewing');
    const taskId = controller.view!.task.id;

    controller.editTranscript('transcripció corregida');
    controller.handleKey({ key: ']' }); // start +0.04
    controller.handleKey({ key: '.' }); // end +0.04
    await controller.submit('accept');

    const stored = await api.getTask(taskId);
    expect(stored.status).toBe('accepted');
    expect(stored.final_transcript).toBe('transcripció corregida');
    expect(stored.start_s).toBeCloseTo(FINE_STEP_S, 6);
    expect(stored.end_s).toBeCloseTo(1.4 + FINE_STEP_S, 6);
    expect(stored.revision).toBe(1);
    expect(stored.reviewer).toBe('integration');
  });

  it('stale revision surfaces the conflict path', async () => {
    const anna = new ReviewApiClient(base, 'anna');
    const berta = new ReviewApiClient(base, 'berta');
    const controller = new ReviewController(anna);
    await controller.refresh();
    const taskId = controller.view!.task.id;
    controller.editTranscript('versió de la anna');

    await berta.submitTask(taskId, { revision: 0, verdict: 'skip' });
    await controller.submit('accept');
    expect(controller.phase).toBe('conflict');
    expect(controller.conflict?.preservedEdits.transcript).toBe('versió de la anna');

    controller.applyMine();
    await controller.submit('accept');
    const stored = await anna.getTask(taskId);
    expect(stored.status).toBe('accepted');
    expect(stored.final_transcript).toBe('versió de la anna');
    expect(stored.revision).toBe(2);
  });

  it('raw client sees 409 as ConflictError', async () => {
    const api = new ReviewApiClient(base, 'probe');
    const listing = await api.listTasks('pending', 1);
    const task = listing.tasks[0]!;
    await api.submitTask(task.id, { revision: task.revision, verdict: 'skip' });
    await expect(
      api.submitTask(task.id, { revision: task.revision, verdict: 'accept' }),
    ).rejects.toBeInstanceOf(ConflictError);
  });

  it('keyboard-only completion of one task', async () => {
    const api = new ReviewApiClient(base, 'keyboard');
    const controller = new ReviewController(api);
    await controller.refresh();
    expect(controller.phase).toBe('reviewing');
    const taskId = controller.view!.task.id;
    controller.attachPlayer({ toggle: () => {} });
    controller.handleKey({ key: ' ' });
    controller.handleKey({ key: '[', shiftKey: true });
    controller.handleKey({ key: 'a' });
    await until(() => controller.phase !== 'reviewing' || controller.view?.task.id !== taskId, 10_000);
    const stored = await api.getTask(taskId);
    expect(stored.status).toBe('accepted');
    expect(stored.reviewer).toBe('keyboard');
  });

  it('streams media with range support', async () => {
    const api = new ReviewApiClient(base, 'probe');
    const listing = await api.listTasks();
    const taskId = listing.tasks[0]!.id;
    const full = await fetch(api.mediaUrl(taskId));
    expect(full.status).toBe(200);
    expect(full.headers.get('content-type')).toBe('audio/wav');
    const partial = await fetch(api.mediaUrl(taskId), { headers: { Range: 'bytes=0-99' } });
    expect(partial.status).toBe(206);
    expect((await partial.arrayBuffer()).byteLength).toBe(100);
  });
});
