import { beforeEach, describe, expect, it } from 'vitest';

import { ReviewApiClient } from '../src/api';
import { COARSE_STEP_S, FINE_STEP_S, ReviewController } from '../src/controller';
import { FakeService, makeTask, until } from './fakeService';

function setup(n = 5) {
  const service = new FakeService(Array.from({ length: n }, (_, i) => makeTask(i)));
  const api = new ReviewApiClient('', 'anna', service.fetchFn);
  const controller = new ReviewController(api);
  return { service, controller };
}

describe('task queue view', () => {
  it('shows the all-done state on an empty queue', async () => {
    const { controller } = setup(0);
    await controller.refresh();
    expect(controller.phase).toBe('all-done');
    expect(controller.progress).toEqual({ completed: 0, total: 0 });
  });

  it('starts at 0/5 reviewed with five pending tasks', async () => {
    const { controller } = setup(5);
    await controller.refresh();
    expect(controller.phase).toBe('reviewing');
    expect(controller.progress).toEqual({ completed: 0, total: 5 });
    expect(controller.view?.task.id).toBe('seg-0000');
  });

  it('reaches 2/5 after completing two tasks', async () => {
    const { controller } = setup(5);
    await controller.refresh();
    await controller.submit('accept');
    await controller.submit('reject');
    expect(controller.progress).toEqual({ completed: 2, total: 5 });
    expect(controller.view?.task.id).toBe('seg-0002');
  });

  it('surfaces a retriable error when the service is down', async () => {
    const api = new ReviewApiClient('', 'anna', async () => {
      throw new TypeError('fetch failed');
    });
    const controller = new ReviewController(api);
    await controller.refresh();
    expect(controller.phase).toBe('error');
    expect(controller.lastError).toContain('fetch failed');
  });
});

describe('editing and submitting', () => {
  it('accept without edits adopts the pseudo transcript', async () => {
    const { service, controller } = setup(1);
    await controller.refresh();
    await controller.submit('accept');
    const stored = service.tasks.get('seg-0000')!;
    expect(stored.status).toBe('accepted');
    expect(stored.final_transcript).toBe('pseudo 0');
    expect(stored.revision).toBe(1);
    expect(stored.reviewer).toBe('anna');
  });

  it('posts transcript and boundary edits with the held revision', async () => {
    const { service, controller } = setup(1);
    await controller.refresh();
    controller.editTranscript('text verificat');
    controller.nudge('start', -1); // 0.0 stays clamped at 0
    controller.nudge('end', 1, true); // +0.5 coarse
    controller.nudge('end', -1); // -0.04 fine
    expect(controller.view?.dirty).toBe(true);
    await controller.submit('accept');
    const stored = service.tasks.get('seg-0000')!;
    expect(stored.final_transcript).toBe('text verificat');
    expect(stored.start_s).toBe(0);
    expect(stored.end_s).toBeCloseTo(1.5 + COARSE_STEP_S - FINE_STEP_S, 9);
  });

  it('keeps start below end when nudging', async () => {
    const { controller } = setup(1);
    await controller.refresh();
    for (let i = 0; i < 10; i += 1) controller.nudge('start', 1, true); // try to cross end
    expect(controller.currentStart()).toBeLessThan(controller.currentEnd());
    for (let i = 0; i < 10; i += 1) controller.nudge('end', -1, true);
    expect(controller.currentStart()).toBeLessThan(controller.currentEnd());
  });

  it('clamps the start boundary at zero', async () => {
    const { controller } = setup(1);
    await controller.refresh();
    controller.nudge('start', -1, true);
    expect(controller.currentStart()).toBe(0);
  });

  it('refuses to submit outside the reviewing phase', async () => {
    const { service, controller } = setup(0);
    await controller.refresh();
    await controller.submit('accept');
    expect(service.submitCalls).toBe(0);
  });
});

describe('conflict path', () => {
  it('surfaces 409, preserves edits, and can re-apply them', async () => {
    const { service, controller } = setup(1);
    await controller.refresh();
    controller.editTranscript('els meus canvis');

    // another reviewer wins the race
    const rival = new ReviewApiClient('', 'berta', service.fetchFn);
    await rival.submitTask('seg-0000', { revision: 0, verdict: 'skip' });

    await controller.submit('accept');
    expect(controller.phase).toBe('conflict');
    expect(controller.conflict?.serverTask.revision).toBe(1);
    expect(controller.conflict?.preservedEdits.transcript).toBe('els meus canvis');
    expect(controller.canSubmit).toBe(false);

    controller.applyMine();
    expect(controller.phase).toBe('reviewing');
    expect(controller.currentTranscript()).toBe('els meus canvis');
    expect(controller.canSubmit).toBe(true);
    await controller.submit('accept');
    const stored = service.tasks.get('seg-0000')!;
    expect(stored.status).toBe('accepted');
    expect(stored.final_transcript).toBe('els meus canvis');
    expect(stored.revision).toBe(2);
  });

  it('can drop local edits and move on after a conflict', async () => {
    const { service, controller } = setup(2);
    await controller.refresh();
    controller.editTranscript('canvis perduts');
    const rival = new ReviewApiClient('', 'berta', service.fetchFn);
    await rival.submitTask('seg-0000', { revision: 0, verdict: 'accept' });

    await controller.submit('accept');
    expect(controller.phase).toBe('conflict');
    await controller.takeServer();
    // first task was resolved elsewhere, so the queue advances
    expect(controller.view?.task.id).toBe('seg-0001');
    expect(service.tasks.get('seg-0000')!.final_transcript).toBe('pseudo 0');
  });
});

describe('keyboard-only operation', () => {
  it('completes a task end to end from the keyboard', async () => {
    const { service, controller } = setup(2);
    await controller.refresh();

    let toggles = 0;
    controller.attachPlayer({ toggle: () => (toggles += 1) });

    expect(controller.handleKey({ key: ' ' })).toBe(true); // play
    expect(controller.handleKey({ key: ']' })).toBe(true); // start +0.04
    expect(controller.handleKey({ key: '.', shiftKey: true })).toBe(true); // end +0.5
    expect(controller.handleKey({ key: ' ' })).toBe(true); // pause
    expect(controller.handleKey({ key: 'a' })).toBe(true); // accept

    await until(() => service.tasks.get('seg-0000')!.status === 'accepted');
    const stored = service.tasks.get('seg-0000')!;
    expect(toggles).toBe(2);
    expect(stored.start_s).toBeCloseTo(FINE_STEP_S, 9);
    expect(stored.end_s).toBeCloseTo(2.0, 9);
    await until(() => controller.view?.task.id === 'seg-0001');
    expect(controller.progress).toEqual({ completed: 1, total: 2 });
  });

  it('ignores unbound keys', async () => {
    const { controller } = setup(1);
    await controller.refresh();
    expect(controller.handleKey({ key: 'q' })).toBe(false);
  });

  it('resolves conflicts from the keyboard', async () => {
    const { service, controller } = setup(1);
    await controller.refresh();
    const rival = new ReviewApiClient('', 'berta', service.fetchFn);
    await rival.submitTask('seg-0000', { revision: 0, verdict: 'skip' });
    await controller.submit('accept');
    expect(controller.phase).toBe('conflict');
    expect(controller.handleKey({ key: 'm' })).toBe(true);
    expect(controller.phase).toBe('reviewing');
  });
});

describe('server remains the source of truth', () => {
  let service: FakeService;

  beforeEach(() => {
    service = new FakeService([makeTask(0), makeTask(1)]);
  });

  it('a fresh controller sees everything previously submitted', async () => {
    const first = new ReviewController(new ReviewApiClient('', 'anna', service.fetchFn));
    await first.refresh();
    first.editTranscript('persistit');
    await first.submit('accept');

    // "refresh": a brand-new controller with no local state
    const second = new ReviewController(new ReviewApiClient('', 'anna', service.fetchFn));
    await second.refresh();
    expect(second.view?.task.id).toBe('seg-0001');
    expect(second.counts.accepted).toBe(1);
    expect(service.tasks.get('seg-0000')!.final_transcript).toBe('persistit');
  });
});
