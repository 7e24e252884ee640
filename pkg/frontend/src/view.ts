/** DOM rendering: one task at a time, driven entirely by controller state. */

import type { ReviewController } from './controller';

export function render(root: HTMLElement, controller: ReviewController): void {
  root.replaceChildren();
  const header = el('div', 'header');
  const { completed, total } = controller.progress;
  header.append(
    el('h1', '', 'Segment review'),
    el('span', 'progress', total > 0 ? `${completed}/${total} reviewed` : 'no tasks'),
  );
  root.append(header);

  switch (controller.phase) {
    case 'loading':
      root.append(el('p', 'status', 'loading…'));
      return;
    case 'all-done':
      root.append(el('p', 'status done', 'All tasks done.'));
      return;
    case 'error':
      root.append(
        el('p', 'status error', `Service unreachable: ${controller.lastError}`),
        button('Retry', () => void controller.refresh()),
      );
      return;
    case 'conflict':
      renderConflict(root, controller);
      return;
    case 'reviewing':
      renderTask(root, controller);
      return;
  }
}

function renderTask(root: HTMLElement, controller: ReviewController): void {
  const view = controller.view;
  if (!view) return;
  const media = controller.mediaUrl();

  const card = el('div', 'task');
  card.append(el('h2', '', view.task.id));
  if (view.task.asr_failed) {
    card.append(el('p', 'warn', 'pseudo-labeling failed for this segment; transcribe from scratch'));
  }

  if (media) {
    const audio = document.createElement('audio');
    audio.controls = true;
    audio.src = media;
    audio.id = 'player';
    audio.addEventListener('timeupdate', () => controller.setPlaybackPosition(audio.currentTime));
    controller.attachPlayer({
      toggle: () => (audio.paused ? void audio.play() : audio.pause()),
    });
    card.append(audio);
  }

  const boundaries = el(
    'p',
    'boundaries',
    `start ${controller.currentStart().toFixed(2)} s   end ${controller.currentEnd().toFixed(2)} s` +
      (view.dirty ? '  (edited)' : ''),
  );
  card.append(boundaries);

  const transcript = document.createElement('textarea');
  transcript.value = controller.currentTranscript();
  transcript.rows = 3;
  transcript.addEventListener('input', () => controller.editTranscript(transcript.value));
  // keep typing in the box from triggering single-letter shortcuts
  transcript.addEventListener('keydown', (e) => e.stopPropagation());
  card.append(transcript);

  const actions = el('div', 'actions');
  actions.append(
    button('Accept (a)', () => void controller.submit('accept')),
    button('Reject (r)', () => void controller.submit('reject')),
    button('Skip (s)', () => void controller.submit('skip')),
  );
  card.append(actions);
  card.append(
    el(
      'p',
      'hint',
      'space play/pause · [ ] nudge start · , . nudge end · hold Shift for 0.5 s steps',
    ),
  );
  root.append(card);
}

function renderConflict(root: HTMLElement, controller: ReviewController): void {
  const conflict = controller.conflict;
  if (!conflict) return;
  const box = el('div', 'conflict');
  box.append(
    el('h2', '', 'Another reviewer changed this task'),
    el('p', '', conflict.detail),
    el(
      'p',
      '',
      `server now has revision ${conflict.serverTask.revision}, status ${conflict.serverTask.status}`,
    ),
  );
  const actions = el('div', 'actions');
  actions.append(
    button('Re-apply my edits (m)', () => controller.applyMine()),
    button('Take server version (t)', () => void controller.takeServer()),
  );
  box.append(actions);
  root.append(box);
}

function el(tag: string, className = '', text = ''): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement('button');
  node.textContent = label;
  node.addEventListener('click', onClick);
  return node;
}
