/** Review session state machine.
 *
 * The server is the only source of truth: this controller holds one fetched
 * task, local edits layered on top of it, and the revision captured at fetch
 * time. A submit always carries that held revision; when the server answers
 * 409 the task is re-fetched and the edits are preserved for the reviewer to
 * re-apply or discard, never silently merged.
 */

import { ConflictError, ReviewApiClient } from './api';
import { findShortcut, KeyLike, ShortcutBinding, DEFAULT_SHORTCUTS } from './shortcuts';
import type { ReviewTask, TaskCounts, TaskEdits, TaskView, Verdict } from './types';

export type Phase = 'loading' | 'reviewing' | 'conflict' | 'all-done' | 'error';

export interface ConflictState {
  serverTask: ReviewTask;
  /** edits held when the conflict surfaced, ready for re-apply */
  preservedEdits: TaskEdits;
  detail: string;
}

export interface MediaPlayer {
  toggle(): void;
}

const EMPTY_COUNTS: TaskCounts = { pending: 0, accepted: 0, rejected: 0, skipped: 0 };

export const FINE_STEP_S = 0.04; // one frame at 25 fps
export const COARSE_STEP_S = 0.5;
const MIN_SEGMENT_S = FINE_STEP_S;

export class ReviewController {
  phase: Phase = 'loading';
  view: TaskView | null = null;
  conflict: ConflictState | null = null;
  counts: TaskCounts = EMPTY_COUNTS;
  sessionCompleted = 0;
  lastError = '';

  private listeners: Array<() => void> = [];
  private player: MediaPlayer | null = null;

  constructor(
    private readonly api: ReviewApiClient,
    private readonly shortcuts: ShortcutBinding[] = DEFAULT_SHORTCUTS,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  attachPlayer(player: MediaPlayer): void {
    this.player = player;
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  /** Reviewed-this-session over what this session set out to review. */
  get progress(): { completed: number; total: number } {
    return {
      completed: this.sessionCompleted,
      total: this.sessionCompleted + this.counts.pending,
    };
  }

  /** Submits are only legal with a fresh revision and no open conflict. */
  get canSubmit(): boolean {
    return (
      this.phase === 'reviewing' &&
      this.view !== null &&
      this.view.heldRevision === this.view.task.revision
    );
  }

  mediaUrl(): string | null {
    return this.view ? this.api.mediaUrl(this.view.task.id) : null;
  }

  // ----------------------------------------------------------- edits

  currentTranscript(): string {
    if (!this.view) return '';
    const { task, edits } = this.view;
    return edits.transcript ?? task.final_transcript ?? task.pseudo_transcript;
  }

  currentStart(): number {
    if (!this.view) return 0;
    return this.view.edits.start_s ?? this.view.task.start_s;
  }

  currentEnd(): number {
    if (!this.view) return 0;
    return this.view.edits.end_s ?? this.view.task.end_s;
  }

  editTranscript(text: string): void {
    if (!this.view) return;
    this.view.edits.transcript = text;
    this.view.dirty = true;
    this.emit();
  }

  /** Move one boundary by a fine or coarse step, never crossing the other. */
  nudge(edge: 'start' | 'end', direction: -1 | 1, coarse = false): void {
    if (!this.view) return;
    const step = (coarse ? COARSE_STEP_S : FINE_STEP_S) * direction;
    const start = this.currentStart();
    const end = this.currentEnd();
    if (edge === 'start') {
      const next = Math.min(Math.max(start + step, 0), end - MIN_SEGMENT_S);
      this.view.edits.start_s = round3(next);
    } else {
      const next = Math.max(end + step, start + MIN_SEGMENT_S);
      this.view.edits.end_s = round3(next);
    }
    this.view.dirty = true;
    this.emit();
  }

  setPlaybackPosition(seconds: number): void {
    if (this.view) this.view.playbackPosition = seconds;
  }

  // ----------------------------------------------------------- lifecycle

  async refresh(): Promise<void> {
    this.phase = 'loading';
    this.emit();
    try {
      const listing = await this.api.listTasks('pending', 1);
      this.counts = listing.counts;
      const next = listing.tasks[0];
      if (!next) {
        this.view = null;
        this.phase = 'all-done';
      } else {
        this.view = freshView(next);
        this.phase = 'reviewing';
      }
    } catch (err) {
      this.phase = 'error';
      this.lastError = String(err);
    }
    this.emit();
  }

  async submit(verdict: Verdict): Promise<void> {
    if (!this.canSubmit || !this.view) return;
    const { task, heldRevision, edits } = this.view;
    try {
      await this.api.submitTask(task.id, {
        revision: heldRevision,
        verdict,
        ...(edits.transcript !== undefined ? { final_transcript: edits.transcript } : {}),
        ...(edits.start_s !== undefined ? { start_s: edits.start_s } : {}),
        ...(edits.end_s !== undefined ? { end_s: edits.end_s } : {}),
      });
      this.sessionCompleted += 1;
      await this.refresh();
    } catch (err) {
      if (err instanceof ConflictError) {
        await this.enterConflict(task.id, { ...edits }, err.message);
      } else {
        this.phase = 'error';
        this.lastError = String(err);
        this.emit();
      }
    }
  }

  private async enterConflict(taskId: string, edits: TaskEdits, detail: string): Promise<void> {
    const serverTask = await this.api.getTask(taskId);
    this.conflict = { serverTask, preservedEdits: edits, detail };
    this.phase = 'conflict';
    this.emit();
  }

  /** Re-apply the preserved edits on top of the fresh server revision. */
  applyMine(): void {
    if (!this.conflict) return;
    this.view = freshView(this.conflict.serverTask);
    this.view.edits = { ...this.conflict.preservedEdits };
    this.view.dirty = Object.keys(this.view.edits).length > 0;
    this.conflict = null;
    this.phase = 'reviewing';
    this.emit();
  }

  /** Drop local edits and continue from the server's version of the task. */
  async takeServer(): Promise<void> {
    if (!this.conflict) return;
    const serverTask = this.conflict.serverTask;
    this.conflict = null;
    if (serverTask.status === 'pending') {
      this.view = freshView(serverTask);
      this.phase = 'reviewing';
      this.emit();
    } else {
      await this.refresh(); // someone else already resolved it
    }
  }

  // ----------------------------------------------------------- keyboard

  /** Route a keyboard event; returns true when it triggered an action. */
  handleKey(event: KeyLike): boolean {
    const binding = findShortcut(event, this.shortcuts);
    if (!binding) return false;
    switch (binding.action) {
      case 'play-pause':
        this.player?.toggle();
        return true;
      case 'accept':
        void this.submit('accept');
        return true;
      case 'reject':
        void this.submit('reject');
        return true;
      case 'skip':
        void this.submit('skip');
        return true;
      case 'nudge-start-back':
        this.nudge('start', -1, binding.coarse ?? false);
        return true;
      case 'nudge-start-fwd':
        this.nudge('start', 1, binding.coarse ?? false);
        return true;
      case 'nudge-end-back':
        this.nudge('end', -1, binding.coarse ?? false);
        return true;
      case 'nudge-end-fwd':
        this.nudge('end', 1, binding.coarse ?? false);
        return true;
      case 'conflict-apply-mine':
        this.applyMine();
        return true;
      case 'conflict-take-server':
        void this.takeServer();
        return true;
    }
  }
}

function freshView(task: ReviewTask): TaskView {
  return { task, heldRevision: task.revision, edits: {}, dirty: false, playbackPosition: 0 };
}

function round3(x: number): number {
  return Math.round(x * 1000) / 1000;
}
