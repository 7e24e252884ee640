/** Wire formats of the review service API, mirrored verbatim. */

export type TaskStatus = 'pending' | 'accepted' | 'rejected' | 'skipped';
export type Verdict = 'accept' | 'reject' | 'skip';

export interface ReviewTask {
  id: string;
  source_media: string;
  start_s: number;
  end_s: number;
  pseudo_transcript: string;
  final_transcript: string | null;
  status: TaskStatus;
  revision: number;
  mouth_ok: boolean;
  reviewer: string | null;
  updated_at: number;
  asr_failed: boolean;
}

export interface TaskCounts {
  pending: number;
  accepted: number;
  rejected: number;
  skipped: number;
}

export interface TaskListResponse {
  tasks: ReviewTask[];
  counts: TaskCounts;
}

export interface SubmitBody {
  revision: number;
  verdict: Verdict;
  final_transcript?: string;
  start_s?: number;
  end_s?: number;
}

/** Local edits held on top of a fetched task; never the source of truth. */
export interface TaskEdits {
  transcript?: string;
  start_s?: number;
  end_s?: number;
}

/** Client-side view of the task under review. */
export interface TaskView {
  task: ReviewTask;
  /** revision held from the last fetch; submits must carry exactly this */
  heldRevision: number;
  edits: TaskEdits;
  dirty: boolean;
  playbackPosition: number;
}
