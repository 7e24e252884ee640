/** Keyboard bindings for fully keyboard-driven review. */

export type ShortcutAction =
  | 'play-pause'
  | 'accept'
  | 'reject'
  | 'skip'
  | 'nudge-start-back'
  | 'nudge-start-fwd'
  | 'nudge-end-back'
  | 'nudge-end-fwd'
  | 'conflict-apply-mine'
  | 'conflict-take-server';

export interface ShortcutBinding {
  key: string;
  action: ShortcutAction;
  shift?: boolean;
  ctrl?: boolean;
  alt?: boolean;
  /** true when the shortcut also carries the coarse modifier (Shift) */
  coarse?: boolean;
}

/** Subset of KeyboardEvent the matcher needs; tests can fabricate these. */
export interface KeyLike {
  key: string;
  shiftKey?: boolean;
  ctrlKey?: boolean;
  metaKey?: boolean;
  altKey?: boolean;
}

/**
 * Boundary nudges: [ ] move the segment start, , . move the end.
 * Plain keys step one video frame (0.04 s); Shift steps 0.5 s.
 */
export const DEFAULT_SHORTCUTS: ShortcutBinding[] = [
  { key: ' ', action: 'play-pause' },
  { key: 'a', action: 'accept' },
  { key: 'r', action: 'reject' },
  { key: 's', action: 'skip' },
  { key: '[', action: 'nudge-start-back' },
  { key: ']', action: 'nudge-start-fwd' },
  { key: '[', shift: true, coarse: true, action: 'nudge-start-back' },
  { key: ']', shift: true, coarse: true, action: 'nudge-start-fwd' },
  { key: ',', action: 'nudge-end-back' },
  { key: '.', action: 'nudge-end-fwd' },
  { key: ',', shift: true, coarse: true, action: 'nudge-end-back' },
  { key: '.', shift: true, coarse: true, action: 'nudge-end-fwd' },
  { key: 'm', action: 'conflict-apply-mine' },
  { key: 't', action: 'conflict-take-server' },
];

/** Check whether a keyboard event matches a shortcut binding. */
export function matchesShortcut(event: KeyLike, binding: ShortcutBinding): boolean {
  const ctrl = (event.ctrlKey ?? false) || (event.metaKey ?? false);
  return (
    event.key.toLowerCase() === binding.key.toLowerCase() &&
    (event.shiftKey ?? false) === (binding.shift ?? false) &&
    ctrl === (binding.ctrl ?? false) &&
    (event.altKey ?? false) === (binding.alt ?? false)
  );
}

/** Find the binding an event triggers, if any. */
export function findShortcut(
  event: KeyLike,
  bindings: ShortcutBinding[] = DEFAULT_SHORTCUTS,
): ShortcutBinding | undefined {
  return bindings.find((b) => matchesShortcut(event, b));
}
