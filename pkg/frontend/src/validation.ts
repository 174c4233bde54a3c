/** Client-side mirror of the server's submission rules.
 *
 * The server stays authoritative; these checks only exist so the UI can
 * never construct a request the server would reject for candidate
 * membership, emotion sentiment, or explanation length.
 */

import type { TaskPayload } from "./api.js";

export const MIN_EXPLANATION_WORDS = 5;

/** Same rule as the server: whitespace-separated tokens. */
export function countWords(text: string): number {
  const trimmed = text.trim();
  if (trimmed === "") return 0;
  return trimmed.split(/\s+/).length;
}

export function isCandidateOf(task: TaskPayload, paintingId: string): boolean {
  return task.candidates.some((c) => c.painting_id === paintingId);
}

export function isAllowedEmotion(task: TaskPayload, emotion: string): boolean {
  return task.allowed_emotions.includes(emotion);
}

export interface ExplanationDraft {
  emotion: string | null;
  text: string;
}

/** True once the explanation form may be submitted. */
export function explanationComplete(
  task: TaskPayload,
  draft: ExplanationDraft,
): boolean {
  return (
    draft.emotion !== null &&
    isAllowedEmotion(task, draft.emotion) &&
    countWords(draft.text) >= MIN_EXPLANATION_WORDS
  );
}
