/** Draft persistence in session storage.
 *
 * Whatever an annotator has typed survives lease expiry, re-fetches and
 * page refreshes until the submission succeeds.
 */

export interface Draft {
  selection: string | null;
  emotion: string | null;
  text: string;
}

const EMPTY: Draft = { selection: null, emotion: null, text: "" };

export class DraftStore {
  constructor(
    private readonly storage: Storage,
    private readonly workerId: string,
  ) {}

  private key(taskId: string): string {
    return `emobias-draft:${this.workerId}:${taskId}`;
  }

  load(taskId: string): Draft {
    const raw = this.storage.getItem(this.key(taskId));
    if (!raw) return { ...EMPTY };
    try {
      return { ...EMPTY, ...JSON.parse(raw) };
    } catch {
      return { ...EMPTY };
    }
  }

  save(taskId: string, draft: Draft): void {
    this.storage.setItem(this.key(taskId), JSON.stringify(draft));
  }

  clear(taskId: string): void {
    this.storage.removeItem(this.key(taskId));
  }
}
