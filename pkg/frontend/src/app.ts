/** Annotation flow controller: fetch task -> selection grid ->
 * sentiment-restricted explanation form (skipped for No-Image) ->
 * submit -> next task.
 */

import { ApiClient, ApiError, TaskPayload } from "./api.js";
import { DraftStore } from "./storage.js";
import {
  MIN_EXPLANATION_WORDS,
  countWords,
  explanationComplete,
  isCandidateOf,
} from "./validation.js";

export interface AppOptions {
  /** Clock in epoch seconds, matching the service's lease_expiry unit. */
  now?: () => number;
  /** Lease countdown refresh interval in ms. */
  tickMs?: number;
}

export class AnnotationApp {
  private workerId = "";
  private task: TaskPayload | null = null;
  private selection: string | null = null;
  private leaseTimer: ReturnType<typeof setInterval> | null = null;
  private readonly now: () => number;
  private readonly tickMs: number;
  private drafts!: DraftStore;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly storage: Storage,
    options: AppOptions = {},
  ) {
    this.now = options.now ?? (() => Date.now() / 1000);
    this.tickMs = options.tickMs ?? 1000;
  }

  async start(workerId?: string): Promise<void> {
    const stored = workerId ?? this.storage.getItem("emobias-worker") ?? undefined;
    this.workerId = await this.api.registerWorker(stored);
    this.storage.setItem("emobias-worker", this.workerId);
    this.drafts = new DraftStore(this.storage, this.workerId);
    await this.fetchNext();
  }

  async fetchNext(): Promise<void> {
    this.stopLeaseTimer();
    this.renderMessage("Loading the next task…");
    let task: TaskPayload | null;
    try {
      task = await this.api.nextTask(this.workerId);
    } catch (error) {
      this.renderRetry(error, () => this.fetchNext());
      return;
    }
    this.task = task;
    this.selection = null;
    if (task === null) {
      this.renderDone();
      return;
    }
    const draft = this.drafts.load(task.task_id);
    if (draft.selection && isCandidateOf(task, draft.selection)) {
      this.selection = draft.selection;
    }
    this.renderGrid(task);
  }

  // ---- selection grid ------------------------------------------------

  private renderGrid(task: TaskPayload): void {
    this.root.innerHTML = "";
    const panel = el("section", "task-panel");

    const query = el("div", "query-panel");
    const emotionLabel = el("div", "query-emotion");
    emotionLabel.textContent = task.query.dominant_emotion
      ? `Most common emotion: ${task.query.dominant_emotion}`
      : "Query painting";
    query.append(emotionLabel, image(task.query.image_url, "query painting"));
    const instruction = el("p", "instruction");
    instruction.textContent =
      "Pick the painting most similar to the query that makes you feel the " +
      "OPPOSITE emotion. If none does, choose No Image Available.";
    query.append(instruction);
    query.append(this.leaseElement(task));
    panel.append(query);

    const grid = el("div", "candidate-grid");
    for (const candidate of task.candidates) {
      const tile = el("button", "candidate-tile") as HTMLButtonElement;
      tile.dataset.paintingId = candidate.painting_id;
      tile.type = "button";
      tile.append(
        image(candidate.image_url, candidate.painting_id),
        caption(candidate.painting_id),
      );
      tile.addEventListener("click", () => this.select(candidate.painting_id));
      grid.append(tile);
    }
    if (task.includes_no_image) {
      const tile = el("button", "no-image-tile") as HTMLButtonElement;
      tile.type = "button";
      tile.textContent = "No Image Available";
      tile.addEventListener("click", () => this.select(task.no_image_value));
      grid.append(tile);
    }
    panel.append(grid);

    const continueBtn = el("button", "primary") as HTMLButtonElement;
    continueBtn.id = "continue-btn";
    continueBtn.type = "button";
    continueBtn.textContent = "Continue";
    continueBtn.disabled = this.selection === null;
    continueBtn.addEventListener("click", () => this.advanceFromGrid());
    panel.append(continueBtn, el("div", "grid-error"));

    this.root.append(panel);
    this.markSelection();
    this.startLeaseTimer(task);
  }

  private select(paintingId: string): void {
    if (!this.task || this.leaseExpired(this.task)) return;
    this.selection = paintingId;
    const draft = this.drafts.load(this.task.task_id);
    draft.selection = paintingId;
    this.drafts.save(this.task.task_id, draft);
    this.markSelection();
    const btn = this.root.querySelector<HTMLButtonElement>("#continue-btn");
    if (btn) btn.disabled = false;
  }

  private markSelection(): void {
    for (const tile of this.root.querySelectorAll(".candidate-tile")) {
      tile.classList.toggle(
        "selected",
        (tile as HTMLElement).dataset.paintingId === this.selection,
      );
    }
    const noImage = this.root.querySelector(".no-image-tile");
    if (noImage && this.task) {
      noImage.classList.toggle(
        "selected",
        this.selection === this.task.no_image_value,
      );
    }
  }

  private advanceFromGrid(): void {
    if (!this.task || this.selection === null) return;
    if (this.selection === this.task.no_image_value) {
      void this.submit({ selection: this.selection });
      return;
    }
    this.renderExplain(this.task, this.selection);
  }

  // ---- explanation form ----------------------------------------------

  private renderExplain(task: TaskPayload, selection: string): void {
    this.stopLeaseTimer();
    this.root.innerHTML = "";
    const panel = el("section", "explain-panel");

    const chosen = task.candidates.find((c) => c.painting_id === selection);
    const picture = el("div", "selected-painting");
    picture.append(image(chosen ? chosen.image_url : "", selection));
    panel.append(picture);

    const draft = this.drafts.load(task.task_id);

    const prompt = el("p", "instruction");
    prompt.textContent =
      "Which emotion does this painting make you feel, and why?";
    panel.append(prompt);

    const options = el("div", "emotion-options");
    for (const emotion of task.allowed_emotions) {
      const label = el("label", "emotion-option");
      const radio = document.createElement("input");
      radio.type = "radio";
      radio.name = "emotion";
      radio.value = emotion;
      radio.checked = draft.emotion === emotion;
      radio.addEventListener("change", () => {
        const d = this.drafts.load(task.task_id);
        d.emotion = emotion;
        this.drafts.save(task.task_id, d);
        this.refreshSubmitState();
      });
      label.append(radio, document.createTextNode(emotion));
      options.append(label);
    }
    panel.append(options, el("div", "field-error emotion-error"));

    const textarea = document.createElement("textarea");
    textarea.id = "explanation-text";
    textarea.rows = 4;
    textarea.placeholder = "Explain what in the painting evokes the emotion…";
    textarea.value = draft.text;
    textarea.addEventListener("input", () => {
      const d = this.drafts.load(task.task_id);
      d.text = textarea.value;
      this.drafts.save(task.task_id, d);
      this.refreshSubmitState();
    });
    panel.append(textarea);

    const counter = el("div", "word-counter");
    counter.id = "word-counter";
    panel.append(counter, el("div", "field-error text-error"));

    const submitBtn = el("button", "primary") as HTMLButtonElement;
    submitBtn.id = "submit-btn";
    submitBtn.type = "button";
    submitBtn.textContent = "Submit";
    submitBtn.addEventListener("click", () => {
      const d = this.drafts.load(task.task_id);
      void this.submit({
        selection,
        emotion: d.emotion ?? undefined,
        utterance: d.text,
      });
    });

    const backBtn = el("button", "secondary") as HTMLButtonElement;
    backBtn.id = "back-btn";
    backBtn.type = "button";
    backBtn.textContent = "Back to grid";
    backBtn.addEventListener("click", () => {
      if (this.task) this.renderGrid(this.task);
    });

    panel.append(submitBtn, backBtn);
    this.root.append(panel);
    this.refreshSubmitState();
  }

  private refreshSubmitState(): void {
    if (!this.task) return;
    const draft = this.drafts.load(this.task.task_id);
    const counter = this.root.querySelector("#word-counter");
    if (counter) {
      counter.textContent =
        `${countWords(draft.text)}/${MIN_EXPLANATION_WORDS} words`;
    }
    const submitBtn = this.root.querySelector<HTMLButtonElement>("#submit-btn");
    if (submitBtn) {
      submitBtn.disabled = !explanationComplete(this.task, {
        emotion: draft.emotion,
        text: draft.text,
      });
    }
  }

  // ---- submission -----------------------------------------------------

  private async submit(fields: {
    selection: string;
    emotion?: string;
    utterance?: string;
  }): Promise<void> {
    if (!this.task) return;
    const task = this.task;
    try {
      await this.api.submit({
        task_id: task.task_id,
        worker_id: this.workerId,
        ...fields,
      });
    } catch (error) {
      if (error instanceof ApiError && error.status === 400) {
        this.showInlineError(error.message);
      } else {
        this.renderRetry(error, () => this.submit(fields));
      }
      return;
    }
    this.drafts.clear(task.task_id);
    await this.fetchNext();
  }

  private showInlineError(message: string): void {
    const lower = message.toLowerCase();
    let slot = ".grid-error";
    if (lower.includes("emotion") || lower.includes("sentiment")) {
      slot = ".emotion-error";
    } else if (lower.includes("word") || lower.includes("utterance")) {
      slot = ".text-error";
    } else if (lower.includes("candidate")) {
      slot = ".grid-error";
    }
    const target =
      this.root.querySelector(slot) ?? this.root.querySelector(".field-error");
    if (target) target.textContent = message;
  }

  // ---- lease countdown -------------------------------------------------

  private leaseExpired(task: TaskPayload): boolean {
    return task.lease_expiry !== undefined && this.now() >= task.lease_expiry;
  }

  private leaseElement(task: TaskPayload): HTMLElement {
    const element = el("div", "lease-countdown");
    element.textContent = this.leaseText(task);
    return element;
  }

  private leaseText(task: TaskPayload): string {
    if (task.lease_expiry === undefined) return "";
    const remaining = Math.max(0, Math.floor(task.lease_expiry - this.now()));
    const minutes = Math.floor(remaining / 60);
    const seconds = remaining % 60;
    return `Lease: ${minutes}:${String(seconds).padStart(2, "0")} remaining`;
  }

  private startLeaseTimer(task: TaskPayload): void {
    if (task.lease_expiry === undefined) return;
    this.stopLeaseTimer();
    this.leaseTimer = setInterval(() => {
      const countdown = this.root.querySelector(".lease-countdown");
      if (countdown) countdown.textContent = this.leaseText(task);
      if (this.leaseExpired(task)) this.expireLease();
    }, this.tickMs);
  }

  private stopLeaseTimer(): void {
    if (this.leaseTimer !== null) {
      clearInterval(this.leaseTimer);
      this.leaseTimer = null;
    }
  }

  private expireLease(): void {
    this.stopLeaseTimer();
    for (const tile of this.root.querySelectorAll<HTMLButtonElement>(
      ".candidate-tile, .no-image-tile",
    )) {
      tile.disabled = true;
    }
    const continueBtn = this.root.querySelector<HTMLButtonElement>("#continue-btn");
    if (continueBtn) continueBtn.disabled = true;
    if (!this.root.querySelector(".expired-prompt")) {
      const prompt = el("div", "expired-prompt");
      const note = el("p");
      note.textContent = "This task's lease expired. Entered text is kept.";
      const refetch = el("button", "primary") as HTMLButtonElement;
      refetch.id = "refetch-btn";
      refetch.type = "button";
      refetch.textContent = "Fetch a task";
      refetch.addEventListener("click", () => this.fetchNext());
      prompt.append(note, refetch);
      this.root.append(prompt);
    }
  }

  // ---- terminal / error panels ------------------------------------------

  private renderDone(): void {
    this.root.innerHTML = "";
    const panel = el("section", "done-panel");
    panel.textContent =
      "No tasks available. Thank you for annotating — check back later.";
    this.root.append(panel);
  }

  private renderRetry(error: unknown, retry: () => unknown): void {
    let banner = this.root.querySelector(".retry-banner");
    if (!banner) {
      banner = el("div", "retry-banner");
      this.root.prepend(banner);
    }
    banner.innerHTML = "";
    const note = el("span");
    note.textContent =
      error instanceof ApiError
        ? `Request failed (${error.status}): ${error.message}`
        : "Network problem — nothing was lost.";
    const retryBtn = el("button", "secondary") as HTMLButtonElement;
    retryBtn.id = "retry-btn";
    retryBtn.type = "button";
    retryBtn.textContent = "Retry";
    retryBtn.addEventListener("click", () => {
      banner?.remove();
      void retry();
    });
    banner.append(note, retryBtn);
  }

  private renderMessage(text: string): void {
    this.root.innerHTML = "";
    const panel = el("section", "loading-panel");
    panel.textContent = text;
    this.root.append(panel);
  }
}

// ---- small DOM helpers -------------------------------------------------

function el(tag: string, className?: string): HTMLElement {
  const element = document.createElement(tag);
  if (className) element.className = className;
  return element;
}

function image(src: string, alt: string): HTMLImageElement {
  const img = document.createElement("img");
  img.src = src;
  img.alt = alt;
  img.loading = "lazy";
  return img;
}

function caption(text: string): HTMLElement {
  const element = el("span", "tile-caption");
  element.textContent = text;
  return element;
}
