/**
 * Rater-facing flow: pull the next task, collect word-snapped labeled spans
 * or a true/false verdict with an evidence note, submit, advance. The
 * controller is headless; boot() wires it to the DOM when one exists.
 */

import { ApiClient, ServiceError, TaskRecord } from "./api.js";
import { addSpan, removeSpanAt, Span, spanAt } from "./spans.js";
import { tokenize } from "./tokenize.js";

export const TASK_LABELS: Record<string, string[]> = {
  hallucination: ["intrinsic", "extrinsic"],
  linguistic: ["repetition", "incoherence"],
  factuality: [],
};

export type View =
  | { kind: "loading" }
  | {
      kind: "task";
      task: TaskRecord;
      spans: Span[];
      activeLabel: string;
      verdict: boolean | null;
      note: string;
      warning: string | null;
    }
  | { kind: "finished" }
  | { kind: "failure"; message: string }
  | { kind: "terminal"; message: string };

export class Controller {
  private view: View = { kind: "loading" };
  private inflight = false;

  constructor(
    private readonly api: ApiClient,
    private readonly annotator: string,
    private readonly taskType: string,
    private readonly onChange: (view: View) => void = () => {}
  ) {}

  current(): View {
    return this.view;
  }

  private set(view: View): void {
    this.view = view;
    this.onChange(view);
  }

  async start(): Promise<void> {
    await this.advance();
  }

  private async advance(): Promise<void> {
    this.set({ kind: "loading" });
    try {
      const task = await this.api.nextTask(this.annotator, this.taskType);
      if (task === null) {
        this.set({ kind: "finished" });
        return;
      }
      this.set({
        kind: "task",
        task,
        spans: [],
        activeLabel: TASK_LABELS[task.taskType]?.[0] ?? "",
        verdict: null,
        note: "",
        warning: null,
      });
    } catch (err) {
      this.set({ kind: "failure", message: describe(err) });
    }
  }

  retry(): Promise<void> {
    return this.advance();
  }

  setLabel(label: string): void {
    if (this.view.kind !== "task") return;
    if (!TASK_LABELS[this.view.task.taskType]?.includes(label)) return;
    this.set({ ...this.view, activeLabel: label });
  }

  /** A drag over the summary text; positions are character offsets. */
  drag(from: number, to: number): void {
    if (this.view.kind !== "task" || this.view.task.taskType === "factuality") {
      return;
    }
    const result = addSpan(
      this.view.spans,
      this.view.task.summaryText,
      from,
      to,
      this.view.activeLabel
    );
    if (result.ok) {
      this.set({ ...this.view, spans: result.spans, warning: null });
    } else if (result.reason === "overlap") {
      this.set({ ...this.view, warning: "selection overlaps an existing span" });
    }
  }

  /** A click on the summary: removes the span under the caret, if any. */
  clickAt(pos: number): void {
    if (this.view.kind !== "task") return;
    if (spanAt(this.view.spans, pos) === undefined) return;
    this.set({ ...this.view, spans: removeSpanAt(this.view.spans, pos), warning: null });
  }

  setVerdict(verdict: boolean): void {
    if (this.view.kind !== "task") return;
    this.set({ ...this.view, verdict });
  }

  setNote(note: string): void {
    if (this.view.kind !== "task") return;
    this.set({ ...this.view, note });
  }

  canSubmit(): boolean {
    if (this.view.kind !== "task") return false;
    if (this.view.task.taskType === "factuality") {
      return this.view.verdict !== null;
    }
    return true; // an empty span list is a deliberate "faithful" submission
  }

  /** Submit once; repeat calls while a request is in flight are dropped. */
  async submit(): Promise<void> {
    if (this.view.kind !== "task" || this.inflight || !this.canSubmit()) {
      return;
    }
    const view = this.view;
    this.inflight = true;
    try {
      if (view.task.taskType === "factuality") {
        await this.api.submitVerdict(
          view.task.taskId,
          this.annotator,
          view.verdict as boolean,
          view.note
        );
      } else {
        await this.api.submitSpans(view.task.taskId, this.annotator, view.spans);
      }
    } catch (err) {
      if (err instanceof ServiceError && err.errorName === "AlreadySubmitted") {
        this.set({ kind: "terminal", message: describe(err) });
      } else {
        this.set({ kind: "failure", message: describe(err) });
      }
      return;
    } finally {
      this.inflight = false;
    }
    await this.advance();
  }
}

function describe(err: unknown): string {
  if (err instanceof ServiceError) {
    return `${err.errorName}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}

// --- DOM shell ---------------------------------------------------------------

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function renderSummary(text: string, spans: Span[]): string {
  const parts: string[] = [];
  for (const token of tokenize(text)) {
    const span = spanAt(spans, token.start);
    const cls = span ? ` class="mark mark-${esc(span.label)}"` : ` class="word"`;
    parts.push(
      `<span${cls} data-start="${token.start}" data-end="${token.end}">` +
        `${esc(text.slice(token.start, token.end))}</span>`
    );
  }
  return parts.join(" ");
}

function render(root: HTMLElement, controller: Controller, view: View): void {
  if (view.kind === "loading") {
    root.innerHTML = `<p class="status">loading task…</p>`;
    return;
  }
  if (view.kind === "finished") {
    root.innerHTML = `<p class="status">no tasks left. thank you.</p>`;
    return;
  }
  if (view.kind === "terminal") {
    root.innerHTML = `<p class="status error">${esc(view.message)}</p>`;
    return;
  }
  if (view.kind === "failure") {
    root.innerHTML =
      `<p class="status error">${esc(view.message)}</p>` +
      `<button id="retry">retry</button>`;
    root.querySelector("#retry")?.addEventListener("click", () => {
      void controller.retry();
    });
    return;
  }

  const { task, spans, activeLabel, verdict, note, warning } = view;
  const labels = TASK_LABELS[task.taskType] ?? [];
  const pieces: string[] = [
    `<header><strong>${esc(task.taskType)}</strong> ` +
      `<span class="meta">${esc(task.docId)} / ${esc(task.systemId)}</span></header>`,
  ];
  if (task.documentText) {
    pieces.push(
      `<section class="document"><h2>source document</h2>` +
        `<p>${esc(task.documentText)}</p></section>`
    );
  }
  pieces.push(
    `<section class="summary"><h2>summary</h2>` +
      `<p id="summary-text">${renderSummary(task.summaryText, spans)}</p></section>`
  );
  if (labels.length > 0) {
    pieces.push(
      `<div class="palette">` +
        labels
          .map(
            (l) =>
              `<button class="label${l === activeLabel ? " active" : ""}" ` +
              `data-label="${esc(l)}">${esc(l)}</button>`
          )
          .join("") +
        `</div>`
    );
  }
  if (task.taskType === "factuality") {
    pieces.push(
      `<div class="verdict">` +
        `<button id="v-true"${verdict === true ? ' class="active"' : ""}>true</button>` +
        `<button id="v-false"${verdict === false ? ' class="active"' : ""}>false</button>` +
        `<input id="note" placeholder="evidence note" value="${esc(note)}">` +
        `<p class="hint">consult the document and external references before judging</p>` +
        `</div>`
    );
  }
  if (warning) {
    pieces.push(`<p class="warning">${esc(warning)}</p>`);
  }
  pieces.push(`<button id="submit">submit</button>`);
  root.innerHTML = pieces.join("\n");

  const summary = root.querySelector("#summary-text");
  let dragFrom: number | null = null;
  summary?.addEventListener("mousedown", (ev) => {
    const target = ev.target as HTMLElement;
    if (target.dataset.start !== undefined) {
      dragFrom = Number(target.dataset.start);
    }
  });
  summary?.addEventListener("mouseup", (ev) => {
    const target = ev.target as HTMLElement;
    if (target.dataset.end === undefined) {
      dragFrom = null;
      return;
    }
    const upStart = Number(target.dataset.start);
    const upEnd = Number(target.dataset.end);
    if (dragFrom !== null && dragFrom !== upStart) {
      controller.drag(Math.min(dragFrom, upStart), Math.max(dragFrom + 1, upEnd));
    } else {
      controller.clickAt(upStart);
    }
    dragFrom = null;
  });
  root.querySelectorAll<HTMLElement>(".palette .label").forEach((button) => {
    button.addEventListener("click", () => {
      controller.setLabel(button.dataset.label ?? "");
    });
  });
  root.querySelector("#v-true")?.addEventListener("click", () => {
    controller.setVerdict(true);
  });
  root.querySelector("#v-false")?.addEventListener("click", () => {
    controller.setVerdict(false);
  });
  root.querySelector("#note")?.addEventListener("input", (ev) => {
    controller.setNote((ev.target as HTMLInputElement).value);
  });
  root.querySelector("#submit")?.addEventListener("click", () => {
    void controller.submit();
  });
}

export function boot(root: HTMLElement): Controller {
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get("annotator") ?? "anonymous";
  const taskType = params.get("type") ?? "hallucination";
  const api = new ApiClient("");
  const controller = new Controller(api, annotator, taskType, (view) =>
    render(root, controller, view)
  );
  void controller.start();
  return controller;
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    boot(root);
  }
}
