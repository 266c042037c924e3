/**
 * Thin client for the annotation service's TSV-over-HTTP wire protocol.
 * Bodies are single records or line lists; cells use backslash escapes for
 * tab, newline, carriage return and backslash itself.
 */

import { Span } from "./spans.js";

export function escapeField(value: string): string {
  return value
    .replace(/\\/g, "\\\\")
    .replace(/\t/g, "\\t")
    .replace(/\n/g, "\\n")
    .replace(/\r/g, "\\r");
}

export function unescapeField(value: string): string {
  let out = "";
  let i = 0;
  while (i < value.length) {
    const ch = value[i]!;
    if (ch === "\\" && i + 1 < value.length) {
      const next = value[i + 1]!;
      const mapped: Record<string, string> = {
        "\\": "\\",
        t: "\t",
        n: "\n",
        r: "\r",
      };
      if (next in mapped) {
        out += mapped[next];
        i += 2;
        continue;
      }
    }
    out += ch;
    i += 1;
  }
  return out;
}

export interface TaskRecord {
  taskId: string;
  projectId: string;
  docId: string;
  systemId: string;
  taskType: "hallucination" | "factuality" | "linguistic";
  status: string;
  summaryText: string;
  documentText: string;
}

export class ServiceError extends Error {
  constructor(
    public readonly errorName: string,
    public readonly status: number,
    detail: string
  ) {
    super(detail);
  }
}

export function parseTaskRecord(line: string): TaskRecord {
  const cells = line.replace(/\n$/, "").split("\t").map(unescapeField);
  if (cells.length < 8) {
    throw new ServiceError("MalformedRecord", 0, `want 8 cells, got ${cells.length}`);
  }
  const taskType = cells[4]!;
  if (
    taskType !== "hallucination" &&
    taskType !== "factuality" &&
    taskType !== "linguistic"
  ) {
    throw new ServiceError("MalformedRecord", 0, `unknown task type ${taskType}`);
  }
  return {
    taskId: cells[0]!,
    projectId: cells[1]!,
    docId: cells[2]!,
    systemId: cells[3]!,
    taskType,
    status: cells[5]!,
    summaryText: cells[6]!,
    documentText: cells[7]!,
  };
}

function parseError(status: number, body: string): ServiceError {
  const cells = body.trim().split("\t");
  if (cells[0] === "error" && cells.length >= 3) {
    return new ServiceError(cells[1]!, status, unescapeField(cells[2]!));
  }
  return new ServiceError("HttpError", status, body.trim() || `status ${status}`);
}

export type FetchLike = (
  url: string,
  init?: { method?: string; body?: string }
) => Promise<{ status: number; text(): Promise<string>; headers: { get(n: string): string | null } }>;

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  private async call(
    method: string,
    path: string,
    body?: string
  ): Promise<{ status: number; body: string; headers: { get(n: string): string | null } }> {
    const resp = await this.fetchFn(`${this.base}${path}`, { method, body });
    const text = await resp.text();
    if (resp.status >= 400) {
      throw parseError(resp.status, text);
    }
    return { status: resp.status, body: text, headers: resp.headers };
  }

  async nextTask(annotator: string, taskType: string): Promise<TaskRecord | null> {
    const { status, body } = await this.call(
      "GET",
      `/tasks/next?annotator=${encodeURIComponent(annotator)}&type=${encodeURIComponent(taskType)}`
    );
    if (status === 204 || body.trim() === "") {
      return null;
    }
    return parseTaskRecord(body);
  }

  async submitSpans(taskId: string, annotator: string, spans: Span[]): Promise<void> {
    const body = spans
      .map((s) => `${escapeField(s.label)}\t${s.start}\t${s.end}`)
      .join("\n");
    await this.call(
      "POST",
      `/tasks/${encodeURIComponent(taskId)}/spans?annotator=${encodeURIComponent(annotator)}`,
      body
    );
  }

  async submitVerdict(
    taskId: string,
    annotator: string,
    verdict: boolean,
    note: string
  ): Promise<void> {
    await this.call(
      "POST",
      `/tasks/${encodeURIComponent(taskId)}/verdict?annotator=${encodeURIComponent(annotator)}`,
      `${verdict ? "true" : "false"}\t${escapeField(note)}`
    );
  }

  async createProject(projectId: string, pilot = false): Promise<void> {
    await this.call("POST", "/projects", `${escapeField(projectId)}\t${pilot ? 1 : 0}`);
  }

  async createBatch(
    projectId: string,
    taskType: string,
    pairs: Array<[string, string]>
  ): Promise<string[]> {
    const { body } = await this.call(
      "POST",
      `/projects/${encodeURIComponent(projectId)}/batches?type=${encodeURIComponent(taskType)}`,
      pairs.map(([d, s]) => `${escapeField(d)}\t${escapeField(s)}`).join("\n")
    );
    return body.split(/\s+/).filter((x) => x.length > 0);
  }

  async exportAnnotations(
    taskType: string
  ): Promise<{ body: string; complete: boolean }> {
    const { body, headers } = await this.call(
      "GET",
      `/export?type=${encodeURIComponent(taskType)}`
    );
    return { body, complete: headers.get("X-Export-Complete") === "true" };
  }
}
