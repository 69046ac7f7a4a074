/** Thin typed client for the annotation service HTTP endpoints. */

import { Submission, Task } from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`service returned ${status}`);
  }
}

type FetchLike = typeof fetch;

export class AnnotationApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const text = await response.text();
    const body: unknown = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(response.status, body);
    }
    return body;
  }

  async health(): Promise<{ status: string; tasks: number; submissions: number }> {
    return (await this.request('/health')) as never;
  }

  async register(): Promise<string> {
    const body = (await this.request('/annotators', { method: 'POST' })) as {
      annotator_id: string;
    };
    return body.annotator_id;
  }

  async listTasks(annotatorId: string): Promise<Task[]> {
    const query = new URLSearchParams({ annotator: annotatorId });
    return (await this.request(`/tasks?${query}`)) as Task[];
  }

  async submit(submission: Submission): Promise<{ status: string; replaced: boolean }> {
    return (await this.request('/submissions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(submission),
    })) as never;
  }

  /** Raw submit for payloads that may be intentionally invalid (fuzzing). */
  async submitRaw(payload: unknown): Promise<{ status: number; body: unknown }> {
    const response = await this.fetchFn(`${this.baseUrl}/submissions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
    const text = await response.text();
    return { status: response.status, body: text ? JSON.parse(text) : null };
  }

  async exportJson(): Promise<Record<string, never>> {
    return (await this.request('/export?format=json')) as never;
  }

  async agreement(): Promise<Record<string, never>> {
    return (await this.request('/agreement')) as never;
  }

  async calibration(): Promise<string> {
    const body = (await this.request('/calibration')) as { text: string };
    return body.text;
  }
}
