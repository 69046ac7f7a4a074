/**
 * Session persistence: the anonymous annotator id plus one draft per task,
 * stored behind a minimal key-value interface (window.localStorage in the
 * browser, a plain map in tests). Drafts survive page reloads and failed
 * submissions.
 */

import { Draft, emptyDraft } from './types.js';

export interface KVStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const SESSION_KEY = 'analogy-annotation.session';
const DRAFT_PREFIX = 'analogy-annotation.draft.';

export class SessionStore {
  constructor(private storage: KVStorage) {}

  get annotatorId(): string | null {
    return this.storage.getItem(SESSION_KEY);
  }

  set annotatorId(value: string | null) {
    if (value === null) {
      this.storage.removeItem(SESSION_KEY);
    } else {
      this.storage.setItem(SESSION_KEY, value);
    }
  }

  loadDraft(taskId: string): Draft {
    const raw = this.storage.getItem(DRAFT_PREFIX + taskId);
    if (raw === null) return emptyDraft();
    try {
      const parsed = JSON.parse(raw) as Draft;
      if (!Array.isArray(parsed.scores) || parsed.scores.length !== 3) return emptyDraft();
      return parsed;
    } catch {
      return emptyDraft();
    }
  }

  saveDraft(taskId: string, draft: Draft): void {
    this.storage.setItem(DRAFT_PREFIX + taskId, JSON.stringify(draft));
  }

  clearDraft(taskId: string): void {
    this.storage.removeItem(DRAFT_PREFIX + taskId);
  }
}

/** In-memory storage for tests and non-browser environments. */
export class MemoryStorage implements KVStorage {
  private map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}
