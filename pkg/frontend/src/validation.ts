/**
 * Client-side submission validation.
 *
 * These rules mirror the service schema exactly: every payload this module
 * accepts must be accepted by the service, and everything it rejects would
 * be rejected there too. Keep the two in lockstep when either side changes.
 */

import { DIMENSIONS } from './types.js';

const SUBMISSION_KEYS = new Set(['annotator_id', 'task_id', 'scores', 'ranking', 'confidence']);

function isPlainObject(value: unknown): value is Record<string, unknown> {
  return typeof value === 'object' && value !== null && !Array.isArray(value);
}

function isIntegerIn(value: unknown, lo: number, hi: number): boolean {
  return typeof value === 'number' && Number.isInteger(value) && value >= lo && value <= hi;
}

export function isPermutation(ranking: unknown, n = 3): boolean {
  if (!Array.isArray(ranking) || ranking.length !== n) return false;
  const seen = new Set<number>();
  for (const value of ranking) {
    if (!isIntegerIn(value, 1, n)) return false;
    seen.add(value as number);
  }
  return seen.size === n;
}

/**
 * Returns the list of violations; an empty list means the payload is valid.
 * Pass the known task ids so unknown tasks are caught before submission.
 */
export function validateSubmission(payload: unknown, knownTaskIds?: Set<string>): string[] {
  const violations: string[] = [];
  if (!isPlainObject(payload)) {
    return ['payload must be an object'];
  }
  for (const key of Object.keys(payload)) {
    if (!SUBMISSION_KEYS.has(key)) violations.push(`unexpected field "${key}"`);
  }
  for (const key of SUBMISSION_KEYS) {
    if (!(key in payload)) violations.push(`missing field "${key}"`);
  }

  const { annotator_id, task_id, scores, ranking, confidence } = payload as Record<string, unknown>;

  if (typeof annotator_id !== 'string' || annotator_id.length === 0) {
    violations.push('annotator_id must be a non-empty string');
  }
  if (typeof task_id !== 'string' || task_id.length === 0) {
    violations.push('task_id must be a non-empty string');
  } else if (knownTaskIds && !knownTaskIds.has(task_id)) {
    violations.push(`unknown task "${task_id}"`);
  }

  if (!Array.isArray(scores) || scores.length !== 3) {
    violations.push('scores must cover exactly 3 candidates');
  } else {
    scores.forEach((entry, index) => {
      if (!isPlainObject(entry)) {
        violations.push(`scores[${index}] must be an object`);
        return;
      }
      for (const key of Object.keys(entry)) {
        if (!(DIMENSIONS as readonly string[]).includes(key)) {
          violations.push(`scores[${index}] has unexpected field "${key}"`);
        }
      }
      for (const dim of DIMENSIONS) {
        if (!isIntegerIn(entry[dim], 1, 3)) {
          violations.push(`scores[${index}].${dim} must be an integer in 1..3`);
        }
      }
    });
  }

  if (!isPermutation(ranking)) {
    violations.push('ranking not a permutation of 1..3');
  }
  if (!isIntegerIn(confidence, 1, 5)) {
    violations.push('confidence must be an integer in 1..5');
  }
  return violations;
}
