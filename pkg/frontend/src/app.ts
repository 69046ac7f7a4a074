/**
 * Annotation form: onboarding with the calibration anchors, one screen per
 * task with three candidate ratings, drag-to-rank with a keyboard fallback,
 * confidence, and submission with draft recovery on failure.
 */

import { AnnotationApi, ApiError } from './api.js';
import { moveDown, moveUp, move, ranksFromOrder } from './ranking.js';
import { SessionStore } from './session.js';
import { DIMENSIONS, Draft, Submission, Task, emptyDraft } from './types.js';
import { validateSubmission } from './validation.js';

const DIMENSION_HELP: Record<string, string> = {
  coherence: 'Does the pairing make intuitive sense? (1 = none, 3 = immediately clear)',
  mapping: 'Could properties of the source map to the target? (1 = none, 3 = rich and consistent)',
  explanatory: 'Would this analogy help a learner understand the target? (1 = no, 3 = clearly)',
};

export class AnnotationApp {
  private tasks: Task[] = [];
  private currentTaskId: string | null = null;
  private dragIndex: number | null = null;

  constructor(
    private root: HTMLElement,
    private api: AnnotationApi,
    private session: SessionStore,
  ) {}

  async start(): Promise<void> {
    try {
      await this.api.health();
    } catch {
      this.renderRetryScreen();
      return;
    }
    if (this.session.annotatorId === null) {
      await this.renderOnboarding();
    } else {
      await this.refreshTasks();
      this.renderTaskScreen();
    }
  }

  private renderRetryScreen(): void {
    this.root.replaceChildren();
    const panel = el('div', 'panel');
    panel.append(
      el('h1', '', 'Annotation service unreachable'),
      el('p', '', 'The annotation service is not responding. Check your connection and retry.'),
      button('Retry', () => void this.start()),
    );
    this.root.append(panel);
  }

  private async renderOnboarding(): Promise<void> {
    let calibration = '';
    try {
      calibration = await this.api.calibration();
    } catch {
      calibration = '(calibration examples unavailable)';
    }
    this.root.replaceChildren();
    const panel = el('div', 'panel');
    panel.append(
      el('h1', '', 'Rating candidate analogies'),
      el(
        'p',
        '',
        'You will see 15 target concepts, each with three candidate source analogies. ' +
          'Rate every candidate on three dimensions (1-3), then rank the three candidates ' +
          'by how useful they would be for learning, and state your confidence (1-5).',
      ),
    );
    const definitions = el('ul', 'definitions');
    for (const dim of DIMENSIONS) {
      definitions.append(el('li', '', `${dim}: ${DIMENSION_HELP[dim]}`));
    }
    panel.append(el('h2', '', 'The three dimensions'), definitions);

    const anchors = el('pre', 'calibration');
    anchors.textContent = calibration;
    const details = document.createElement('details');
    details.append(
      el('summary', '', 'Scoring anchors and worked examples (including the Atom example)'),
      anchors,
    );
    panel.append(details);

    panel.append(
      button('Begin annotating', async () => {
        const annotatorId = await this.api.register();
        this.session.annotatorId = annotatorId;
        await this.refreshTasks();
        this.renderTaskScreen();
      }),
    );
    this.root.replaceChildren(panel);
  }

  private async refreshTasks(): Promise<void> {
    const annotatorId = this.session.annotatorId;
    if (annotatorId === null) return;
    try {
      this.tasks = await this.api.listTasks(annotatorId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 401) {
        // stale session id (e.g. service journal was reset): start over
        this.session.annotatorId = null;
        await this.renderOnboarding();
        return;
      }
      throw error;
    }
    if (this.currentTaskId === null) {
      const next = this.tasks.find((t) => !t.completed) ?? this.tasks[0];
      this.currentTaskId = next ? next.task_id : null;
    }
  }

  private currentTask(): Task | null {
    return this.tasks.find((t) => t.task_id === this.currentTaskId) ?? null;
  }

  private renderTaskScreen(): void {
    const task = this.currentTask();
    this.root.replaceChildren();
    if (task === null) {
      this.root.append(el('div', 'panel', 'No tasks available.'));
      return;
    }
    const draft = this.session.loadDraft(task.task_id);
    const panel = el('div', 'panel');

    const done = this.tasks.filter((t) => t.completed).length;
    panel.append(
      el('div', 'session-bar', `Session ${this.session.annotatorId} — ${done}/${this.tasks.length} tasks complete`),
      el('h1', '', `Target: ${task.target_name} (${task.domain})`),
      el('p', 'background', task.target_background),
    );

    task.candidates.forEach((candidate, index) => {
      const card = el('div', 'candidate');
      card.append(
        el('h2', '', `Source ${index + 1}: ${candidate.source_name}`),
        el('p', '', candidate.explanation),
      );
      for (const dim of DIMENSIONS) {
        const row = el('div', 'score-row');
        row.append(el('span', 'dim-label', DIMENSION_HELP[dim]));
        for (const value of [1, 2, 3]) {
          const label = document.createElement('label');
          const radio = document.createElement('input');
          radio.type = 'radio';
          radio.name = `score-${index}-${dim}`;
          radio.value = String(value);
          radio.checked = draft.scores[index]?.[dim] === value;
          radio.addEventListener('change', () => {
            draft.scores[index] = { ...draft.scores[index], [dim]: value };
            this.session.saveDraft(task.task_id, draft);
            this.updateSubmitState(task, draft);
          });
          label.append(radio, document.createTextNode(String(value)));
          row.append(label);
        }
        card.append(row);
      }
      panel.append(card);
    });

    panel.append(
      el('h2', '', 'Rank the three sources by learning usefulness'),
      el('p', 'hint', 'Drag to reorder, or use the arrow buttons / arrow keys. Best analogy first.'),
      this.renderRankList(task, draft),
    );

    const confidenceRow = el('div', 'confidence-row');
    confidenceRow.append(el('span', '', 'Confidence in your ranking (1 = guessing, 5 = certain): '));
    const select = document.createElement('select');
    select.id = 'confidence';
    const placeholder = document.createElement('option');
    placeholder.value = '';
    placeholder.textContent = 'choose...';
    select.append(placeholder);
    for (const value of [1, 2, 3, 4, 5]) {
      const option = document.createElement('option');
      option.value = String(value);
      option.textContent = String(value);
      option.selected = draft.confidence === value;
      select.append(option);
    }
    select.addEventListener('change', () => {
      draft.confidence = select.value === '' ? null : Number(select.value);
      this.session.saveDraft(task.task_id, draft);
      this.updateSubmitState(task, draft);
    });
    confidenceRow.append(select);
    panel.append(confidenceRow);

    const errorBox = el('div', 'errors');
    errorBox.id = 'errors';
    const submit = button('Submit and continue', () => void this.submit(task, draft));
    submit.id = 'submit';
    panel.append(errorBox, submit, this.renderTaskNav());
    this.root.append(panel);
    this.updateSubmitState(task, draft);
  }

  private renderRankList(task: Task, draft: Draft): HTMLElement {
    const list = el('ol', 'rank-list');
    draft.order.forEach((candidateIndex, position) => {
      const item = el('li', 'rank-item');
      item.draggable = true;
      item.tabIndex = 0;
      item.dataset.position = String(position);
      item.append(
        el('span', 'rank-pos', `#${position + 1}`),
        el('span', '', task.candidates[candidateIndex]?.source_name ?? `candidate ${candidateIndex}`),
      );
      const up = button('↑', () => this.reorder(task, draft, moveUp(draft.order, position)));
      up.classList.add('nudge');
      up.setAttribute('aria-label', 'move up');
      const down = button('↓', () => this.reorder(task, draft, moveDown(draft.order, position)));
      down.classList.add('nudge');
      down.setAttribute('aria-label', 'move down');
      item.append(up, down);

      item.addEventListener('keydown', (event) => {
        if (event.key === 'ArrowUp') {
          event.preventDefault();
          this.reorder(task, draft, moveUp(draft.order, position));
        } else if (event.key === 'ArrowDown') {
          event.preventDefault();
          this.reorder(task, draft, moveDown(draft.order, position));
        }
      });
      item.addEventListener('dragstart', () => {
        this.dragIndex = position;
      });
      item.addEventListener('dragover', (event) => event.preventDefault());
      item.addEventListener('drop', (event) => {
        event.preventDefault();
        if (this.dragIndex !== null && this.dragIndex !== position) {
          this.reorder(task, draft, move(draft.order, this.dragIndex, position));
        }
        this.dragIndex = null;
      });
      list.append(item);
    });
    return list;
  }

  private reorder(task: Task, draft: Draft, order: number[]): void {
    draft.order = order;
    this.session.saveDraft(task.task_id, draft);
    this.renderTaskScreen();
  }

  private renderTaskNav(): HTMLElement {
    const nav = el('div', 'task-nav');
    for (const task of this.tasks) {
      const link = button(
        `${task.completed ? '✓ ' : ''}${task.target_name}`,
        () => {
          this.currentTaskId = task.task_id;
          this.renderTaskScreen();
        },
      );
      link.classList.add('task-link');
      if (task.task_id === this.currentTaskId) link.classList.add('active');
      nav.append(link);
    }
    return nav;
  }

  buildSubmission(task: Task, draft: Draft): Submission {
    return {
      annotator_id: this.session.annotatorId ?? '',
      task_id: task.task_id,
      scores: draft.scores.map((entry) => ({
        coherence: entry.coherence ?? 0,
        mapping: entry.mapping ?? 0,
        explanatory: entry.explanatory ?? 0,
      })),
      ranking: ranksFromOrder(draft.order),
      confidence: draft.confidence ?? 0,
    };
  }

  private updateSubmitState(task: Task, draft: Draft): void {
    const submit = this.root.querySelector<HTMLButtonElement>('#submit');
    const errorBox = this.root.querySelector<HTMLElement>('#errors');
    if (!submit || !errorBox) return;
    const violations = validateSubmission(
      this.buildSubmission(task, draft),
      new Set(this.tasks.map((t) => t.task_id)),
    );
    submit.disabled = violations.length > 0;
    errorBox.replaceChildren();
    if (violations.length > 0) {
      for (const violation of violations) {
        errorBox.append(el('div', 'error', violation));
      }
    }
  }

  private async submit(task: Task, draft: Draft): Promise<void> {
    const submission = this.buildSubmission(task, draft);
    const violations = validateSubmission(
      submission,
      new Set(this.tasks.map((t) => t.task_id)),
    );
    if (violations.length > 0) {
      this.updateSubmitState(task, draft);
      return;
    }
    try {
      await this.api.submit(submission);
    } catch {
      // network or service failure: the draft stays saved for resubmission
      const errorBox = this.root.querySelector<HTMLElement>('#errors');
      errorBox?.replaceChildren(
        el('div', 'error', 'Submission failed; your answers are saved — try again.'),
      );
      return;
    }
    this.session.clearDraft(task.task_id);
    this.currentTaskId = null;
    await this.refreshTasks();
    const next = this.tasks.find((t) => !t.completed);
    this.currentTaskId = next ? next.task_id : this.tasks[0]?.task_id ?? null;
    this.renderTaskScreen();
  }
}

function el(tag: string, className = '', text = ''): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement('button');
  node.type = 'button';
  node.textContent = label;
  node.addEventListener('click', onClick);
  return node;
}

export function mount(): void {
  const root = document.getElementById('app');
  if (!root) return;
  const baseUrl = window.location.pathname.startsWith('/ui')
    ? window.location.origin
    : 'http://127.0.0.1:8000';
  const app = new AnnotationApp(
    root,
    new AnnotationApi(baseUrl),
    new SessionStore(window.localStorage),
  );
  void app.start();
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  mount();
}

export { emptyDraft };
