// Wizard state and the actions that drive it. Every state change
// round-trips through the service; the store never computes scores or
// orderings itself. Version conflicts surface as a reload prompt.

import { ServiceError, type Service } from './api.js';
import type {
  AssessmentView,
  RecommendationView,
  ReportView,
} from './types.js';

export type Screen =
  | 'intent'
  | 'questionnaire'
  | 'tasks'
  | 'risks'
  | 'models'
  | 'mitigations';

export type WizardState = {
  screen: Screen;
  assessment: AssessmentView | null;
  recommendation: RecommendationView | null;
  report: ReportView | null;
  rawReport: string | null;
  overrides: Record<string, string[]>;
  taskDraft: string[] | null;
  unmet: string[];
  error: { status: number; detail: string } | null;
  conflict: boolean;
  busy: boolean;
};

export function initialState(): WizardState {
  return {
    screen: 'intent',
    assessment: null,
    recommendation: null,
    report: null,
    rawReport: null,
    overrides: {},
    taskDraft: null,
    unmet: [],
    error: null,
    conflict: false,
    busy: false,
  };
}

type Listener = (state: WizardState) => void;

export class WizardStore {
  private state: WizardState = initialState();
  private listeners: Listener[] = [];

  constructor(private service: Service) {}

  get(): WizardState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private set(patch: Partial<WizardState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  private fail(err: unknown): void {
    if (err instanceof ServiceError) {
      // stale expected_version: ask the user to reload, don't retry blindly
      if (err.status === 409 && /version/i.test(String(err.detail))) {
        this.set({ conflict: true, busy: false });
        return;
      }
      this.set({
        error: { status: err.status, detail: String(err.detail) },
        busy: false,
      });
      return;
    }
    this.set({ error: { status: 0, detail: String(err) }, busy: false });
  }

  private async run(action: () => Promise<void>): Promise<void> {
    this.set({ busy: true, error: null, unmet: [] });
    try {
      await action();
      this.set({ busy: false });
    } catch (err) {
      this.fail(err);
    }
  }

  async submitIntent(intent: string): Promise<void> {
    await this.run(async () => {
      const assessment = await this.service.createAssessment(intent);
      this.set({
        assessment,
        overrides: {},
        taskDraft: null,
        screen: 'questionnaire',
      });
    });
  }

  setOverride(questionId: string, values: string[]): void {
    this.set({ overrides: { ...this.state.overrides, [questionId]: values } });
  }

  clearOverride(questionId: string): void {
    const overrides = { ...this.state.overrides };
    delete overrides[questionId];
    this.set({ overrides });
  }

  toQuestionnaire(): void {
    this.set({ screen: 'questionnaire' });
  }

  toTasks(): void {
    this.set({ screen: 'tasks' });
  }

  setTaskDraft(tasks: string[]): void {
    this.set({ taskDraft: tasks });
  }

  /** Confirm tasks and overrides; the service recomputes the profile. */
  async confirm(): Promise<void> {
    const assessment = this.state.assessment;
    if (!assessment) return;
    await this.run(async () => {
      const updated = await this.service.confirm(assessment.id, {
        expected_version: assessment.version,
        tasks: this.state.taskDraft ?? assessment.suggested_tasks,
        answer_overrides: this.state.overrides,
      });
      this.set({ assessment: updated, screen: 'risks' });
    });
  }

  async loadRecommendations(policy = 'default'): Promise<void> {
    const assessment = this.state.assessment;
    if (!assessment) return;
    await this.run(async () => {
      const recommendation = await this.service.recommendations(assessment.id, policy);
      const refreshed = await this.service.getAssessment(assessment.id);
      this.set({ recommendation, assessment: refreshed, screen: 'models' });
    });
  }

  async loadReport(): Promise<void> {
    const assessment = this.state.assessment;
    if (!assessment) return;
    await this.run(async () => {
      const { raw, parsed } = await this.service.report(assessment.id);
      const refreshed = await this.service.getAssessment(assessment.id);
      this.set({
        report: parsed,
        rawReport: raw,
        assessment: refreshed,
        screen: 'mitigations',
      });
    });
  }

  /** Attempt to resolve a risk; unmet conditions render inline. */
  async resolveRisk(
    riskId: string,
    documentation: string,
    guardrailRun: [string, number] | null,
    planId: string | null,
    doneSteps: number[],
  ): Promise<void> {
    const assessment = this.state.assessment;
    if (!assessment) return;
    this.set({ busy: true, error: null, unmet: [] });
    try {
      await this.service.resolve(assessment.id, {
        risk: riskId,
        documentation,
        guardrail_runs: guardrailRun ? [guardrailRun] : undefined,
        plan: planId ?? undefined,
        actions_done: Object.fromEntries(doneSteps.map((i) => [String(i), { done: true }])),
        resolve: true,
      });
      const { raw, parsed } = await this.service.report(assessment.id);
      const refreshed = await this.service.getAssessment(assessment.id);
      this.set({
        report: parsed,
        rawReport: raw,
        assessment: refreshed,
        busy: false,
      });
    } catch (err) {
      if (err instanceof ServiceError && err.unmetConditions().length) {
        this.set({ unmet: err.unmetConditions(), busy: false });
        return;
      }
      this.fail(err);
    }
  }

  async reload(): Promise<void> {
    const assessment = this.state.assessment;
    if (!assessment) return;
    await this.run(async () => {
      const refreshed = await this.service.getAssessment(assessment.id);
      this.set({ assessment: refreshed, conflict: false, overrides: {} });
    });
  }
}
