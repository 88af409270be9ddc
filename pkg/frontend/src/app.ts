// DOM wiring: mount the store-rendered views on a root element and
// translate clicks/inputs into store actions via event delegation.

import type { Service } from './api.js';
import { WizardStore } from './store.js';
import { render } from './views.js';

export function mount(root: HTMLElement, service: Service): WizardStore {
  const store = new WizardStore(service);

  function sync(): void {
    root.innerHTML = render(store.get());
  }

  root.addEventListener('click', (event) => {
    const target = (event.target as HTMLElement).closest('[data-action]');
    if (!target) return;
    event.preventDefault();
    const action = target.getAttribute('data-action');

    if (action === 'submit-intent') {
      const box = root.querySelector<HTMLTextAreaElement>('#intent-text');
      void store.submitIntent(box?.value ?? '');
    } else if (action === 'to-tasks') {
      collectOverrides();
      store.toTasks();
    } else if (action === 'confirm') {
      const boxes = root.querySelectorAll<HTMLInputElement>('.task-box');
      const tasks = [...boxes].filter((b) => b.checked).map((b) => b.value);
      store.setTaskDraft(tasks);
      void store.confirm();
    } else if (action === 'load-recommendations') {
      void store.loadRecommendations();
    } else if (action === 'load-report') {
      void store.loadReport();
    } else if (action === 'resolve') {
      const riskId = target.getAttribute('data-risk') ?? '';
      const form = root.querySelector<HTMLFormElement>(
        `.resolve-form[data-risk="${riskId}"]`,
      );
      if (!form) return;
      const doc = form.querySelector<HTMLTextAreaElement>('.resolution-doc')?.value ?? '';
      const guardrail =
        form.querySelector<HTMLSelectElement>('.guardrail-pick')?.value || null;
      const plan = form.querySelector<HTMLSelectElement>('.plan-pick')?.value || null;
      const steps = [...form.querySelectorAll<HTMLInputElement>('.step-box')]
        .filter((b) => b.checked)
        .map((b) => Number(b.value));
      void store.resolveRisk(
        riskId,
        doc,
        guardrail ? [guardrail, 0.2] : null,
        plan,
        steps,
      );
    } else if (action === 'reload') {
      void store.reload();
    }
  });

  function collectOverrides(): void {
    const assessment = store.get().assessment;
    if (!assessment) return;
    for (const input of root.querySelectorAll<HTMLInputElement>('.answer-input')) {
      const questionId = input.getAttribute('data-question') ?? '';
      const original = assessment.answers.find((a) => a.question_id === questionId);
      const values = input.value
        .split(',')
        .map((v) => v.trim())
        .filter(Boolean);
      const changed =
        original && values.join('||') !== original.values.join('||');
      if (changed) store.setOverride(questionId, values);
    }
  }

  store.subscribe(sync);
  sync();
  return store;
}
