// Pure view functions: wizard state in, HTML string out. No fetches, no
// score math: orderings and numbers appear exactly as the service sent
// them, which also makes every view testable without a DOM.

import type { WizardState } from './store.js';
import type {
  AnswerView,
  AssessmentView,
  FindingView,
  RecommendationView,
  RiskCardView,
} from './types.js';

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
    .replaceAll("'", '&#39;');
}

const e = escapeHtml;

function banner(state: WizardState): string {
  const parts: string[] = [];
  if (state.conflict) {
    parts.push(
      `<div class="banner conflict">Someone else changed this assessment ` +
        `(version conflict). <button data-action="reload">Reload latest</button></div>`,
    );
  }
  if (state.error) {
    parts.push(
      `<div class="banner error">Service error ${state.error.status}: ` +
        `${e(state.error.detail)}</div>`,
    );
  }
  if (state.busy) parts.push(`<div class="banner busy">Working&hellip;</div>`);
  return parts.join('');
}

function steps(current: string): string {
  const order: [string, string][] = [
    ['intent', 'Intent'],
    ['questionnaire', 'Questionnaire'],
    ['tasks', 'Tasks'],
    ['risks', 'Risks'],
    ['models', 'Models'],
    ['mitigations', 'Mitigations'],
  ];
  const items = order
    .map(
      ([id, label]) =>
        `<li class="${id === current ? 'active' : ''}">${e(label)}</li>`,
    )
    .join('');
  return `<ol class="steps">${items}</ol>`;
}

export function viewIntent(): string {
  return `
    <section class="screen intent-entry">
      <h2>Describe the intended use</h2>
      <p>The engine auto-fills the compliance questionnaire from this intent.</p>
      <textarea id="intent-text" rows="6" placeholder="e.g. a medical triage chatbot that..."></textarea>
      <button data-action="submit-intent">Assess</button>
    </section>`;
}

function provenanceBadge(answer: AnswerView): string {
  const cls = answer.source === 'human' ? 'badge human' : 'badge auto';
  const label = answer.source === 'human' ? 'overridden' : 'auto-filled';
  const flag = answer.needs_user
    ? ` <span class="badge needs-user">needs your answer</span>`
    : '';
  return `<span class="${cls}">${label}</span>${flag}`;
}

export function viewQuestionnaire(state: WizardState): string {
  const assessment = state.assessment as AssessmentView;
  const rows = assessment.answers
    .map((answer) => {
      const override = state.overrides[answer.question_id];
      const values = override ?? answer.values;
      const edited = override !== undefined;
      return `
      <article class="qa-row ${edited ? 'edited' : ''}" data-question="${e(answer.question_id)}">
        <header>
          <strong>${e(answer.question_id)}</strong>
          ${provenanceBadge({ ...answer, source: edited ? 'human' : answer.source })}
        </header>
        <input class="answer-input" data-question="${e(answer.question_id)}"
               value="${e(values.join(', '))}" />
        ${answer.explanation ? `<p class="explanation">${e(answer.explanation)}</p>` : ''}
        ${answer.bullets.length
          ? `<ul class="bullets">${answer.bullets.map((b) => `<li>${e(b)}</li>`).join('')}</ul>`
          : ''}
      </article>`;
    })
    .join('');
  return `
    <section class="screen questionnaire-review">
      <h2>Review the suggested answers</h2>
      ${rows}
      <button data-action="to-tasks">Continue to task confirmation</button>
    </section>`;
}

export function viewTasks(state: WizardState): string {
  const assessment = state.assessment as AssessmentView;
  const draft = state.taskDraft ?? assessment.suggested_tasks;
  const boxes = assessment.suggested_tasks
    .map(
      (task) => `
      <label><input type="checkbox" class="task-box" value="${e(task)}"
        ${draft.includes(task) ? 'checked' : ''}/> ${e(task)}</label>`,
    )
    .join('');
  return `
    <section class="screen task-confirm">
      <h2>Confirm the AI tasks</h2>
      <p>The engine suggests: ${assessment.suggested_tasks.map(e).join(', ') || 'none'}</p>
      ${boxes}
      <button data-action="confirm">Confirm tasks &amp; answers</button>
    </section>`;
}

function riskCard(finding: FindingView, recommendation: RecommendationView | null): string {
  const severity = e(finding.severity);
  const benchmark = benchmarkDetail(finding.risk_id, recommendation);
  const kindClass = finding.measurable ? 'measurable' : 'non-measurable';
  return `
    <details class="risk-card ${kindClass} severity-${severity.toLowerCase()}"
             data-risk="${e(finding.risk_id)}">
      <summary>
        <span class="severity">${severity}</span>
        <span class="name">${e(finding.risk_name)}</span>
        <span class="score">${e(finding.score_pct)}</span>
        <span class="kind">${finding.measurable ? 'measurable' : 'non-measurable'}</span>
      </summary>
      <p>${e(finding.description)}</p>
      <p class="why">${e(finding.explanation)}</p>
      ${benchmark}
    </details>`;
}

function benchmarkDetail(riskId: string, recommendation: RecommendationView | null): string {
  if (!recommendation) return '';
  const rows = recommendation.ranked
    .map((entry) => {
      const detail = entry.per_risk[riskId];
      if (!detail || detail.tri === null) return '';
      return `<li>${e(entry.model)}: ${e(detail.benchmark_id)} score ${e(detail.raw_score)}
        (tri ${e(detail.tri)}; evidence ${detail.evidence.map(e).join(', ')})</li>`;
    })
    .filter(Boolean)
    .join('');
  return rows
    ? `<div class="benchmark"><h4>Benchmark evidence</h4><ul>${rows}</ul></div>`
    : '';
}

export function viewRisks(state: WizardState): string {
  const profile = state.assessment?.profile;
  const cards = (profile?.findings ?? [])
    .map((finding) => riskCard(finding, state.recommendation))
    .join('');
  return `
    <section class="screen risk-report">
      <h2>Prioritized risks</h2>
      <p>Tasks: ${(profile?.ai_tasks ?? []).map(e).join(', ')}</p>
      ${cards || '<p>No findings.</p>'}
      <button data-action="load-recommendations">See model recommendations</button>
    </section>`;
}

export function viewModels(state: WizardState): string {
  const recommendation = state.recommendation;
  if (!recommendation) return '<section class="screen"><p>No recommendation yet.</p></section>';
  const rows = recommendation.ranked
    .map((entry) => {
      const missing = recommendation.missing_evals[entry.model] ?? [];
      const perRisk = Object.entries(entry.per_risk)
        .filter(([, d]) => d.tri !== null)
        .map(
          ([risk, d]) =>
            `<li>${e(risk)}: tri ${e(d.tri)} from ${e(d.benchmark_id)} = ${e(d.raw_score)}
             (evidence: ${d.evidence.map(e).join(', ')})</li>`,
        )
        .join('');
      return `
      <details class="model-row" data-model="${e(entry.model)}">
        <summary><strong>${e(entry.model)}</strong>
          <span class="total">${e(entry.total_risk_value)}</span></summary>
        <ul class="per-risk">${perRisk || '<li>No scored risks.</li>'}</ul>
        ${missing.length
          ? `<p class="missing">Proposed evaluations: ${missing.map(e).join(', ')}</p>`
          : ''}
      </details>`;
    })
    .join('');
  const excluded = recommendation.excluded
    .map((item) => `<li>${e(item.model)} - excluded: ${e(item.reason)}</li>`)
    .join('');
  return `
    <section class="screen model-picker">
      <h2>Model recommendation (policy: ${e(recommendation.policy)})</h2>
      ${rows}
      ${excluded ? `<h3>Excluded</h3><ul class="excluded">${excluded}</ul>` : ''}
      <button data-action="load-report">Generate report &amp; mitigations</button>
    </section>`;
}

function resolutionForm(card: RiskCardView, unmet: string[]): string {
  const resolved = card.resolution?.status === 'resolved';
  if (resolved) {
    return `<p class="resolved">Resolved via ${e(card.resolution?.resolved_via)}.</p>`;
  }
  const guardrails = card.mitigations.guardrails
    .map((g) => `<option value="${e(g.id)}">${e(g.id)}</option>`)
    .join('');
  const plans = card.mitigations.action_plans
    .map((p) => `<option value="${e(p.id)}">${e(p.id)}</option>`)
    .join('');
  const planSteps = card.mitigations.action_plans
    .map((plan) =>
      plan.steps
        .map(
          (step, index) => `
        <label class="step"><input type="checkbox" class="step-box"
          data-plan="${e(plan.id)}" value="${index}"/>
          ${index}. ${e(step.text)}${step.requires_human ? ' (human)' : ''}</label>`,
        )
        .join(''),
    )
    .join('');
  const unmetBlock = unmet.length
    ? `<ul class="unmet">${unmet.map((c) => `<li>${e(c)}</li>`).join('')}</ul>`
    : '';
  return `
    <form class="resolve-form" data-risk="${e(card.risk_id)}">
      ${unmetBlock}
      <label>Guardrail run
        <select class="guardrail-pick"><option value="">(none)</option>${guardrails}</select>
      </label>
      <label>Action plan
        <select class="plan-pick"><option value="">(none)</option>${plans}</select>
      </label>
      ${planSteps}
      <label>Documentation <textarea class="resolution-doc" rows="2"></textarea></label>
      <button data-action="resolve" data-risk="${e(card.risk_id)}">Mark resolved</button>
    </form>`;
}

function mitigationLists(card: RiskCardView): string {
  const sections: Record<string, string> = {
    guardrails: card.mitigations.guardrails.length
      ? `<h4>Guardrails</h4><ul>${card.mitigations.guardrails
          .map((g) => `<li>${e(g.id)} (${e(g.filter_kind)}): ${e(g.description)}</li>`)
          .join('')}</ul>`
      : '',
    action_plans: card.mitigations.action_plans.length
      ? `<h4>Action plans</h4><ul>${card.mitigations.action_plans
          .map((p) => `<li>${e(p.id)} (${p.steps.length} steps)</li>`)
          .join('')}</ul>`
      : '',
  };
  const ordered = card.mitigations.ordering.map((key) => sections[key] ?? '').join('');
  return card.mitigations.uncovered
    ? '<p class="uncovered">No catalog coverage for this risk.</p>'
    : ordered;
}

export function viewMitigations(state: WizardState): string {
  const report = state.report;
  if (!report) return '<section class="screen"><p>No report yet.</p></section>';
  const cards = report.risks
    .map(
      (card) => `
      <details class="risk-card mitigation-card" data-risk="${e(card.risk_id)}" open>
        <summary>
          <span class="severity">${e(card.severity)}</span>
          <span class="name">${e(card.risk_name)}</span>
          <span class="status">${e(card.resolution?.status ?? 'open')}</span>
        </summary>
        ${mitigationLists(card)}
        ${resolutionForm(card, state.unmet)}
      </details>`,
    )
    .join('');
  return `
    <section class="screen mitigations">
      <h2>Mitigations &amp; resolution</h2>
      ${cards}
      <details class="raw-report">
        <summary>Full report (as stored)</summary>
        <pre>${e(state.rawReport ?? '')}</pre>
      </details>
    </section>`;
}

export function render(state: WizardState): string {
  const body =
    state.screen === 'intent' ? viewIntent()
    : state.screen === 'questionnaire' ? viewQuestionnaire(state)
    : state.screen === 'tasks' ? viewTasks(state)
    : state.screen === 'risks' ? viewRisks(state)
    : state.screen === 'models' ? viewModels(state)
    : viewMitigations(state);
  return `${banner(state)}${steps(state.screen)}${body}`;
}
