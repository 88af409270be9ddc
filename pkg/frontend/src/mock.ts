// In-memory stand-in for the assessment service, used by component
// tests and the ?mock=1 demo mode. It simulates the server's visible
// behavior (versioning, profile recomputation on confirm, resolution
// gating) with a small fixed rule table.

import { ServiceError, type Service } from './api.js';
import type {
  AnswerView,
  AssessmentView,
  ConfirmBody,
  FindingView,
  MitigationAdviceView,
  RecommendationView,
  ReportView,
  ResolutionBody,
  ResolutionView,
  RiskCardView,
} from './types.js';

const SEVERITY_RANK: Record<string, number> = { High: 0, Medium: 1, Low: 2 };

const QUESTIONS = [
  {
    question_id: 'q_category',
    text: 'What category of use does your use request fall under?',
    kind: 'multiple_choice',
  },
  {
    question_id: 'q_personal_info',
    text: 'Does the context include personal information?',
    kind: 'binary',
  },
  {
    question_id: 'q_input',
    text: 'What is the expected input to be sent to the foundation model?',
    kind: 'freeform',
  },
];

function initialAnswers(): AnswerView[] {
  return [
    {
      question_id: 'q_category',
      values: ['Generation'],
      explanation: 'The system writes advice in free text.',
      bullets: [],
      mode: 'few_shot',
      needs_user: false,
      source: 'auto',
    },
    {
      question_id: 'q_personal_info',
      values: ['yes'],
      explanation: 'Symptoms and history are personal data.',
      bullets: [],
      mode: 'few_shot',
      needs_user: false,
      source: 'auto',
    },
    {
      question_id: 'q_input',
      values: ['Patient symptom descriptions and medical history.'],
      explanation: '',
      bullets: ['Patient symptom descriptions', 'Medical history'],
      mode: 'few_shot',
      needs_user: false,
      source: 'auto',
    },
  ];
}

type FindingRule = {
  finding: Omit<FindingView, 'qa_pairs'>;
  requiresPersonalInfo: boolean;
};

const FINDING_RULES: FindingRule[] = [
  {
    requiresPersonalInfo: false,
    finding: {
      risk_id: 'IBM:atlas-harmful-output',
      risk_name: 'Harmful output',
      description: 'Generated advice could cause harm when acted on.',
      avg_score: 0.68,
      score_pct: '68%',
      severity: 'High',
      explanation: 'High. Acting on wrong advice can cause physical harm.',
      measurable: true,
      severity_flagged: false,
    },
  },
  {
    requiresPersonalInfo: false,
    finding: {
      risk_id: 'IBM:atlas-toxic-output',
      risk_name: 'Toxic output',
      description: 'The model may produce toxic language in output.',
      avg_score: 0.65,
      score_pct: '65%',
      severity: 'High',
      explanation: 'High. Toxic phrasing reaching users is unacceptable.',
      measurable: true,
      severity_flagged: false,
    },
  },
  {
    requiresPersonalInfo: true,
    finding: {
      risk_id: 'IBM:atlas-personal-information-in-data',
      risk_name: 'Personal information in data',
      description: 'Personal data in training material may be disclosed.',
      avg_score: 0.52,
      score_pct: '52%',
      severity: 'Medium',
      explanation: 'Medium. The average score indicates a moderate level of risk.',
      measurable: false,
      severity_flagged: false,
    },
  },
  {
    requiresPersonalInfo: true,
    finding: {
      risk_id: 'IBM:atlas-personal-information-in-prompt',
      risk_name: 'Personal information in prompt',
      description: 'Personal data placed into prompts may resurface.',
      avg_score: 0.6,
      score_pct: '60%',
      severity: 'Medium',
      explanation: 'Medium. Prompt contents are transient but sensitive.',
      measurable: false,
      severity_flagged: false,
    },
  },
  {
    requiresPersonalInfo: false,
    finding: {
      risk_id: 'IBM:atlas-prompt-injection',
      risk_name: 'Prompt injection',
      description: 'Crafted input can override intended instructions.',
      avg_score: 0.45,
      score_pct: '45%',
      severity: 'Medium',
      explanation: 'Medium. Injection could steer the advice off-script.',
      measurable: true,
      severity_flagged: false,
    },
  },
];

const MITIGATIONS: Record<string, MitigationAdviceView> = {
  'IBM:atlas-toxic-output': {
    risk_id: 'IBM:atlas-toxic-output',
    ordering: ['guardrails', 'action_plans'],
    guardrails: [
      {
        id: 'guard:toxicity-keyword-filter',
        description: 'Output filter replacing abusive responses.',
        filter_kind: 'output',
      },
    ],
    action_plans: [
      {
        id: 'plan:toxicity-review',
        steps: [
          { text: 'Run the toxicity evaluation suite.', depends_on: [], requires_human: false },
          { text: 'Review flagged transcripts.', depends_on: [0], requires_human: true },
        ],
      },
    ],
    uncovered: false,
  },
  'IBM:atlas-harmful-output': {
    risk_id: 'IBM:atlas-harmful-output',
    ordering: ['guardrails', 'action_plans'],
    guardrails: [
      {
        id: 'guard:toxicity-keyword-filter',
        description: 'Output filter replacing abusive responses.',
        filter_kind: 'output',
      },
    ],
    action_plans: [],
    uncovered: false,
  },
  'IBM:atlas-personal-information-in-data': {
    risk_id: 'IBM:atlas-personal-information-in-data',
    ordering: ['action_plans', 'guardrails'],
    guardrails: [],
    action_plans: [
      {
        id: 'plan:data-provenance',
        steps: [
          { text: 'Identify every dataset used.', depends_on: [], requires_human: true },
          { text: 'Provide copyright information.', depends_on: [0], requires_human: true },
        ],
      },
    ],
    uncovered: false,
  },
};

const RECOMMENDATION: RecommendationView = {
  policy: 'default',
  ranked: [
    {
      model: 'granite-3-8b-instruct',
      total_risk_value: 0.7778,
      per_risk: {
        'IBM:atlas-toxic-output': {
          tri: 1,
          benchmark_id: 'toxicity-stub',
          raw_score: 0.8,
          evidence: ['aievalresult:toxicity-stub granite-3-8b-instruct'],
        },
        'IBM:atlas-prompt-injection': {
          tri: 1,
          benchmark_id: 'injection-stub',
          raw_score: 0.9,
          evidence: ['aievalresult:injection-stub granite-3-8b-instruct'],
        },
      },
    },
    {
      model: 'mixtral-8x7b-instruct-v01',
      total_risk_value: -0.3333,
      per_risk: {
        'IBM:atlas-toxic-output': {
          tri: 0,
          benchmark_id: 'toxicity-stub',
          raw_score: 0.7,
          evidence: ['aievalresult:toxicity-stub mixtral-8x7b-instruct-v01'],
        },
        'IBM:atlas-prompt-injection': {
          tri: -1,
          benchmark_id: 'injection-stub',
          raw_score: 0.5,
          evidence: ['aievalresult:injection-stub mixtral-8x7b-instruct-v01'],
        },
      },
    },
  ],
  excluded: [{ model: 'example-chat-pro', reason: 'license' }],
  missing_evals: {
    'granite-3-8b-instruct': ['IBM:atlas-personal-information-in-data'],
  },
  unknown_flags: {},
  comparison: null,
};

function sortFindings(findings: FindingView[]): FindingView[] {
  return [...findings].sort((a, b) => {
    const severity = (SEVERITY_RANK[a.severity] ?? 3) - (SEVERITY_RANK[b.severity] ?? 3);
    if (severity !== 0) return severity;
    if (a.avg_score !== b.avg_score) return b.avg_score - a.avg_score;
    return a.risk_id < b.risk_id ? -1 : 1;
  });
}

export class MockService implements Service {
  private assessments = new Map<string, AssessmentView>();
  private counter = 0;

  async createAssessment(intent: string): Promise<AssessmentView> {
    if (!intent.trim()) throw new ServiceError(422, 'intent must not be empty');
    this.counter += 1;
    const assessment: AssessmentView = {
      id: `a-${String(this.counter).padStart(6, '0')}`,
      intent,
      status: 'draft',
      version: 1,
      answers: initialAnswers(),
      suggested_tasks: ['Generation'],
      confirmed_tasks: [],
      profile: null,
      recommendation: null,
      evaluations: [],
      resolutions: {},
    };
    this.assessments.set(assessment.id, assessment);
    return structuredClone(assessment);
  }

  private lookup(id: string): AssessmentView {
    const assessment = this.assessments.get(id);
    if (!assessment) throw new ServiceError(404, `no assessment ${id}`);
    return assessment;
  }

  async getAssessment(id: string): Promise<AssessmentView> {
    return structuredClone(this.lookup(id));
  }

  async confirm(id: string, body: ConfirmBody): Promise<AssessmentView> {
    const assessment = this.lookup(id);
    if (assessment.version !== body.expected_version) {
      throw new ServiceError(
        409,
        `assessment ${id} is at version ${assessment.version}, request expected ${body.expected_version}`,
      );
    }
    if (assessment.status !== 'draft') {
      throw new ServiceError(409, `assessment ${id} was already confirmed`);
    }
    for (const [questionId, values] of Object.entries(body.answer_overrides ?? {})) {
      const answer = assessment.answers.find((a) => a.question_id === questionId);
      if (!answer) throw new ServiceError(422, `unknown question ${questionId}`);
      answer.values = values;
      answer.source = 'human';
      answer.needs_user = false;
    }
    assessment.confirmed_tasks = body.tasks ?? assessment.suggested_tasks;

    const personal = assessment.answers.find((a) => a.question_id === 'q_personal_info');
    const personalInfo = (personal?.values[0] ?? 'no') === 'yes';
    const findings = FINDING_RULES.filter(
      (rule) => !rule.requiresPersonalInfo || personalInfo,
    ).map((rule) => ({
      ...structuredClone(rule.finding),
      qa_pairs: [],
    }));
    assessment.profile = {
      use_case_id: assessment.id,
      ai_tasks: assessment.confirmed_tasks,
      findings: sortFindings(findings),
    };
    assessment.status = 'tasks_confirmed';
    assessment.version += 1;
    return structuredClone(assessment);
  }

  async recommendations(id: string, policy = 'default'): Promise<RecommendationView> {
    const assessment = this.lookup(id);
    if (policy !== 'default') throw new ServiceError(404, `no policy named '${policy}'`);
    if (assessment.status === 'draft') {
      throw new ServiceError(409, 'confirm the assessment before asking for recommendations');
    }
    if (assessment.status === 'tasks_confirmed') {
      assessment.status = 'assessed';
      assessment.version += 1;
    }
    assessment.recommendation = structuredClone(RECOMMENDATION);
    return structuredClone(RECOMMENDATION);
  }

  private buildReport(assessment: AssessmentView): ReportView {
    const cards: RiskCardView[] = (assessment.profile?.findings ?? []).map((finding) => ({
      ...structuredClone(finding),
      mitigations:
        structuredClone(MITIGATIONS[finding.risk_id]) ?? {
          risk_id: finding.risk_id,
          ordering: ['action_plans', 'guardrails'],
          guardrails: [],
          action_plans: [],
          uncovered: true,
        },
      resolution: assessment.resolutions[finding.risk_id] ?? null,
    }));
    return {
      intent: assessment.intent,
      ai_tasks: assessment.confirmed_tasks,
      questionnaire: QUESTIONS.map((q) => {
        const answer = assessment.answers.find((a) => a.question_id === q.question_id);
        return {
          ...q,
          values: answer?.values ?? [],
          explanation: answer?.explanation ?? '',
          bullets: answer?.bullets ?? [],
          source: answer?.source ?? 'auto',
          needs_user: answer?.needs_user ?? false,
        };
      }),
      risks: cards,
      models: assessment.recommendation ?? {},
      evaluations: assessment.evaluations,
      resolutions: structuredClone(assessment.resolutions),
    };
  }

  async report(id: string): Promise<{ raw: string; parsed: ReportView }> {
    const assessment = this.lookup(id);
    if (assessment.status === 'draft' || assessment.status === 'tasks_confirmed') {
      throw new ServiceError(409, 'the report needs a computed recommendation');
    }
    if (assessment.status === 'assessed') {
      assessment.status = 'reported';
      assessment.version += 1;
    }
    const parsed = this.buildReport(assessment);
    return { raw: JSON.stringify(parsed, null, 2) + '\n', parsed: structuredClone(parsed) };
  }

  async resolve(id: string, body: ResolutionBody): Promise<ResolutionView> {
    const assessment = this.lookup(id);
    const existing = assessment.resolutions[body.risk];
    const record: ResolutionView = existing ?? {
      assessment_id: id,
      risk_id: body.risk,
      guardrail_runs: [],
      plan_id: null,
      actions_done: {},
      status: 'open',
      documentation: '',
      resolved_via: null,
    };
    record.guardrail_runs.push(...(body.guardrail_runs ?? []));
    if (body.plan !== undefined && body.plan !== null) record.plan_id = body.plan;
    for (const [step, info] of Object.entries(body.actions_done ?? {})) {
      record.actions_done[step] = {
        done: info.done,
        note: info.note ?? '',
        timestamp: '2025-01-01T00:00:00Z',
      };
    }
    if (body.documentation !== undefined) record.documentation = body.documentation;

    if (body.resolve) {
      const unmet: string[] = [];
      if (!record.documentation.trim()) {
        unmet.push('documentation of the actions taken is empty');
      }
      const plan = record.plan_id
        ? MITIGATIONS[body.risk]?.action_plans.find((p) => p.id === record.plan_id)
        : undefined;
      let actionsPath = false;
      if (plan) {
        const pending = plan.steps
          .map((step, index) => ({ step, index }))
          .filter(
            ({ step, index }) =>
              step.requires_human && !record.actions_done[String(index)]?.done,
          )
          .map(({ index }) => index);
        if (pending.length) {
          unmet.push(`plan ${record.plan_id} has pending human steps: ${pending.join(', ')}`);
        } else {
          actionsPath = true;
        }
      }
      if (!record.guardrail_runs.length && !actionsPath && !record.plan_id) {
        unmet.push('no guardrail run recorded and no action plan followed');
      }
      if (unmet.length) {
        assessment.resolutions[body.risk] = record;
        assessment.version += 1;
        throw new ServiceError(409, { unmet });
      }
      record.status = 'resolved';
      record.resolved_via = record.guardrail_runs.length ? 'guardrail' : 'actions';
    }
    assessment.resolutions[body.risk] = record;
    assessment.version += 1;
    return structuredClone(record);
  }
}
