// View-model types mirroring the service JSON payloads. Views are pure
// projections of these; no score is ever recomputed client-side.

export type AnswerView = {
  question_id: string;
  values: string[];
  explanation: string;
  bullets: string[];
  mode: string;
  needs_user: boolean;
  source: 'auto' | 'human';
};

export type QaPairView = {
  question_id: string;
  question_text: string;
  answer: string;
  direction: 'amplifies' | 'reduces' | 'neutral';
  score: number;
};

export type FindingView = {
  risk_id: string;
  risk_name: string;
  description: string;
  qa_pairs: QaPairView[];
  avg_score: number;
  score_pct: string;
  severity: 'High' | 'Medium' | 'Low';
  explanation: string;
  measurable: boolean;
  severity_flagged: boolean;
};

export type ProfileView = {
  use_case_id: string;
  ai_tasks: string[];
  findings: FindingView[];
};

export type AssessmentView = {
  id: string;
  intent: string;
  status: 'draft' | 'tasks_confirmed' | 'assessed' | 'reported';
  version: number;
  answers: AnswerView[];
  suggested_tasks: string[];
  confirmed_tasks: string[];
  profile: ProfileView | null;
  recommendation: RecommendationView | null;
  evaluations: unknown[];
  resolutions: Record<string, ResolutionView>;
};

export type RiskScoreDetailView = {
  tri: -1 | 0 | 1 | null;
  benchmark_id: string | null;
  raw_score: number | null;
  evidence: string[];
};

export type RankedModelView = {
  model: string;
  total_risk_value: number;
  per_risk: Record<string, RiskScoreDetailView>;
};

export type RecommendationView = {
  policy: string;
  ranked: RankedModelView[];
  excluded: { model: string; reason: string }[];
  missing_evals: Record<string, string[]>;
  unknown_flags: Record<string, string[]>;
  comparison: {
    incumbent: string;
    challenger: string;
    strengths: string[];
    weaknesses: string[];
    incomparable: string[];
  } | null;
};

export type MitigationAdviceView = {
  risk_id: string;
  ordering: string[];
  guardrails: { id: string; description: string; filter_kind: string }[];
  action_plans: {
    id: string;
    steps: { text: string; depends_on: number[]; requires_human: boolean }[];
  }[];
  uncovered: boolean;
};

export type RiskCardView = FindingView & {
  mitigations: MitigationAdviceView;
  resolution: ResolutionView | null;
};

export type ResolutionView = {
  assessment_id: string;
  risk_id: string;
  guardrail_runs: [string, number][];
  plan_id: string | null;
  actions_done: Record<string, { done: boolean; note: string; timestamp: string }>;
  status: 'open' | 'resolved';
  documentation: string;
  resolved_via: string | null;
};

export type ReportView = {
  intent: string;
  ai_tasks: string[];
  questionnaire: {
    question_id: string;
    text: string;
    kind: string;
    values: string[];
    explanation: string;
    bullets: string[];
    source: string;
    needs_user: boolean;
  }[];
  risks: RiskCardView[];
  models: RecommendationView | Record<string, never>;
  evaluations: unknown[];
  resolutions: Record<string, ResolutionView>;
};

export type ConfirmBody = {
  expected_version: number;
  tasks?: string[];
  answer_overrides?: Record<string, string[]>;
};

export type ResolutionBody = {
  risk: string;
  guardrail_runs?: [string, number][];
  plan?: string;
  actions_done?: Record<string, { done: boolean; note?: string }>;
  documentation?: string;
  resolve?: boolean;
};
