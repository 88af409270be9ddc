// HTTP client for the assessment service. The UI talks to these seven
// endpoints and nothing else.

import type {
  AssessmentView,
  ConfirmBody,
  RecommendationView,
  ReportView,
  ResolutionBody,
  ResolutionView,
} from './types.js';

export class ServiceError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(typeof detail === 'string' ? detail : JSON.stringify(detail));
    this.name = 'ServiceError';
  }

  /** Enumerated unmet resolution conditions, when the service sent them. */
  unmetConditions(): string[] {
    const d = this.detail as { unmet?: string[] } | null;
    return d && Array.isArray(d.unmet) ? d.unmet : [];
  }
}

export interface Service {
  createAssessment(intent: string): Promise<AssessmentView>;
  getAssessment(id: string): Promise<AssessmentView>;
  confirm(id: string, body: ConfirmBody): Promise<AssessmentView>;
  recommendations(id: string, policy?: string): Promise<RecommendationView>;
  report(id: string): Promise<{ raw: string; parsed: ReportView }>;
  resolve(id: string, body: ResolutionBody): Promise<ResolutionView>;
}

export class ApiClient implements Service {
  constructor(
    private baseUrl: string = '',
    private token: string | null = null,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.token) headers['Authorization'] = `Bearer ${this.token}`;
    const response = await fetch(this.baseUrl + path, { ...init, headers });
    if (!response.ok) {
      let detail: unknown = response.statusText;
      try {
        const body = await response.json();
        detail = (body as { detail?: unknown }).detail ?? body;
      } catch {
        /* non-JSON error body: keep the status text */
      }
      throw new ServiceError(response.status, detail);
    }
    return response;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    return (await this.request(path, init)).json() as Promise<T>;
  }

  createAssessment(intent: string): Promise<AssessmentView> {
    return this.json('/assessments', {
      method: 'POST',
      body: JSON.stringify({ intent }),
    });
  }

  getAssessment(id: string): Promise<AssessmentView> {
    return this.json(`/assessments/${id}`);
  }

  confirm(id: string, body: ConfirmBody): Promise<AssessmentView> {
    return this.json(`/assessments/${id}/confirm`, {
      method: 'POST',
      body: JSON.stringify(body),
    });
  }

  recommendations(id: string, policy = 'default'): Promise<RecommendationView> {
    return this.json(`/assessments/${id}/recommendations?policy=${encodeURIComponent(policy)}`);
  }

  async report(id: string): Promise<{ raw: string; parsed: ReportView }> {
    // keep the raw bytes: the report screen renders exactly what the
    // service stored, it never reshapes the document
    const response = await this.request(`/assessments/${id}/report`);
    const raw = await response.text();
    return { raw, parsed: JSON.parse(raw) as ReportView };
  }

  resolve(id: string, body: ResolutionBody): Promise<ResolutionView> {
    return this.json(`/assessments/${id}/resolutions`, {
      method: 'POST',
      body: JSON.stringify(body),
    });
  }
}
