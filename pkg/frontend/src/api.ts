/**
 * Typed client for the audit service. Every console mutation is a plain
 * POST to a documented endpoint; anything the console does can be replayed
 * with curl.
 */

import type {
  AuditRecord,
  AuditResult,
  AuditSummary,
  CatalogDoc,
  DialogueDoc,
  Finding,
  LintResponse,
  ReauditResponse,
  ReviewItem,
} from './types';

export interface ApiClientOptions {
  token?: string;
  fetchImpl?: typeof fetch;
}

/** Error envelope from the service: `{error, message?, findings?}`. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly findings: Finding[] = [],
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export interface OverridePayload {
  phase_id: string;
  new_verdict: number;
  reviewer: string;
  rationale: string;
  old_verdict?: number;
}

export class ApiClient {
  private readonly fetchImpl: typeof fetch;

  constructor(
    readonly baseUrl: string,
    private readonly options: ApiClientOptions = {},
  ) {
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'content-type': 'application/json' };
    if (this.options.token) {
      headers['authorization'] = `Bearer ${this.options.token}`;
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const envelope = payload as { error?: string; message?: string; findings?: Finding[] };
      throw new ApiError(
        response.status,
        envelope.error ?? 'HTTP_ERROR',
        envelope.message ?? `${method} ${path} failed with ${response.status}`,
        envelope.findings ?? [],
      );
    }
    return payload as T;
  }

  lint(doc: CatalogDoc): Promise<LintResponse> {
    return this.request('POST', '/lint', doc);
  }

  createCatalog(doc: CatalogDoc): Promise<{ version: string; findings: Finding[] }> {
    return this.request('POST', '/catalogs', doc);
  }

  listCatalogs(): Promise<{ versions: string[] }> {
    return this.request('GET', '/catalogs');
  }

  getCatalog(version: string): Promise<CatalogDoc> {
    return this.request('GET', `/catalogs/${encodeURIComponent(version)}`);
  }

  createAudit(dialogue: DialogueDoc, catalogVersion: string): Promise<AuditResult> {
    return this.request('POST', '/audits', {
      dialogue,
      catalog_version: catalogVersion,
    });
  }

  listAudits(): Promise<{ audits: AuditSummary[] }> {
    return this.request('GET', '/audits');
  }

  getAudit(auditId: string): Promise<AuditRecord> {
    return this.request('GET', `/audits/${encodeURIComponent(auditId)}`);
  }

  reaudit(dialogueIds: string[], catalogVersion: string): Promise<ReauditResponse> {
    return this.request('POST', '/reaudits', {
      dialogue_ids: dialogueIds,
      catalog_version: catalogVersion,
    });
  }

  reviewQueue(): Promise<{ items: ReviewItem[] }> {
    return this.request('GET', '/review-queue');
  }

  postOverride(auditId: string, payload: OverridePayload): Promise<AuditResult> {
    return this.request('POST', `/audits/${encodeURIComponent(auditId)}/overrides`, payload);
  }

  report(): Promise<Record<string, unknown>> {
    return this.request('GET', '/report');
  }
}
