/**
 * Wire types for the audit service JSON API.
 *
 * The console never recomputes decisions: every verdict shown on screen is
 * one of these objects exactly as the service returned it.
 */

/** Turn index, or null for the never-started/never-finished sentinel (∞). */
export type TurnMark = number | null;

export type PrecedencePolicy = 'strict' | 'inclusive';

export interface EvidenceSpan {
  first: number;
  last: number;
  quote: string;
  note: string;
}

export interface PhaseRow {
  phase_id: string;
  required: boolean | null;
  parents: string[];
  critical_parents: string[];
  start: TurnMark;
  finish: TurnMark;
  precedence_policy: PrecedencePolicy;
  verdict: number;
  evidence: EvidenceSpan[];
  graded_threshold: number | null;
}

export interface EdgeResult {
  parent: string;
  child: string;
  parent_finish: TurnMark;
  child_start: TurnMark;
  policy: PrecedencePolicy;
  ok: boolean;
}

export interface Decision {
  coverage: boolean;
  order_safe: boolean;
  call_success: boolean;
  failing_phases: string[];
  failing_edges: EdgeResult[];
}

export interface DiagnosticsReport {
  cds: number | null;
  psa: number | null;
  apc: number | null;
  per_edge: EdgeResult[];
  definition: string;
}

export interface OverrideRecord {
  phase_id: string;
  old_verdict: number;
  new_verdict: number;
  reviewer: string;
  rationale: string;
  timestamp: string;
}

export interface AuditResult {
  audit_id: string;
  dialogue_id: string;
  catalog_version: string;
  created_at: string;
  rows: PhaseRow[];
  decision: Decision;
  diagnostics: DiagnosticsReport;
  supersedes: string | null;
  overrides: OverrideRecord[];
}

export interface TurnDoc {
  t: number;
  role: 'user' | 'agent';
  text: string;
  events: string[];
}

export interface SignalDoc {
  phase: string;
  kind: string;
  turn: number;
  quote: string;
  confidence: number;
  source: string;
}

export interface DialogueDoc {
  id: string;
  turns: TurnDoc[];
  facts: Record<string, boolean>;
  signals: SignalDoc[];
  note?: string;
}

/** GET /audits/{id}: the stored record plus the transcript it was built from. */
export interface AuditRecord {
  audit: AuditResult;
  dialogue: DialogueDoc;
}

export interface AuditSummary {
  audit_id: string;
  dialogue_id: string;
  catalog_version: string;
  created_at: string;
  call_success: boolean;
  supersedes: string | null;
}

export type Severity = 'error' | 'warning' | 'advisory';

export interface Finding {
  rule: string;
  location: string;
  message: string;
  severity: Severity;
}

export interface LintResponse {
  ok: boolean;
  findings: Finding[];
}

export interface ReviewItem {
  audit_id: string;
  phase_id: string;
  reason: 'low_confidence' | 'critical_edge_fail' | 'novel_phrasing';
  excerpt: EvidenceSpan;
  catalog_version: string;
}

export interface PhaseDoc {
  id: string;
  title: string;
  rubric: string;
  parents: string[];
  critical_parents: string[];
  critical_rationale: Record<string, string>;
  precedence_policy: PrecedencePolicy;
  low_harm: boolean;
  ack_required: boolean;
  required: string;
  graded_threshold: number | null;
}

export interface CatalogDoc {
  version: string;
  schema_rev: number;
  entry_roles?: string[];
  phases: PhaseDoc[];
}

export interface ReauditResponse {
  catalog_version: string;
  results: AuditResult[];
}

export function formatMark(mark: TurnMark): string {
  return mark === null ? '∞' : String(mark);
}
