/**
 * Form-based catalog editing with live lint.
 *
 * The model holds a working copy of one catalog document. Field edits mark
 * it dirty; the requirement-expression field and structural edits trigger a
 * lint round-trip whose findings render inline. Saving is gated three ways:
 * there must be edits, the version must be bumped (stored catalogs are
 * immutable), and the latest lint must be clean of errors. Save re-lints
 * before posting so a stale "ok" can never slip a bad catalog through.
 */

import type { ApiClient } from './api';
import type { AuditResult, CatalogDoc, Finding, LintResponse, PhaseDoc } from './types';

export class SaveBlockedError extends Error {
  constructor(message: string, readonly findings: Finding[] = []) {
    super(message);
    this.name = 'SaveBlockedError';
  }
}

function clone<T>(doc: T): T {
  return JSON.parse(JSON.stringify(doc)) as T;
}

export function emptyPhase(id: string): PhaseDoc {
  return {
    id,
    title: '',
    rubric: '',
    parents: [],
    critical_parents: [],
    critical_rationale: {},
    precedence_policy: 'strict',
    low_harm: false,
    ack_required: false,
    required: 'true',
    graded_threshold: null,
  };
}

export class CatalogEditorModel {
  doc: CatalogDoc;
  lastLint: LintResponse | null = null;
  savedVersion: string | null = null;
  private readonly loadedFrom: string;
  private readonly loadedVersion: string;

  constructor(private readonly api: ApiClient, doc: CatalogDoc) {
    this.doc = clone(doc);
    this.loadedFrom = JSON.stringify(doc);
    this.loadedVersion = doc.version;
  }

  get dirty(): boolean {
    return JSON.stringify(this.doc) !== this.loadedFrom;
  }

  get versionBumped(): boolean {
    return this.doc.version !== this.loadedVersion;
  }

  get lintErrors(): Finding[] {
    return (this.lastLint?.findings ?? []).filter((f) => f.severity === 'error');
  }

  /** Save stays disabled without edits, a version bump, and a clean lint. */
  get canSave(): boolean {
    return this.dirty && this.versionBumped && this.lastLint !== null
      && this.lastLint.ok;
  }

  phase(id: string): PhaseDoc {
    const found = this.doc.phases.find((ph) => ph.id === id);
    if (!found) {
      throw new Error(`no phase ${id} in the working copy`);
    }
    return found;
  }

  setVersion(version: string): void {
    this.doc.version = version;
  }

  setRequirement(id: string, expression: string): void {
    this.phase(id).required = expression;
  }

  setPhaseField<K extends keyof PhaseDoc>(id: string, field: K, value: PhaseDoc[K]): void {
    this.phase(id)[field] = value;
  }

  addPhase(id: string): void {
    this.doc.phases.push(emptyPhase(id));
  }

  removePhase(id: string): void {
    this.doc.phases = this.doc.phases.filter((ph) => ph.id !== id);
    for (const ph of this.doc.phases) {
      ph.parents = ph.parents.filter((parent) => parent !== id);
      ph.critical_parents = ph.critical_parents.filter((parent) => parent !== id);
      delete ph.critical_rationale[id];
    }
  }

  setParents(id: string, parents: string[]): void {
    const ph = this.phase(id);
    ph.parents = [...parents];
    ph.critical_parents = ph.critical_parents.filter((p) => parents.includes(p));
    for (const key of Object.keys(ph.critical_rationale)) {
      if (!ph.critical_parents.includes(key)) {
        delete ph.critical_rationale[key];
      }
    }
  }

  /** Flip one parent edge in or out of the safety-critical subset. */
  toggleCriticalParent(childId: string, parentId: string, rationale = ''): void {
    const ph = this.phase(childId);
    if (ph.critical_parents.includes(parentId)) {
      ph.critical_parents = ph.critical_parents.filter((p) => p !== parentId);
      delete ph.critical_rationale[parentId];
    } else {
      ph.critical_parents.push(parentId);
      ph.critical_rationale[parentId] = rationale;
    }
  }

  /** Live lint: called on expression blur and after structural edits. */
  async lintNow(): Promise<LintResponse> {
    this.lastLint = await this.api.lint(this.doc);
    return this.lastLint;
  }

  async save(): Promise<string> {
    if (!this.dirty) {
      throw new SaveBlockedError('no edits to save');
    }
    if (!this.versionBumped) {
      throw new SaveBlockedError(
        `stored catalogs are immutable; bump the version (still ${this.doc.version})`);
    }
    const lint = await this.lintNow();
    if (!lint.ok) {
      throw new SaveBlockedError(
        'catalog has lint errors', this.lintErrors);
    }
    const created = await this.api.createCatalog(this.doc);
    this.savedVersion = created.version;
    return created.version;
  }

  /** One click: re-audit the given calls under the saved version. */
  async reaudit(dialogueIds: string[]): Promise<AuditResult[]> {
    if (!this.savedVersion) {
      throw new SaveBlockedError('save the catalog before re-auditing');
    }
    const response = await this.api.reaudit(dialogueIds, this.savedVersion);
    return response.results;
  }
}
