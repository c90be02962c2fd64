/**
 * Review-queue workflow: browse escalated items, open the audit with its
 * transcript, then confirm (local only, nothing is written) or override
 * with a rationale. An override posts to the service and the superseding
 * record comes back for rendering; the console itself never re-decides.
 */

import type { ApiClient } from './api';
import type { AuditRecord, AuditResult, ReviewItem } from './types';

export interface OverrideDraft {
  phaseId: string;
  newVerdict: number;
  reviewer: string;
  rationale: string;
}

function itemKey(item: ReviewItem): string {
  return `${item.audit_id}:${item.phase_id}:${item.reason}`;
}

export class ReviewQueueController {
  items: ReviewItem[] = [];
  openItem: ReviewItem | null = null;
  openRecord: AuditRecord | null = null;
  superseding: AuditResult | null = null;
  private reviewed = new Set<string>();

  constructor(private readonly api: ApiClient) {}

  async load(): Promise<ReviewItem[]> {
    this.items = (await this.api.reviewQueue()).items;
    return this.items;
  }

  async open(item: ReviewItem): Promise<AuditRecord> {
    this.openItem = item;
    this.superseding = null;
    this.openRecord = await this.api.getAudit(item.audit_id);
    return this.openRecord;
  }

  /** Confirm the verdict as stored: reviewed locally, no new record. */
  confirm(): void {
    if (this.openItem) {
      this.reviewed.add(itemKey(this.openItem));
    }
  }

  isReviewed(item: ReviewItem): boolean {
    return this.reviewed.has(itemKey(item));
  }

  get pendingCount(): number {
    return this.items.filter((item) => !this.isReviewed(item)).length;
  }

  /** The submit button stays disabled until this returns true. */
  canSubmitOverride(draft: OverrideDraft): boolean {
    return (
      this.openItem !== null &&
      draft.phaseId.length > 0 &&
      draft.rationale.trim().length > 0 &&
      draft.reviewer.trim().length > 0
    );
  }

  async submitOverride(draft: OverrideDraft): Promise<AuditResult> {
    if (!this.canSubmitOverride(draft)) {
      throw new Error('override needs an open item, a reviewer, and a rationale');
    }
    const item = this.openItem as ReviewItem;
    const result = await this.api.postOverride(item.audit_id, {
      phase_id: draft.phaseId,
      new_verdict: draft.newVerdict,
      reviewer: draft.reviewer,
      rationale: draft.rationale,
    });
    this.superseding = result;
    this.reviewed.add(itemKey(item));
    return result;
  }
}
