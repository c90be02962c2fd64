/**
 * Decision diffs for the re-audit workflow: old record vs superseding
 * record per call, flips sorted to the top so the effect of a catalog edit
 * is visible at a glance.
 */

import type { AuditResult, Decision } from './types';

export interface FieldFlip {
  coverage: boolean;
  orderSafe: boolean;
  callSuccess: boolean;
}

export interface DecisionDiffRow {
  dialogueId: string;
  beforeAuditId: string;
  afterAuditId: string;
  before: Decision;
  after: Decision;
  flips: FieldFlip;
  flipped: boolean;
}

export function buildDecisionDiff(
  before: AuditResult[],
  after: AuditResult[],
): DecisionDiffRow[] {
  const previous = new Map(before.map((result) => [result.dialogue_id, result]));
  const rows: DecisionDiffRow[] = [];
  for (const result of after) {
    const old = previous.get(result.dialogue_id);
    if (!old) {
      continue;
    }
    const flips: FieldFlip = {
      coverage: old.decision.coverage !== result.decision.coverage,
      orderSafe: old.decision.order_safe !== result.decision.order_safe,
      callSuccess: old.decision.call_success !== result.decision.call_success,
    };
    rows.push({
      dialogueId: result.dialogue_id,
      beforeAuditId: old.audit_id,
      afterAuditId: result.audit_id,
      before: old.decision,
      after: result.decision,
      flips,
      flipped: flips.coverage || flips.orderSafe || flips.callSuccess,
    });
  }
  rows.sort((a, b) => {
    if (a.flipped !== b.flipped) {
      return a.flipped ? -1 : 1;
    }
    return a.dialogueId.localeCompare(b.dialogueId);
  });
  return rows;
}

export function describeTransition(before: boolean, after: boolean): string {
  if (before === after) {
    return before ? 'PASS' : 'FAIL';
  }
  return `${before ? 'PASS' : 'FAIL'}→${after ? 'PASS' : 'FAIL'}`;
}
