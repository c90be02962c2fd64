/**
 * HTML renderers. Pure string-in/string-out so they test in node without a
 * DOM; the app shell assigns the results to innerHTML. Every highlight maps
 * to a stored evidence span and every verdict badge echoes a service
 * decision field verbatim.
 */

import { describeTransition, type DecisionDiffRow } from './diff';
import {
  formatMark,
  type AuditResult,
  type Decision,
  type DialogueDoc,
  type EdgeResult,
  type Finding,
  type PhaseRow,
  type ReviewItem,
} from './types';

export function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
    .replaceAll("'", '&#39;');
}

function passFail(ok: boolean): string {
  return ok
    ? '<span class="badge pass">PASS</span>'
    : '<span class="badge fail">FAIL</span>';
}

/**
 * Transcript with per-turn phase markers: s(P)/e(P) chips where a row's
 * start or finish lands, and the evidence quote wrapped in <mark> inside
 * the turns its span covers.
 */
export function renderTranscript(dialogue: DialogueDoc, rows: PhaseRow[]): string {
  const startsAt = new Map<number, string[]>();
  const finishesAt = new Map<number, string[]>();
  for (const row of rows) {
    if (row.start !== null) {
      startsAt.set(row.start, [...(startsAt.get(row.start) ?? []), row.phase_id]);
    }
    if (row.finish !== null) {
      finishesAt.set(row.finish, [...(finishesAt.get(row.finish) ?? []), row.phase_id]);
    }
  }

  const pieces: string[] = ['<ol class="transcript">'];
  for (const turn of dialogue.turns) {
    const chips: string[] = [];
    for (const pid of startsAt.get(turn.t) ?? []) {
      chips.push(`<span class="chip start">s(${escapeHtml(pid)})</span>`);
    }
    for (const pid of finishesAt.get(turn.t) ?? []) {
      chips.push(`<span class="chip finish">e(${escapeHtml(pid)})</span>`);
    }

    let text = escapeHtml(turn.text);
    for (const row of rows) {
      for (const span of row.evidence) {
        if (turn.t < span.first || turn.t > span.last || !span.quote) {
          continue;
        }
        const quote = escapeHtml(span.quote);
        if (text.includes(quote)) {
          text = text.replace(
            quote,
            `<mark data-phase="${escapeHtml(row.phase_id)}" ` +
              `title="${escapeHtml(span.note)}">${quote}</mark>`,
          );
        }
      }
    }
    pieces.push(
      `<li class="turn ${turn.role}" data-turn="${turn.t}">` +
        `<span class="turn-no">T${turn.t}</span>` +
        `<span class="role">${turn.role}</span> ${chips.join('')}` +
        `<span class="text">${text}</span></li>`,
    );
  }
  pieces.push('</ol>');
  return pieces.join('');
}

export function renderRowTable(rows: PhaseRow[]): string {
  const body = rows
    .map((row) => {
      const required =
        row.required === null ? '—' : row.required ? 'yes' : 'no';
      return (
        `<tr data-phase="${escapeHtml(row.phase_id)}">` +
        `<td>${escapeHtml(row.phase_id)}</td>` +
        `<td>${formatMark(row.start)}</td>` +
        `<td>${formatMark(row.finish)}</td>` +
        `<td>${row.verdict}</td>` +
        `<td>${required}</td></tr>`
      );
    })
    .join('');
  return (
    '<table class="rows"><thead><tr>' +
    '<th>phase</th><th>s</th><th>e</th><th>v</th><th>required</th>' +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderDecisionBanner(decision: Decision): string {
  const verdict = decision.call_success
    ? '<strong class="accepted">ACCEPTED</strong>'
    : '<strong class="rejected">REJECTED</strong>';
  return (
    `<div class="banner ${decision.call_success ? 'ok' : 'bad'}">${verdict}` +
    ` — Coverage ${passFail(decision.coverage)},` +
    ` OrderSafe ${passFail(decision.order_safe)}</div>`
  );
}

export function renderEdgeList(edges: EdgeResult[]): string {
  if (!edges.length) {
    return '<p class="edges-empty">no critical edges in this catalog</p>';
  }
  const items = edges
    .map((edge) => {
      const symbol = edge.policy === 'strict' ? '&lt;' : '≤';
      return (
        `<li class="edge ${edge.ok ? 'ok' : 'bad'}">` +
        `${passFail(edge.ok)} ${escapeHtml(edge.parent)}→${escapeHtml(edge.child)}` +
        ` (e=${formatMark(edge.parent_finish)} ${symbol}` +
        ` s=${formatMark(edge.child_start)})</li>`
      );
    })
    .join('');
  return `<ul class="edges">${items}</ul>`;
}

export function renderQueue(
  items: ReviewItem[],
  isReviewed: (item: ReviewItem) => boolean = () => false,
): string {
  if (!items.length) {
    return '<p class="queue-empty">review queue is empty</p>';
  }
  const body = items
    .map((item, index) => {
      const state = isReviewed(item) ? 'reviewed' : 'pending';
      return (
        `<li class="queue-item ${state}" data-index="${index}">` +
        `<span class="reason ${item.reason}">${item.reason}</span> ` +
        `<span class="phase">${escapeHtml(item.phase_id)}</span> ` +
        `<span class="note">${escapeHtml(item.excerpt.note || item.excerpt.quote)}</span> ` +
        `<span class="audit">${escapeHtml(item.audit_id)}</span></li>`
      );
    })
    .join('');
  return `<ul class="queue">${body}</ul>`;
}

export function renderSupersession(result: AuditResult): string {
  const link = result.supersedes
    ? ` supersedes <a href="#audit/${escapeHtml(result.supersedes)}">` +
      `${escapeHtml(result.supersedes)}</a>`
    : '';
  return (
    `<div class="superseding">${renderDecisionBanner(result.decision)}` +
    `<p class="provenance">record ${escapeHtml(result.audit_id)}${link}</p></div>`
  );
}

export function renderFindings(findings: Finding[]): string {
  if (!findings.length) {
    return '<p class="lint-clean">no findings</p>';
  }
  const items = findings
    .map(
      (f) =>
        `<li class="finding ${f.severity}"><code>${escapeHtml(f.rule)}</code> ` +
        `at ${escapeHtml(f.location)}: ${escapeHtml(f.message)}</li>`,
    )
    .join('');
  return `<ul class="findings">${items}</ul>`;
}

/** Three columns per call — old decision, new decision — flips first. */
export function renderDiffTable(rows: DecisionDiffRow[]): string {
  if (!rows.length) {
    return '<p class="diff-empty">nothing re-audited yet</p>';
  }
  const body = rows
    .map((row) => {
      const cells = [
        `CallSuccess ${describeTransition(row.before.call_success, row.after.call_success)}`,
        `Coverage ${describeTransition(row.before.coverage, row.after.coverage)}`,
        `OrderSafe ${describeTransition(row.before.order_safe, row.after.order_safe)}`,
      ];
      return (
        `<tr class="${row.flipped ? 'flipped' : 'unchanged'}">` +
        `<td>${escapeHtml(row.dialogueId)}</td>` +
        `<td>${renderDecisionBanner(row.before)}</td>` +
        `<td>${renderDecisionBanner(row.after)}<br>` +
        `<small>${cells.join(' · ')}</small></td></tr>`
      );
    })
    .join('');
  return (
    '<table class="diff"><thead><tr>' +
    '<th>call</th><th>old decision</th><th>new decision</th>' +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}
