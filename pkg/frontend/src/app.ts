/**
 * Browser shell: wires the controllers to a three-tab page (queue, audit
 * detail, catalog editor). All state lives in the controllers; this file
 * only moves strings into innerHTML and events back out.
 */

import { ApiClient } from './api';
import { buildDecisionDiff } from './diff';
import { CatalogEditorModel, SaveBlockedError } from './editor';
import { ReviewQueueController } from './queue';
import {
  renderDecisionBanner,
  renderDiffTable,
  renderEdgeList,
  renderFindings,
  renderQueue,
  renderRowTable,
  renderSupersession,
  renderTranscript,
} from './render';
import type { AuditResult, ReviewItem } from './types';

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function inputValue(id: string): string {
  return (el(id) as HTMLInputElement).value;
}

export async function boot(): Promise<void> {
  const base = (document.body.dataset.apiBase ?? 'http://127.0.0.1:8400').replace(/\/$/, '');
  const api = new ApiClient(base);
  const queue = new ReviewQueueController(api);

  const refreshQueue = async () => {
    const items = await queue.load();
    el('queue-panel').innerHTML = renderQueue(items, (item) => queue.isReviewed(item));
    document.querySelectorAll<HTMLElement>('.queue-item').forEach((node) => {
      node.addEventListener('click', () => {
        const item = items[Number(node.dataset.index)];
        if (item) {
          void openItem(item);
        }
      });
    });
  };

  const renderOverrideState = () => {
    const draft = {
      phaseId: queue.openItem?.phase_id ?? '',
      newVerdict: Number(inputValue('override-verdict') || '0'),
      reviewer: inputValue('override-reviewer'),
      rationale: inputValue('override-rationale'),
    };
    (el('override-submit') as HTMLButtonElement).disabled =
      !queue.canSubmitOverride(draft);
    return draft;
  };

  const openItem = async (item: ReviewItem) => {
    const record = await queue.open(item);
    el('audit-banner').innerHTML = renderDecisionBanner(record.audit.decision);
    el('audit-rows').innerHTML = renderRowTable(record.audit.rows);
    el('audit-edges').innerHTML = renderEdgeList(record.audit.diagnostics.per_edge);
    el('audit-transcript').innerHTML = renderTranscript(record.dialogue, record.audit.rows);
    el('override-result').innerHTML = '';
    renderOverrideState();
  };

  el('override-rationale').addEventListener('input', renderOverrideState);
  el('override-reviewer').addEventListener('input', renderOverrideState);
  el('override-submit').addEventListener('click', () => {
    const draft = renderOverrideState();
    void queue.submitOverride(draft).then((result: AuditResult) => {
      el('override-result').innerHTML = renderSupersession(result);
      return refreshQueue();
    });
  });
  el('confirm-button').addEventListener('click', () => {
    queue.confirm();
    void refreshQueue();
  });

  // --- catalog editor ------------------------------------------------------

  let editor: CatalogEditorModel | null = null;

  el('editor-load').addEventListener('click', async () => {
    const version = inputValue('editor-version-input');
    const doc = await api.getCatalog(version);
    editor = new CatalogEditorModel(api, doc);
    (el('editor-json') as HTMLTextAreaElement).value = JSON.stringify(doc, null, 2);
    el('editor-findings').innerHTML = '';
  });

  const syncEditorFromTextarea = () => {
    if (!editor) {
      return;
    }
    try {
      editor.doc = JSON.parse((el('editor-json') as HTMLTextAreaElement).value);
      el('editor-parse-error').textContent = '';
    } catch (error) {
      el('editor-parse-error').textContent = String(error);
    }
  };

  el('editor-json').addEventListener('blur', async () => {
    syncEditorFromTextarea();
    if (editor) {
      const lint = await editor.lintNow();
      el('editor-findings').innerHTML = renderFindings(lint.findings);
      (el('editor-save') as HTMLButtonElement).disabled = !editor.canSave;
    }
  });

  el('editor-save').addEventListener('click', async () => {
    if (!editor) {
      return;
    }
    try {
      const version = await editor.save();
      el('editor-status').textContent = `saved as ${version}`;
    } catch (error) {
      if (error instanceof SaveBlockedError) {
        el('editor-status').textContent = error.message;
        el('editor-findings').innerHTML = renderFindings(error.findings);
      } else {
        throw error;
      }
    }
  });

  el('editor-reaudit').addEventListener('click', async () => {
    if (!editor || !editor.savedVersion) {
      el('editor-status').textContent = 'save the catalog first';
      return;
    }
    const summaries = (await api.listAudits()).audits;
    const latestByDialogue = new Map(summaries.map((s) => [s.dialogue_id, s]));
    const dialogueIds = [...latestByDialogue.keys()];
    const before = await Promise.all(
      [...latestByDialogue.values()].map((s) => api.getAudit(s.audit_id)),
    );
    const results = await editor.reaudit(dialogueIds);
    const diff = buildDecisionDiff(before.map((record) => record.audit), results);
    el('editor-diff').innerHTML = renderDiffTable(diff);
  });

  await refreshQueue();
}

if (typeof document !== 'undefined' && document.readyState !== 'loading') {
  void boot();
} else if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', () => void boot());
}
