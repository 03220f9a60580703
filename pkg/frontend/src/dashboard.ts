/** Landing view: every session the server knows about, with the progress
 * numbers a coordinator scans for (interviews done, stages done, leaders
 * recruited). All counts come straight from session state responses. */

import { ApiFault, Offline } from './api.js';
import type { Client, SessionState } from './api.js';
import { clear, el } from './dom.js';

export interface DashboardCtx {
  client: Client;
  root: HTMLElement;
  openSession(sessionId: string): void;
}

export function progressCounts(state: SessionState) {
  const queriesDone = state.observed.queried.length;
  return {
    queriesDone,
    queryBudget: queriesDone + state.remaining.queries,
    stagesDone:
      state.status === 'complete' ? state.num_stages : state.stage - 1,
    numStages: state.num_stages,
    committed: state.committed_stages.reduce((n, s) => n + s.length, 0),
  };
}

export async function renderDashboard(ctx: DashboardCtx): Promise<void> {
  clear(ctx.root);
  ctx.root.append(el('h1', {}, 'Intervention sessions'));
  let summaries;
  try {
    summaries = await ctx.client.listSessions();
  } catch (err) {
    if (err instanceof Offline) {
      ctx.root.append(
        el('div', { class: 'banner offline' }, 'Server unreachable.'),
      );
      return;
    }
    throw err;
  }
  if (!summaries.length) {
    ctx.root.append(el('p', { class: 'empty' }, 'No sessions yet.'));
    return;
  }
  const table = el('table', { class: 'sessions' });
  table.append(
    el(
      'tr',
      {},
      ...['session', 'status', 'queries', 'stages', 'recruited', 'observed'].map(
        (h) => el('th', {}, h),
      ),
    ),
  );
  for (const summary of summaries) {
    const state = await ctx.client.getState(summary.session_id);
    const c = progressCounts(state);
    const link = el('a', { href: `#/s/${state.session_id}` }, state.session_id);
    link.addEventListener('click', (ev) => {
      ev.preventDefault();
      ctx.openSession(state.session_id);
    });
    table.append(
      el(
        'tr',
        { 'data-session': state.session_id },
        el('td', {}, link),
        el('td', { class: 'status' }, state.status),
        el('td', { class: 'queries' }, `${c.queriesDone}/${c.queryBudget}`),
        el('td', { class: 'stages' }, `${c.stagesDone}/${c.numStages}`),
        el('td', { class: 'committed' }, String(c.committed)),
        el(
          'td',
          { class: 'observed' },
          `${state.observed.nodes} members, ${state.observed.edges} ties`,
        ),
      ),
    );
  }
  ctx.root.append(table);
}

export function renderNotFound(root: HTMLElement, sessionId: string): void {
  clear(root);
  root.append(
    el('h1', {}, 'Unknown session'),
    el('p', {}, 'No session ', el('code', {}, sessionId), ' on this server.'),
  );
}

export function isNotFound(err: unknown): boolean {
  return err instanceof ApiFault && err.status === 404;
}
