/** Page shell: a dashboard at #/ and one page per session at #/s/<id>.
 * The session page owns the banner slot and the screen mount point; every
 * redraw starts from a fresh get_state response, so the DOM never shows a
 * state the server has not confirmed. */

import { Offline, knownTokens, makeClient } from './api.js';
import type { Client, SessionState } from './api.js';
import { clear, el } from './dom.js';
import type { BannerKind, SessionCtx } from './ctx.js';
import { renderInterview } from './interview.js';
import { renderStage } from './stage.js';
import {
  isNotFound,
  progressCounts,
  renderDashboard,
  renderNotFound,
} from './dashboard.js';

function drawHeader(header: HTMLElement, state: SessionState): void {
  clear(header);
  const c = progressCounts(state);
  header.append(
    el('h1', {}, 'Session ', el('code', {}, state.session_id)),
    el(
      'p',
      { class: 'progress' },
      `${state.status} | interviews ${c.queriesDone}/${c.queryBudget} | ` +
        `stages ${c.stagesDone}/${c.numStages} | recruited ${c.committed}`,
    ),
  );
}

export async function mountSession(
  root: HTMLElement,
  client: Client,
  sessionId: string,
): Promise<SessionCtx> {
  clear(root);
  const header = el('header', { class: 'session-header' });
  const bannerSlot = el('div', { class: 'banner-slot' });
  const body = el('main', { class: 'screen' });
  root.append(header, bannerSlot, body);

  const ctx: SessionCtx = {
    client,
    sessionId,
    tokens: new Set<string>(),
    body,
    banner(kind: BannerKind, text: string) {
      clear(bannerSlot);
      bannerSlot.append(el('div', { class: `banner ${kind}` }, text));
    },
    clearBanner() {
      clear(bannerSlot);
    },
    async refresh() {
      await draw();
    },
  };

  async function draw(): Promise<void> {
    let state: SessionState;
    try {
      state = await client.getState(sessionId);
    } catch (err) {
      if (isNotFound(err)) {
        renderNotFound(root, sessionId);
        return;
      }
      if (err instanceof Offline) {
        ctx.banner('offline', 'Server unreachable.');
        return;
      }
      throw err;
    }
    try {
      for (const t of knownTokens(await client.getEvents(sessionId))) {
        ctx.tokens.add(t);
      }
    } catch {
      // autocomplete is a convenience; the screen still works without it
    }
    drawHeader(header, state);
    if (state.status === 'collecting') {
      await renderInterview(ctx);
    } else {
      await renderStage(ctx, state);
    }
  }

  await draw();
  return ctx;
}

export interface App {
  route(hash: string): Promise<void>;
  openSession(sessionId: string): Promise<void>;
}

export function createApp(root: HTMLElement, client: Client): App {
  let currentKey: string | null = null;
  const open = async (sessionId: string) => {
    currentKey = `s/${sessionId}`;
    if (typeof location !== 'undefined') {
      location.hash = `#/${currentKey}`;
    }
    await mountSession(root, client, sessionId);
  };
  return {
    async route(hash: string) {
      const match = /^#\/s\/([A-Za-z0-9_-]+)/.exec(hash);
      if (match) {
        const key = `s/${match[1]}`;
        if (key === currentKey) return; // already showing it
        currentKey = key;
        await mountSession(root, client, match[1]!);
      } else {
        currentKey = null;
        await renderDashboard({
          client,
          root,
          openSession: (id) => void open(id),
        });
      }
    },
    openSession: open,
  };
}

export function bootstrap(root: HTMLElement, base: string): App {
  const app = createApp(root, makeClient(base));
  void app.route(location.hash);
  window.addEventListener('hashchange', () => void app.route(location.hash));
  return app;
}
