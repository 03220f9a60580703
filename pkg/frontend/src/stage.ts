/** Stage workflow: ask the server to plan the next invitation round, show
 * the recommended invitees with their worst-case diagnostics, then record
 * who actually showed up. Attendance toggles all start off; an empty
 * check-in (nobody came) is submittable. Completed sessions render a
 * read-only summary. */

import type { PlanResponse, SessionState } from './api.js';
import { clear, el } from './dom.js';
import type { SessionCtx } from './ctx.js';
import { handleFault } from './faults.js';

export async function renderStage(
  ctx: SessionCtx,
  state: SessionState,
): Promise<void> {
  clear(ctx.body);
  if (state.status === 'complete') {
    renderSummary(ctx, state);
    return;
  }
  if (state.status === 'awaiting-attendance') {
    // plan-stage is idempotent while an invitation is outstanding, so a
    // reloaded client can recover the full plan payload this way
    try {
      const plan = await ctx.client.planStage(ctx.sessionId);
      renderCheckIn(ctx, plan);
    } catch (err) {
      handleFault(ctx, err);
    }
    return;
  }

  const heading = el(
    'h2',
    {},
    `Stage ${state.stage} of ${state.num_stages}`,
  );
  const button = el('button', { type: 'button', class: 'plan' }, 'Plan stage');
  button.addEventListener('click', async () => {
    button.disabled = true;
    try {
      const plan = await ctx.client.planStage(ctx.sessionId);
      ctx.clearBanner();
      if (plan.status === 'complete') {
        // nobody left to invite; the session just ended
        await ctx.refresh();
        return;
      }
      clear(ctx.body);
      ctx.body.append(heading);
      renderCheckIn(ctx, plan);
    } catch (err) {
      button.disabled = false;
      handleFault(ctx, err);
    }
  });
  ctx.body.append(heading, button);
}

function renderCheckIn(ctx: SessionCtx, plan: PlanResponse): void {
  const section = el('section', { class: 'check-in' });
  section.append(el('h3', {}, `Invitees, stage ${plan.stage}`));

  if (plan.worst_value !== null) {
    const parts: string[] = [
      `worst-case value ${plan.worst_value.toFixed(3)}`,
    ];
    if (plan.worst_scenario !== null) {
      parts.push(`at p=${plan.worst_scenario}`);
    }
    section.append(el('p', { class: 'diagnostics' }, parts.join(' ')));
    if (plan.scenario_values !== null) {
      section.append(
        el(
          'p',
          { class: 'diagnostics' },
          'per-scenario: ' +
            plan.scenario_values.map((v) => v.toFixed(3)).join(', '),
        ),
      );
    }
  }

  const boxes = new Map<string, HTMLInputElement>();
  const list = el('ul', { class: 'invitees' });
  for (const token of plan.invited) {
    const box = el('input', { type: 'checkbox', 'data-token': token });
    boxes.set(token, box);
    list.append(el('li', {}, el('label', {}, box, ' ', el('code', {}, token))));
  }
  section.append(list);

  const submit = el(
    'button',
    { type: 'button', class: 'attendance' },
    'Record attendance',
  );
  submit.addEventListener('click', async () => {
    submit.disabled = true;
    const attended = [...boxes.entries()]
      .filter(([, box]) => box.checked)
      .map(([token]) => token);
    try {
      await ctx.client.postAttendance(ctx.sessionId, attended);
      ctx.clearBanner();
      await ctx.refresh();
    } catch (err) {
      submit.disabled = false;
      handleFault(ctx, err);
    }
  });
  section.append(submit);
  ctx.body.append(section);
}

function renderSummary(ctx: SessionCtx, state: SessionState): void {
  const section = el('section', { class: 'summary' });
  section.append(el('h2', {}, 'Intervention complete'));
  const committed = state.committed_stages.flat();
  section.append(
    el(
      'p',
      {},
      `${committed.length} peer leaders recruited over ` +
        `${state.committed_stages.length} stages (${state.strategy}).`,
    ),
  );
  state.committed_stages.forEach((stage, i) => {
    const item = el('p', { class: 'stage-row' }, `Stage ${i + 1}: `);
    if (stage.length) {
      stage.forEach((token, j) => {
        if (j > 0) item.append(', ');
        item.append(el('code', {}, token));
      });
    } else {
      item.append('nobody attended');
    }
    section.append(item);
  });
  ctx.body.append(section);
}
