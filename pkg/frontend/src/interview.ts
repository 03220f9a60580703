/** Interview workflow: the server picks who to talk to, the coordinator
 * types in the contacts that person names, submit sends them back. The
 * screen never chooses an interviewee itself and never retries a rejected
 * submission; on conflict it shows the re-sync banner and reloads. */

import { clear, el } from './dom.js';
import type { SessionCtx } from './ctx.js';
import { handleFault } from './faults.js';

export async function renderInterview(ctx: SessionCtx): Promise<void> {
  clear(ctx.body);
  let next;
  try {
    next = await ctx.client.nextQuery(ctx.sessionId);
  } catch (err) {
    return handleFault(ctx, err);
  }
  if (next.done || next.node === null) {
    // interview budget spent; the session has moved on to planning
    await ctx.refresh();
    return;
  }

  const respondent = next.node;
  const contacts = new Set<string>();

  const heading = el('h2', {}, 'Interview ', el('code', {}, respondent));
  const meta = el(
    'p',
    { class: 'meta' },
    `phase ${next.phase} pick, ${next.remaining} interviews left after this one`,
  );

  const list = el('ul', { class: 'contact-list' });
  const redrawContacts = () => {
    clear(list);
    for (const token of [...contacts].sort()) {
      const drop = el('button', { type: 'button', class: 'remove' }, 'remove');
      drop.addEventListener('click', () => {
        contacts.delete(token);
        redrawContacts();
      });
      list.append(el('li', {}, el('code', {}, token), ' ', drop));
    }
  };

  const datalist = el('datalist', { id: 'known-tokens' });
  for (const token of [...ctx.tokens].sort()) {
    datalist.append(el('option', { value: token }));
  }
  const input = el('input', {
    type: 'text',
    list: 'known-tokens',
    placeholder: 'contact id',
    'aria-label': 'contact id',
  });
  const addButton = el('button', { type: 'button', class: 'add' }, 'Add contact');
  const add = () => {
    const token = input.value.trim();
    if (!token) return;
    contacts.add(token); // a Set, so double entry of the same id is a no-op
    input.value = '';
    redrawContacts();
  };
  addButton.addEventListener('click', add);
  input.addEventListener('keydown', (ev) => {
    if ((ev as KeyboardEvent).key === 'Enter') {
      ev.preventDefault();
      add();
    }
  });

  const submit = el(
    'button',
    { type: 'button', class: 'submit' },
    'Record interview',
  );
  submit.addEventListener('click', async () => {
    submit.disabled = true;
    try {
      // zero contacts is a legitimate answer
      const res = await ctx.client.postQueryResult(
        ctx.sessionId,
        respondent,
        [...contacts].sort(),
      );
      ctx.clearBanner();
      for (const token of res.new_members) ctx.tokens.add(token);
      ctx.tokens.add(respondent);
      await ctx.refresh();
    } catch (err) {
      submit.disabled = false;
      handleFault(ctx, err);
    }
  });

  ctx.body.append(
    heading,
    meta,
    el('div', { class: 'contact-entry' }, input, datalist, addButton),
    list,
    submit,
  );
}
