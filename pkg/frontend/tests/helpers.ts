import type { SessionEvent, SessionState } from '../src/api.js';

export const SID = 'ab12cd34ef56ab78';

export function mkState(over: Partial<SessionState> = {}): SessionState {
  return {
    session_id: SID,
    status: 'collecting',
    strategy: 'change',
    stage: 1,
    num_stages: 2,
    stage_budgets: [1, 1],
    committed_stages: [],
    invited_stages: [],
    pending: [],
    observed: { nodes: 6, edges: 0, queried: [] },
    remaining: { queries: 4, stages: 2 },
    ...over,
  };
}

export function mkEvents(roster = ['m0', 'm1', 'm2', 'm3', 'm4', 'm5']): SessionEvent[] {
  return [{ kind: 'session-created', ts: 0, roster }];
}
