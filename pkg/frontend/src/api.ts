/** Typed client for the session service. One function per endpoint, no
 * state of its own; every screen works from what these calls return. */

export type SessionStatus =
  | 'collecting'
  | 'planning'
  | 'awaiting-attendance'
  | 'complete';

export interface ObservedSummary {
  nodes: number;
  edges: number;
  queried: string[];
}

export interface SessionState {
  session_id: string;
  status: SessionStatus;
  strategy: string;
  stage: number;
  num_stages: number;
  stage_budgets: number[];
  committed_stages: string[][];
  invited_stages: string[][];
  pending: string[];
  observed: ObservedSummary;
  remaining: { queries: number; stages: number };
}

export interface SessionSummary {
  session_id: string;
  status: SessionStatus;
  strategy: string;
  stage: number;
  num_stages: number;
  nodes: number;
}

export interface NextQueryResponse {
  done: boolean;
  node: string | null;
  phase: number | null;
  status: string;
  remaining: number;
}

export interface QueryResultResponse {
  status: SessionStatus;
  new_members: string[];
  observed: ObservedSummary;
  remaining: number;
}

export interface PlanResponse {
  stage: number;
  invited: string[];
  result: string;
  worst_value: number | null;
  worst_scenario: number | null;
  scenario_values: number[] | null;
  status: SessionStatus;
}

export interface SessionEvent {
  kind: string;
  ts: number;
  [field: string]: unknown;
}

export interface ErrorBody {
  code: string;
  message: string;
  details?: { field?: string; problem: string }[];
}

/** Server said no: carries the HTTP status and the structured body. */
export class ApiFault extends Error {
  constructor(
    readonly status: number,
    readonly body: ErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

/** Could not reach the server at all. */
export class Offline extends Error {
  constructor(cause: unknown) {
    super('server unreachable');
    this.cause = cause;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function request<T>(
  fetchImpl: FetchLike,
  url: string,
  init?: RequestInit,
): Promise<T> {
  let res: Response;
  try {
    res = await fetchImpl(url, init);
  } catch (err) {
    throw new Offline(err);
  }
  if (!res.ok) {
    let body: ErrorBody;
    try {
      body = (await res.json()) as ErrorBody;
    } catch {
      body = { code: 'http-' + res.status, message: res.statusText };
    }
    throw new ApiFault(res.status, body);
  }
  return (await res.json()) as T;
}

function post(payload: unknown): RequestInit {
  return {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(payload),
  };
}

export interface Client {
  createSession(
    roster: string[],
    config: Record<string, unknown>,
  ): Promise<{ session_id: string; status: SessionStatus }>;
  listSessions(): Promise<SessionSummary[]>;
  getState(sessionId: string): Promise<SessionState>;
  getEvents(sessionId: string): Promise<SessionEvent[]>;
  nextQuery(sessionId: string): Promise<NextQueryResponse>;
  postQueryResult(
    sessionId: string,
    respondent: string,
    neighbors: string[],
  ): Promise<QueryResultResponse>;
  planStage(sessionId: string): Promise<PlanResponse>;
  postAttendance(sessionId: string, attended: string[]): Promise<SessionState>;
}

export function makeClient(base: string, fetchImpl?: FetchLike): Client {
  const f: FetchLike = fetchImpl ?? ((url, init) => fetch(url, init));
  const root = base.replace(/\/$/, '');
  return {
    createSession: (roster, config) =>
      request(f, `${root}/sessions`, post({ roster, config })),
    listSessions: async () => {
      const body = await request<{ sessions: SessionSummary[] }>(
        f,
        `${root}/sessions`,
      );
      return body.sessions;
    },
    getState: (id) => request(f, `${root}/sessions/${id}`),
    getEvents: async (id) => {
      const body = await request<{ events: SessionEvent[] }>(
        f,
        `${root}/sessions/${id}/events`,
      );
      return body.events;
    },
    nextQuery: (id) => request(f, `${root}/sessions/${id}/next-query`),
    postQueryResult: (id, respondent, neighbors) =>
      request(
        f,
        `${root}/sessions/${id}/query-result`,
        post({ respondent, neighbors }),
      ),
    planStage: (id) =>
      request(f, `${root}/sessions/${id}/plan-stage`, post({})),
    postAttendance: (id, attended) =>
      request(f, `${root}/sessions/${id}/attendance`, post({ attended })),
  };
}

/** Collect every token the server has acknowledged for a session: the
 * starting roster plus everyone revealed by interview results. Used for
 * contact autocomplete, never to invent state. */
export function knownTokens(events: SessionEvent[]): Set<string> {
  const tokens = new Set<string>();
  for (const ev of events) {
    if (ev.kind === 'session-created') {
      for (const t of ev.roster as string[]) tokens.add(t);
    } else if (ev.kind === 'query-result') {
      tokens.add(ev.node as string);
      for (const t of ev.neighbors as string[]) tokens.add(t);
    }
  }
  return tokens;
}
