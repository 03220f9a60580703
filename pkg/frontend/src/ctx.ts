import type { Client } from './api.js';

export type BannerKind = 'resync' | 'offline' | 'error';

/** Everything a screen needs from the page shell. Screens render into
 * `body`, surface problems through `banner`, and hand control back by
 * calling `refresh`, which refetches server state and re-renders whatever
 * screen that state calls for. They never navigate on their own guess. */
export interface SessionCtx {
  client: Client;
  sessionId: string;
  /** Server-acknowledged tokens, for contact autocomplete. */
  tokens: Set<string>;
  body: HTMLElement;
  banner(kind: BannerKind, text: string): void;
  clearBanner(): void;
  refresh(): Promise<void>;
}
