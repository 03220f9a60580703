import { ApiFault, Offline } from './api.js';
import type { SessionCtx } from './ctx.js';

/** Shared screen error policy. A 409 means the client's picture is stale:
 * say so and reload from the server; never re-send the rejected write. */
export function handleFault(ctx: SessionCtx, err: unknown): void {
  if (err instanceof ApiFault && err.status === 409) {
    ctx.banner(
      'resync',
      `Out of step with the server (${err.body.message}); reloading.`,
    );
    void ctx.refresh();
  } else if (err instanceof Offline) {
    ctx.banner('offline', 'Server unreachable.');
  } else if (err instanceof ApiFault) {
    ctx.banner('error', err.body.message);
  } else {
    throw err;
  }
}
