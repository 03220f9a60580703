import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'happy-dom',
    globals: true,
    testTimeout: 30_000,
    hookTimeout: 120_000,
    // the walkthrough file spawns one real server; keep files sequential
    fileParallelism: false,
  },
});
