import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    testTimeout: 120_000,
    hookTimeout: 120_000,
    // the server-backed suites each spawn their own service instance, so
    // files can run in parallel without sharing journals
  },
});
