import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the e2e file boots the real restoration service once per run
    testTimeout: 60_000,
    hookTimeout: 120_000,
  },
});
