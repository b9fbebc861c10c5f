import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // the integration suite trains a real session behind the service
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
