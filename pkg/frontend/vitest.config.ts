import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    globalSetup: ["tests/e2e_setup.ts"],
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
