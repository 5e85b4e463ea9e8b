import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 60_000,
    // the e2e suite drives one shared live session; keep file order stable
    fileParallelism: false,
  },
});
